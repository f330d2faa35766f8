#include "gicopt/placement.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <queue>
#include <sstream>
#include <thread>

#include "gicopt/error.hpp"
#include "gicopt/field_coupling.hpp"

namespace gicopt {

namespace {

using Clock = std::chrono::steady_clock;

Error usage(const std::string& what) { return Error("placement", what, ExitCode::Usage); }

std::vector<std::size_t> positions_of(const PlacementContext& ctx, const BlockerConfig& cfg) {
  std::vector<std::size_t> pos;
  for (std::size_t node : cfg.placed)
    if (auto p = ctx.net.candidate_position(node)) pos.push_back(*p);
  std::sort(pos.begin(), pos.end());
  return pos;
}

BlockerConfig config_of(const PlacementContext& ctx, const std::vector<std::size_t>& positions) {
  std::vector<std::size_t> nodes;
  for (std::size_t k : positions) nodes.push_back(ctx.net.candidates[k]);
  return BlockerConfig::from_nodes(std::move(nodes));
}

double candidate_cost(const PlacementContext& ctx, std::size_t pos) {
  return ctx.net.nodes[ctx.net.candidates[pos]].blocker_candidate->cost;
}

double tie_tol(double v) { return 1e-9 * (1.0 + std::abs(v)); }

// Strictly better, with the lexicographic tie-break on candidate positions.
bool better(double obj_a, const std::vector<std::size_t>& a, double obj_b, const std::vector<std::size_t>& b) {
  if (obj_a < obj_b - tie_tol(obj_b)) return true;
  if (obj_a > obj_b + tie_tol(obj_b)) return false;
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

OpfOptions inner_ac_options(const PlacementProblem& p) {
  OpfOptions o = p.ac;
  o.mode = SolveMode::Opf;
  o.objective = ObjectiveMode::ShedCost;
  o.shed = ShedMode::Binary;
  o.min_served_fraction = p.served_frac;
  o.max_shed_cost = p.shed_cap;
  return o;
}

ConfigEvaluation evaluate(const PlacementContext& ctx, const BlockerConfig& cfg, bool check_limits,
                          const OpfOptions* ac_override = nullptr) {
  const PlacementProblem& p = *ctx.problem;
  ConfigEvaluation ev;
  ev.count = static_cast<int>(cfg.placed.size());
  for (std::size_t node : cfg.placed) ev.blocker_cost += ctx.net.nodes[node].blocker_candidate->cost;
  if (check_limits && !within_limits(ctx, cfg)) {
    ev.reason = "outside budget or count limits";
    return ev;
  }
  try {
    if (needs_ac(p) || ac_override) {
      const OpfOptions o = ac_override ? *ac_override : inner_ac_options(p);
      CoupledSolution cs = solve_coupled(p.network, ctx.net, cfg, o);
      ev.served_fraction = served_fraction(p.network, cs.ac);
      ev.shed_cost = objective_shed_cost(cs.ac, p.network.loads);
      ev.gic = std::move(cs.gic);
      ev.ac = std::move(cs.ac);
      ev.pseudo = std::move(cs.pseudo);
    } else {
      ev.gic = solve_gic(ctx.net, cfg, 1.0);
      ev.served_fraction = 1.0;
    }
  } catch (const SingularNetworkError& e) {
    ev.reason = e.what();
    return ev;
  } catch (const DivergenceError& e) {
    ev.reason = e.what();
    return ev;
  } catch (const InfeasibleError& e) {
    ev.reason = e.what();
    return ev;
  }
  ev.gic_sq = objective_gic_sq(*ev.gic, p.gic_set);
  switch (p.objective) {
    case PlacementObjective::BlockerCost: ev.objective = ev.blocker_cost; break;
    case PlacementObjective::Shed: ev.objective = ev.shed_cost; break;
    case PlacementObjective::GicSquared: ev.objective = ev.gic_sq; break;
  }
  ev.feasible = true;
  return ev;
}

PlacementSolution make_solution(const PlacementContext& ctx, const std::vector<std::size_t>& positions,
                                const ConfigEvaluation& ev) {
  PlacementSolution s;
  s.candidates = static_cast<int>(ctx.net.candidates.size());
  for (std::size_t k : positions) {
    s.placed_nodes.push_back(ctx.net.candidates[k]);
    s.placed.push_back(ctx.net.nodes[ctx.net.candidates[k]].blocker_candidate->transformer);
  }
  s.objective = ev.objective;
  s.load_met = ev.served_fraction;
  s.blocker_cost = ev.blocker_cost;
  s.shed_cost = ev.shed_cost;
  s.gic_sq = ev.gic_sq;
  std::optional<GicSolution> before;
  try {
    before = solve_gic(ctx.net, BlockerConfig{}, 1.0);
  } catch (const SingularNetworkError&) {
  }
  for (std::size_t t = 0; t < ctx.net.transformers.size(); ++t) {
    TransformerGicReport r;
    r.transformer = ctx.net.transformers[t].transformer;
    r.i_eff_before = before ? before->transformers[t].i_eff : std::nan("");
    r.i_eff_after = ev.gic ? ev.gic->transformers[t].i_eff : std::nan("");
    s.transformers.push_back(std::move(r));
  }
  return s;
}

int thread_count() {
  if (const char* env = std::getenv("GICOPT_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Cheapest total cost of `k` candidates drawn from `pool`.
double cheapest(std::vector<double> pool, int k) {
  if (k <= 0) return 0.0;
  if (k > static_cast<int>(pool.size())) return std::numeric_limits<double>::infinity();
  std::sort(pool.begin(), pool.end());
  double s = 0.0;
  for (int i = 0; i < k; ++i) s += pool[i];
  return s;
}

// Whether some completion of `fixed` satisfies budget and count.
bool completable(const PlacementContext& ctx, const std::vector<int>& fixed) {
  const PlacementProblem& p = *ctx.problem;
  int ones = 0;
  double cost = 0.0;
  std::vector<double> free_costs;
  for (std::size_t k = 0; k < fixed.size(); ++k) {
    if (fixed[k] == 1) {
      ++ones;
      cost += candidate_cost(ctx, k);
    } else if (fixed[k] < 0) {
      free_costs.push_back(candidate_cost(ctx, k));
    }
  }
  int need = 0;
  if (p.count) {
    if (ones > *p.count) return false;
    if (p.count_sense == CountSense::Equal) {
      need = *p.count - ones;
      if (need > static_cast<int>(free_costs.size())) return false;
    }
  }
  if (p.budget && cost + cheapest(free_costs, need) > *p.budget + 1e-9) return false;
  return true;
}

}  // namespace

std::string_view to_string(PlacementObjective o) {
  switch (o) {
    case PlacementObjective::BlockerCost: return "blocker-cost";
    case PlacementObjective::Shed: return "shed";
    case PlacementObjective::GicSquared: return "gic-sq";
  }
  return "?";
}

std::optional<PlacementObjective> parse_placement_objective(std::string_view s) {
  if (s == "blocker-cost") return PlacementObjective::BlockerCost;
  if (s == "shed") return PlacementObjective::Shed;
  if (s == "gic-sq") return PlacementObjective::GicSquared;
  return std::nullopt;
}

std::string_view to_string(Optimality o) {
  switch (o) {
    case Optimality::Proved: return "proved";
    case Optimality::Gap: return "gap";
    case Optimality::Timeout: return "timeout";
  }
  return "?";
}

void check_problem(const PlacementProblem& p) {
  if (p.objective == PlacementObjective::Shed && !p.budget && !p.count)
    throw usage("objective 'shed' needs a budget or a blocker count");
  if (p.objective == PlacementObjective::GicSquared && !p.count)
    throw usage("objective 'gic-sq' needs a blocker count");
  if (p.count && *p.count < 0) throw usage("blocker count must be non-negative");
  if (p.budget && *p.budget < 0.0) throw usage("budget must be non-negative");
  if (p.served_frac && (*p.served_frac < 0.0 || *p.served_frac > 1.0))
    throw usage("served fraction must lie in [0, 1]");
  if (p.shed_cap && *p.shed_cap < 0.0) throw usage("shed cap must be non-negative");
  if (!(p.gap >= 0.0)) throw usage("gap must be non-negative");
  if (!p.network.gmd) throw ValidationError("missing gmd section");
}

bool needs_ac(const PlacementProblem& p) {
  return p.objective != PlacementObjective::GicSquared || p.served_frac || p.shed_cap;
}

PlacementContext make_context(const PlacementProblem& p) {
  check_problem(p);
  PlacementContext ctx;
  ctx.problem = &p;
  ctx.net = apply_field(build_dc_network(p.network), *p.network.gmd);
  return ctx;
}

bool within_limits(const PlacementContext& ctx, const BlockerConfig& cfg) {
  const PlacementProblem& p = *ctx.problem;
  const int n = static_cast<int>(cfg.placed.size());
  if (p.count) {
    if (p.count_sense == CountSense::Equal ? n != *p.count : n > *p.count) return false;
  }
  if (p.budget) {
    double cost = 0.0;
    for (std::size_t node : cfg.placed) cost += ctx.net.nodes[node].blocker_candidate->cost;
    if (cost > *p.budget + 1e-9) return false;
  }
  return true;
}

ConfigEvaluation evaluate_config(const PlacementContext& ctx, const BlockerConfig& cfg) {
  return evaluate(ctx, cfg, true);
}

double objective_gic_sq(const GicSolution& gic, GicSquareSet set) {
  double s = 0.0;
  if (set == GicSquareSet::TransformerEffective) {
    for (const auto& t : gic.transformers) s += t.i_eff * t.i_eff;
  } else {
    for (double i : gic.edge_i) s += i * i;
  }
  return s;
}

PlacementSolution enumerate_optimal(const PlacementProblem& p) {
  const auto t0 = Clock::now();
  const PlacementContext ctx = make_context(p);
  const std::size_t n = ctx.net.candidates.size();
  if (n > kMaxEnumerationCandidates)
    throw usage("enumeration is limited to " + std::to_string(kMaxEnumerationCandidates) + " candidates (case has " +
                std::to_string(n) + "); use branch-and-bound");

  std::vector<std::uint64_t> masks;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m)
    if (within_limits(ctx, BlockerConfig::from_mask(ctx.net, m))) masks.push_back(m);

  struct Best {
    std::optional<ConfigEvaluation> ev;
    std::vector<std::size_t> pos;
  };
  const int workers = std::min<int>(thread_count(), std::max<std::size_t>(1, masks.size()));
  std::vector<Best> best(workers);
  std::atomic<std::size_t> next{0};
  auto work = [&](int w) {
    for (std::size_t k = next++; k < masks.size(); k = next++) {
      const BlockerConfig cfg = BlockerConfig::from_mask(ctx.net, masks[k]);
      ConfigEvaluation ev = evaluate(ctx, cfg, true);
      if (!ev.feasible) continue;
      auto pos = positions_of(ctx, cfg);
      if (!best[w].ev || better(ev.objective, pos, best[w].ev->objective, best[w].pos)) {
        best[w].ev = std::move(ev);
        best[w].pos = std::move(pos);
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }

  Best* winner = nullptr;
  for (auto& b : best)
    if (b.ev && (!winner || better(b.ev->objective, b.pos, winner->ev->objective, winner->pos))) winner = &b;
  if (!winner) throw InfeasibleError("placement", infeasibility_certificate(ctx));

  PlacementSolution s = make_solution(ctx, winner->pos, *winner->ev);
  s.stats.evaluations = static_cast<long>(masks.size());
  s.stats.nodes = static_cast<long>(masks.size());
  s.stats.seconds = seconds_since(t0);
  s.stats.incumbents.push_back({s.stats.seconds, s.objective, 0});
  s.optimality = Optimality::Proved;
  return s;
}

PlacementSolution branch_and_bound(const PlacementProblem& p) {
  const auto t0 = Clock::now();
  const PlacementContext ctx = make_context(p);
  const std::size_t n = ctx.net.candidates.size();
  const RelaxationBounds rb = derive_bounds(ctx);

  struct QNode {
    std::vector<int> fixed;
    double bound;
    long seq;
  };
  auto cmp = [](const QNode& a, const QNode& b) {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.seq > b.seq;
  };
  std::priority_queue<QNode, std::vector<QNode>, decltype(cmp)> queue(cmp);
  long seq = 0;
  queue.push({std::vector<int>(n, -1), -std::numeric_limits<double>::infinity(), seq++});

  SearchStats stats;
  std::optional<ConfigEvaluation> inc;
  std::vector<std::size_t> inc_pos;
  std::map<std::vector<std::size_t>, std::optional<ConfigEvaluation>> cache;
  Optimality optimality = Optimality::Proved;
  bool stopped_on_gap = false;

  auto prune_tol = [&](double incumbent) {
    return std::max(tie_tol(incumbent), p.gap * std::max(1.0, std::abs(incumbent)));
  };
  auto exact = [&](const std::vector<std::size_t>& pos) -> const std::optional<ConfigEvaluation>& {
    auto it = cache.find(pos);
    if (it != cache.end()) return it->second;
    ++stats.evaluations;
    ConfigEvaluation ev = evaluate(ctx, config_of(ctx, pos), true);
    auto& slot = cache[pos];
    if (ev.feasible) slot = std::move(ev);
    return slot;
  };
  auto offer = [&](const std::vector<std::size_t>& pos) {
    const auto& ev = exact(pos);
    if (!ev) return;
    if (!inc || better(ev->objective, pos, inc->objective, inc_pos)) {
      inc = *ev;
      inc_pos = pos;
      stats.incumbents.push_back({seconds_since(t0), inc->objective, stats.nodes});
    }
  };

  // Lexicographically smallest placement the subtree can still produce: the
  // fixed blockers plus every free candidate that sorts before the last one.
  auto tie_may_improve = [&](const std::vector<int>& fixed) {
    if (p.gap > 0.0 || !inc) return false;
    int last = -1;
    for (std::size_t k = 0; k < n; ++k)
      if (fixed[k] == 1) last = static_cast<int>(k);
    std::vector<std::size_t> lexmin;
    for (std::size_t k = 0; k < n; ++k)
      if (fixed[k] == 1 || (fixed[k] < 0 && static_cast<int>(k) < last)) lexmin.push_back(k);
    return std::lexicographical_compare(lexmin.begin(), lexmin.end(), inc_pos.begin(), inc_pos.end());
  };
  auto prunable = [&](double bound, const std::vector<int>& fixed) {
    if (!inc) return false;
    const double o = inc->objective;
    if (bound > o + tie_tol(o)) return true;
    if (bound >= o - tie_tol(o)) return !tie_may_improve(fixed);
    if (bound >= o - prune_tol(o)) {
      stopped_on_gap = true;
      return true;
    }
    return false;
  };

  while (!queue.empty()) {
    if (seconds_since(t0) > p.time_limit_s) {
      optimality = Optimality::Timeout;
      break;
    }
    QNode node = queue.top();
    queue.pop();
    if (prunable(node.bound, node.fixed)) continue;
    ++stats.nodes;
    if (!completable(ctx, node.fixed)) {
      stats.log.push_back({node.fixed, std::nullopt});
      continue;
    }
    std::vector<std::size_t> free_vars, ones;
    for (std::size_t k = 0; k < n; ++k) {
      if (node.fixed[k] < 0) free_vars.push_back(k);
      if (node.fixed[k] == 1) ones.push_back(k);
    }
    if (free_vars.empty()) {
      stats.log.push_back({node.fixed, std::nullopt});
      offer(ones);
      continue;
    }

    const RelaxationResult rel = solve_relaxation(ctx, rb, node.fixed);
    stats.log.push_back({node.fixed, rel.converged ? std::optional<double>(rel.bound) : std::nullopt});
    double bound = node.bound;
    int pick = -1;
    if (rel.converged) {
      bound = std::max(bound, rel.bound);
      if (prunable(bound, node.fixed)) continue;
      double frac = 1e-6;
      for (std::size_t k : free_vars) {
        const double f = std::min(rel.z[k], 1.0 - rel.z[k]);
        if (f > frac) {
          frac = f;
          pick = static_cast<int>(k);
        }
      }
      if (pick < 0) {
        // Integral relaxation: its rounding is a candidate and may close the node.
        std::vector<std::size_t> pos = ones;
        for (std::size_t k : free_vars)
          if (rel.z[k] > 0.5) pos.push_back(k);
        std::sort(pos.begin(), pos.end());
        std::vector<int> rounded = node.fixed;
        for (std::size_t k : free_vars) rounded[k] = rel.z[k] > 0.5 ? 1 : 0;
        if (completable(ctx, rounded)) {
          offer(pos);
          const auto& ev = exact(pos);
          if (ev && ev->objective <= bound + tie_tol(bound) && !tie_may_improve(node.fixed)) continue;
        }
      }
    }
    if (pick < 0) pick = static_cast<int>(free_vars.front());
    for (int value : {1, 0}) {
      QNode child{node.fixed, bound, seq++};
      child.fixed[pick] = value;
      queue.push(std::move(child));
    }
  }

  if (!inc) {
    if (optimality == Optimality::Timeout)
      throw InfeasibleError("placement", "time limit reached before any feasible placement was found");
    throw InfeasibleError("placement", infeasibility_certificate(ctx));
  }

  PlacementSolution s = make_solution(ctx, inc_pos, *inc);
  double best_bound = s.objective;
  while (!queue.empty()) {
    best_bound = std::min(best_bound, queue.top().bound);
    queue.pop();
  }
  if (optimality != Optimality::Timeout && stopped_on_gap) optimality = Optimality::Gap;
  s.gap = std::isfinite(best_bound) ? std::max(0.0, s.objective - best_bound) / std::max(1.0, std::abs(s.objective))
                                    : std::numeric_limits<double>::infinity();
  if (optimality == Optimality::Proved) s.gap = 0.0;
  stats.seconds = seconds_since(t0);
  s.stats = std::move(stats);
  s.optimality = optimality;
  return s;
}

ConstraintReport constraint_check(const PlacementSolution& s, const PlacementProblem& p, double tol) {
  const PlacementContext ctx = make_context(p);
  std::vector<std::size_t> nodes;
  for (const Id& t : s.placed) {
    bool found = false;
    for (std::size_t node : ctx.net.candidates) {
      if (ctx.net.nodes[node].blocker_candidate->transformer == t) {
        nodes.push_back(node);
        found = true;
      }
    }
    if (!found) throw std::invalid_argument("placed transformer '" + t + "' is not a candidate");
  }
  const BlockerConfig cfg = BlockerConfig::from_nodes(nodes);
  const ConfigEvaluation ev = evaluate(ctx, cfg, false);

  ConstraintReport rep;
  auto add = [&](std::string name, bool active, double slack, bool pass) {
    rep.constraints.push_back({std::move(name), active, slack, pass});
    if (active && !pass) rep.all_pass = false;
  };
  if (p.budget) add("budget", true, *p.budget - ev.blocker_cost, *p.budget - ev.blocker_cost >= -tol);
  else add("budget", false, 0.0, true);
  if (p.count) {
    const int n = ev.count;
    if (p.count_sense == CountSense::Equal) add("count", true, -std::abs(n - *p.count), n == *p.count);
    else add("count", true, *p.count - n, n <= *p.count);
  } else {
    add("count", false, 0.0, true);
  }
  add("ac-feasible", needs_ac(p), 0.0, ev.feasible);
  if (p.shed_cap) add("shed-cap", true, *p.shed_cap - ev.shed_cost, ev.feasible && *p.shed_cap - ev.shed_cost >= -tol);
  else add("shed-cap", false, 0.0, true);
  if (p.served_frac)
    add("served-fraction", true, ev.served_fraction - *p.served_frac,
        ev.feasible && ev.served_fraction - *p.served_frac >= -tol);
  else
    add("served-fraction", false, 0.0, true);
  return rep;
}

namespace {

// Limits that kept probed placements out of the certificate.
std::string limit_note(const PlacementProblem& p) {
  std::ostringstream os;
  os << "; probes beyond";
  if (p.budget) os << " budget " << *p.budget;
  if (p.budget && p.count) os << " and";
  if (p.count) os << " count " << *p.count;
  os << " were excluded";
  return os.str();
}

}  // namespace

std::string infeasibility_certificate(const PlacementContext& ctx) {
  const PlacementProblem& p = *ctx.problem;
  const int n = static_cast<int>(ctx.net.candidates.size());
  std::ostringstream os;
  if (p.count && p.count_sense == CountSense::Equal && *p.count > n) {
    os << "count: " << *p.count << " blockers required but the case has only " << n << " candidates";
    return os.str();
  }
  std::vector<double> costs;
  for (int k = 0; k < n; ++k) costs.push_back(candidate_cost(ctx, k));
  const int need = (p.count && p.count_sense == CountSense::Equal) ? *p.count : 0;
  const double min_cost = cheapest(costs, need);
  if (p.budget && min_cost > *p.budget + 1e-9) {
    os << "budget: the cheapest admissible placement costs " << min_cost << " > budget " << *p.budget;
    return os.str();
  }
  if (needs_ac(p)) {
    // Most load any admissible extreme configuration can serve.
    OpfOptions o = inner_ac_options(p);
    o.min_served_fraction.reset();
    o.max_shed_cost.reset();
    double best_served = -1.0;
    double best_shed = std::numeric_limits<double>::infinity();
    std::vector<std::uint64_t> probes{0};
    if (n > 0 && n < 64) probes.push_back((std::uint64_t{1} << n) - 1);
    for (int k = 0; k < n && n < 64; ++k) probes.push_back(std::uint64_t{1} << k);
    bool limited = false;
    for (std::uint64_t m : probes) {
      const BlockerConfig cfg = BlockerConfig::from_mask(ctx.net, m);
      if (!within_limits(ctx, cfg)) {
        limited = true;
        continue;
      }
      const ConfigEvaluation ev = evaluate(ctx, cfg, true, &o);
      if (!ev.feasible) continue;
      best_served = std::max(best_served, ev.served_fraction);
      best_shed = std::min(best_shed, ev.shed_cost);
    }
    if (p.served_frac && best_served < *p.served_frac) {
      os << "served-fraction: at most " << std::max(0.0, best_served) * 100.0
         << "% of load can be served by the probed placements (empty, all, singletons), below the required "
         << *p.served_frac * 100.0 << "%";
      if (limited) os << limit_note(p);
      return os.str();
    }
    if (p.shed_cap && best_shed > *p.shed_cap) {
      os << "shed-cap: least shed cost over the probed placements is " << best_shed << " > cap " << *p.shed_cap;
      if (limited) os << limit_note(p);
      return os.str();
    }
  }
  os << "no blocker configuration satisfies the active constraints (ac-feasible)";
  return os.str();
}

}  // namespace gicopt
