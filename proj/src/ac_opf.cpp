#include "gicopt/ac_opf.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include <Eigen/Dense>

#include "gicopt/error.hpp"
#include "gicopt/nlp_model.hpp"

namespace gicopt {

namespace {

struct ResolvedPseudo {
  int bus;
  double q_const, q_per_v;
};

std::vector<ResolvedPseudo> resolve(const AcData& ac, const std::vector<PseudoLoad>& pseudo) {
  std::vector<ResolvedPseudo> out;
  for (const auto& p : pseudo) {
    const int b = ac.bus_index(p.bus);
    if (b < 0) throw std::invalid_argument("pseudo-load on unknown bus '" + p.bus + "'");
    out.push_back({b, p.q_const, p.q_per_v});
  }
  return out;
}

double total_abs_load(const AcData& ac) {
  double t = 0.0;
  for (const auto& l : ac.loads) t += std::abs(l.p_d);
  return t;
}

// Served-fraction and shed-cost rows; constant rows are checked here.
bool add_shed_rows(OpfModel& m, const AcData& ac, const OpfOptions& o) {
  const double total = total_abs_load(ac);
  if (o.min_served_fraction && total > 0.0) {
    LinearTerms terms;
    double fixed = 0.0;
    for (std::size_t l = 0; l < ac.loads.size(); ++l) {
      const double w = std::abs(ac.loads[l].p_d);
      if (const auto& z = m.load_fixed(static_cast<int>(l))) fixed += w * *z;
      else terms.emplace_back(m.zd_var(static_cast<int>(l)), -w);
    }
    const double rhs = fixed - *o.min_served_fraction * total;
    if (terms.empty()) {
      if (rhs < -1e-12 * total) return false;
    } else {
      m.add_linear_le(std::move(terms), rhs);
    }
  }
  if (o.max_shed_cost) {
    LinearTerms terms;
    double constant = 0.0;
    for (std::size_t l = 0; l < ac.loads.size(); ++l) {
      const double w = ac.loads[l].shed_cost * std::abs(ac.loads[l].p_d);
      if (const auto& z = m.load_fixed(static_cast<int>(l))) {
        constant += w * (1.0 - *z);
      } else {
        constant += w;
        terms.emplace_back(m.zd_var(static_cast<int>(l)), -w);
      }
    }
    const double rhs = *o.max_shed_cost - constant;
    if (terms.empty()) {
      if (rhs < -1e-12) return false;
    } else {
      m.add_linear_le(std::move(terms), rhs);
    }
  }
  return true;
}

AcSolution extract(const NetworkCase& c, const AcData& ac, const OpfModel& m, const nlp::Vec& x,
                   const std::vector<ResolvedPseudo>& pseudo) {
  AcSolution s;
  const int nb = ac.num_busses();
  s.bus_ids = ac.bus_ids;
  s.v.resize(nb);
  s.theta.resize(nb);
  for (int i = 0; i < nb; ++i) {
    s.v[i] = x[m.v_var(i)];
    s.theta[i] = m.theta_var(i) < 0 ? 0.0 : x[m.theta_var(i)];
  }
  for (std::size_t g = 0; g < ac.gens.size(); ++g) {
    s.gen_ids.push_back(ac.gens[g].id);
    s.p_g.push_back(x[m.pg_var(static_cast<int>(g))]);
    s.q_g.push_back(x[m.qg_var(static_cast<int>(g))]);
  }
  for (const auto& br : ac.branches) {
    s.branch_ids.push_back(br.id);
    s.flows.push_back(branch_flow(s.v[br.from], s.v[br.to], s.theta[br.from], s.theta[br.to], br.g, br.b,
                                  br.b_sh));
  }
  for (std::size_t l = 0; l < ac.loads.size(); ++l) {
    s.load_ids.push_back(ac.loads[l].id);
    s.z_d.push_back(m.served_z(x, static_cast<int>(l)));
  }
  s.q_pseudo.assign(nb, 0.0);
  for (const auto& p : pseudo) s.q_pseudo[p.bus] += p.q_const + p.q_per_v * s.v[p.bus];
  (void)c;
  return s;
}

std::vector<PseudoLoad> as_pseudo(const AcData& ac, const std::vector<ResolvedPseudo>& r) {
  std::vector<PseudoLoad> out;
  for (const auto& p : r) out.push_back({ac.bus_ids[p.bus], p.q_const, p.q_per_v, {}});
  return out;
}

void certify(const NetworkCase& c, const AcData& ac, const std::vector<ResolvedPseudo>& pseudo,
             AcSolution& s) {
  const ResidualReport rep = check_residuals(c, as_pseudo(ac, pseudo), s);
  s.max_residual = std::max({rep.max_balance, rep.max_flow, rep.max_slack_angle});
  s.max_bound_violation = rep.max_bound;
}

struct Relaxed {
  AcSolution sol;
  double objective;
};

std::optional<Relaxed> solve_nlp(const NetworkCase& c, const AcData& ac, const std::vector<ResolvedPseudo>& pseudo,
                                 const OpfOptions& o, const std::vector<std::optional<double>>& load_z,
                                 double* residual_out) {
  OpfModel m(&ac, load_z);
  for (const auto& p : pseudo) m.add_pseudo_load(p.bus, p.q_const, p.q_per_v);
  if (o.objective == ObjectiveMode::GenCost) m.use_gen_cost();
  else m.use_shed_cost();
  if (!add_shed_rows(m, ac, o)) return std::nullopt;
  const nlp::Result r = nlp::solve(m, o.nlp);
  if (residual_out) *residual_out = r.max_eq_residual;
  if (!r.converged()) return std::nullopt;
  Relaxed out{extract(c, ac, m, r.x, pseudo), r.objective};
  out.sol.objective = r.objective;
  out.sol.iterations = r.iterations;
  certify(c, ac, pseudo, out.sol);
  if (out.sol.max_residual > o.residual_tol || out.sol.max_bound_violation > o.residual_tol) return std::nullopt;
  return out;
}

std::vector<std::optional<double>> initial_load_z(const AcData& ac, const OpfOptions& o) {
  std::vector<std::optional<double>> z(ac.loads.size());
  for (std::size_t l = 0; l < ac.loads.size(); ++l) {
    if (o.shed == ShedMode::Fixed || !ac.loads[l].sheddable) {
      z[l] = (o.shed == ShedMode::Fixed && l < o.load_z.size()) ? o.load_z[l] : 1.0;
    }
  }
  return z;
}

AcSolution solve_opf(const NetworkCase& c, const AcData& ac, const std::vector<ResolvedPseudo>& pseudo,
                     const OpfOptions& o) {
  const auto root_z = initial_load_z(ac, o);
  double residual = 0.0;
  auto root = solve_nlp(c, ac, pseudo, o, root_z, &residual);
  if (!root && o.min_served_fraction) {
    // Re-solve without the served-fraction row to tell an unattainable
    // requirement from a numerical failure.
    OpfOptions free = o;
    free.min_served_fraction.reset();
    free.objective = ObjectiveMode::ShedCost;
    if (free.shed == ShedMode::Binary) free.shed = ShedMode::Continuous;
    if (auto probe = solve_nlp(c, ac, pseudo, free, initial_load_z(ac, free), nullptr)) {
      const double served = served_fraction(c, probe->sol);
      if (served < *o.min_served_fraction) {
        throw InfeasibleError("ac-opf", "served-fraction: required " + std::to_string(*o.min_served_fraction) +
                                            " but the relaxation without it serves " + std::to_string(served));
      }
    }
  }
  if (!root) {
    throw DivergenceError("OPF did not converge (max balance residual " + std::to_string(residual) + ")",
                          residual);
  }
  if (o.shed != ShedMode::Binary) return root->sol;

  // Depth-first branch and bound over the shed decisions.
  constexpr double kIntTol = 1e-6;
  std::optional<AcSolution> best;
  double best_obj = std::numeric_limits<double>::infinity();
  int nodes = 0;
  struct Node {
    std::vector<std::optional<double>> z;
    std::optional<Relaxed> relaxed;
  };
  std::vector<Node> stack;
  stack.push_back({root_z, std::move(root)});
  while (!stack.empty() && nodes < o.shed_node_limit) {
    Node node = std::move(stack.back());
    stack.pop_back();
    ++nodes;
    if (!node.relaxed) node.relaxed = solve_nlp(c, ac, pseudo, o, node.z, nullptr);
    if (!node.relaxed) continue;
    const double bound = node.relaxed->objective;
    if (best && bound >= best_obj - 1e-9 * (1.0 + std::abs(best_obj))) continue;

    int pick = -1;
    double frac = kIntTol;
    for (std::size_t l = 0; l < node.z.size(); ++l) {
      if (node.z[l]) continue;
      const double zl = node.relaxed->sol.z_d[l];
      const double f = std::min(zl, 1.0 - zl);
      if (f > frac) {
        frac = f;
        pick = static_cast<int>(l);
      }
    }
    if (pick < 0) {
      auto fixed = node.z;
      bool any_free = false;
      for (std::size_t l = 0; l < fixed.size(); ++l)
        if (!fixed[l]) {
          fixed[l] = std::round(node.relaxed->sol.z_d[l]);
          any_free = true;
        }
      std::optional<Relaxed> leaf = any_free ? solve_nlp(c, ac, pseudo, o, fixed, nullptr) : node.relaxed;
      if (leaf && leaf->objective < best_obj) {
        best_obj = leaf->objective;
        best = leaf->sol;
      }
      continue;
    }
    Node shed{node.z, std::nullopt};
    shed.z[pick] = 0.0;
    Node serve{node.z, std::nullopt};
    serve.z[pick] = 1.0;
    stack.push_back(std::move(shed));
    stack.push_back(std::move(serve));
  }
  if (!best) throw InfeasibleError("ac-opf", "no all-or-nothing shedding decision is feasible");
  best->shed_nodes = nodes;
  return *best;
}

AcSolution solve_pf(const NetworkCase& c, const AcData& ac, const std::vector<ResolvedPseudo>& pseudo,
                    const OpfOptions& o) {
  std::vector<std::optional<double>> z(ac.loads.size());
  for (std::size_t l = 0; l < ac.loads.size(); ++l) z[l] = l < o.load_z.size() ? o.load_z[l] : 1.0;
  OpfModel m(&ac, z);
  for (const auto& p : pseudo) m.add_pseudo_load(p.bus, p.q_const, p.q_per_v);

  const int nb = ac.num_busses();
  std::vector<bool> has_gen(nb, false);
  nlp::Vec x = m.initial_point();
  for (int i = 0; i < nb; ++i) x[m.v_var(i)] = 1.0;
  for (std::size_t g = 0; g < ac.gens.size(); ++g) {
    const auto& gen = ac.gens[g];
    has_gen[gen.bus] = true;
    if (gen.v_set) x[m.v_var(gen.bus)] = *gen.v_set;
    x[m.pg_var(static_cast<int>(g))] = gen.p_set ? *gen.p_set : std::clamp(0.0, gen.p_min, gen.p_max);
    x[m.qg_var(static_cast<int>(g))] = 0.0;
  }
  for (std::size_t g = 0; g < ac.gens.size(); ++g)
    if (ac.slack[ac.gens[g].bus]) x[m.pg_var(static_cast<int>(g))] = 0.0;

  std::vector<int> rows, cols;
  for (int i = 0; i < nb; ++i) {
    if (ac.slack[i]) continue;
    rows.push_back(i);
    cols.push_back(m.theta_var(i));
  }
  for (int i = 0; i < nb; ++i) {
    if (ac.slack[i] || has_gen[i]) continue;
    rows.push_back(nb + i);
    cols.push_back(m.v_var(i));
  }
  const int n = static_cast<int>(rows.size());
  double mismatch = 0.0;
  int it = 0;
  for (;; ++it) {
    const nlp::Vec r = m.eq(x);
    Eigen::VectorXd f(n);
    for (int k = 0; k < n; ++k) f[k] = r[rows[k]];
    mismatch = n ? f.lpNorm<Eigen::Infinity>() : 0.0;
    if (!std::isfinite(mismatch)) break;
    if (mismatch <= o.pf_tol) break;
    if (it >= o.pf_max_iter) break;
    const Eigen::MatrixXd jfull = Eigen::MatrixXd(m.eq_jacobian(x));
    Eigen::MatrixXd j(n, n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) j(a, b) = jfull(rows[a], cols[b]);
    const Eigen::VectorXd dx = j.partialPivLu().solve(-f);
    if (!dx.allFinite()) {
      mismatch = std::numeric_limits<double>::infinity();
      break;
    }
    for (int k = 0; k < n; ++k) x[cols[k]] += dx[k];
  }
  if (!(mismatch <= o.pf_tol))
    throw DivergenceError("power flow did not converge after " + std::to_string(it) +
                              " iterations (max mismatch " + std::to_string(mismatch) + ")",
                          mismatch);

  // Generators pick up whatever the fixed rows leave over, split evenly.
  const nlp::Vec r = m.eq(x);
  std::vector<int> count(nb, 0);
  for (const auto& gen : ac.gens) ++count[gen.bus];
  for (std::size_t g = 0; g < ac.gens.size(); ++g) {
    const int bus = ac.gens[g].bus;
    if (ac.slack[bus]) x[m.pg_var(static_cast<int>(g))] = r[bus] / count[bus];
    x[m.qg_var(static_cast<int>(g))] = r[nb + bus] / count[bus];
  }

  AcSolution s = extract(c, ac, m, x, pseudo);
  s.iterations = it;
  s.objective = 0.0;
  for (std::size_t g = 0; g < ac.gens.size(); ++g) {
    const auto& gen = ac.gens[g];
    s.objective += gen.c0 + gen.c1 * s.p_g[g] + gen.c2 * s.p_g[g] * s.p_g[g];
  }
  certify(c, ac, pseudo, s);
  s.status = s.max_bound_violation > o.residual_tol ? AcStatus::LimitsViolated : AcStatus::Converged;
  return s;
}

}  // namespace

BranchFlow branch_flow(double v_j, double v_k, double theta_j, double theta_k, double g, double b,
                       double b_sh) {
  const double d = theta_j - theta_k;
  const double c = std::cos(d), s = std::sin(d);
  const double vv = v_j * v_k;
  BranchFlow f;
  f.p_from = g * v_j * v_j - vv * (g * c + b * s);
  f.q_from = -(b + 0.5 * b_sh) * v_j * v_j - vv * (g * s - b * c);
  f.p_to = -g * v_k * v_k + vv * (g * c - b * s);
  f.q_to = (b + 0.5 * b_sh) * v_k * v_k - vv * (g * s + b * c);
  return f;
}

std::vector<PseudoLoad> qloss_pseudo_loads(const DcNetwork& net, const GicSolution& gic) {
  std::vector<PseudoLoad> out;
  for (std::size_t k = 0; k < net.transformers.size() && k < gic.transformers.size(); ++k) {
    const double coeff = gic.transformers[k].qloss_coeff;
    if (coeff == 0.0) continue;
    out.push_back({net.transformers[k].high_bus, 0.0, coeff, net.transformers[k].transformer});
  }
  return out;
}

std::vector<PseudoLoad> freeze_pseudo_loads(const std::vector<PseudoLoad>& loads, const AcSolution* at) {
  std::vector<PseudoLoad> out = loads;
  for (auto& p : out) {
    const double v = at ? at->voltage(p.bus) : 1.0;
    p.q_const += p.q_per_v * v;
    p.q_per_v = 0.0;
  }
  return out;
}

double AcSolution::voltage(const Id& bus) const {
  for (std::size_t i = 0; i < bus_ids.size(); ++i)
    if (bus_ids[i] == bus) return v[i];
  throw std::invalid_argument("unknown bus '" + bus + "'");
}

double served_fraction(const NetworkCase& c, const AcSolution& s) {
  double total = 0.0, served = 0.0;
  for (const auto& l : c.loads) {
    total += std::abs(l.p_d);
    for (std::size_t k = 0; k < s.load_ids.size(); ++k)
      if (s.load_ids[k] == l.id) served += std::abs(l.p_d) * s.z_d[k];
  }
  return total > 0.0 ? served / total : 1.0;
}

AcSolution solve_acpf(const NetworkCase& c, const std::vector<PseudoLoad>& pseudo, const OpfOptions& opts) {
  const AcData ac = compile_ac(c);
  bool slack = false;
  for (bool s : ac.slack) slack = slack || s;
  if (!slack) throw ValidationError("no slack bus");
  const auto resolved = resolve(ac, pseudo);
  if (opts.mode == SolveMode::PowerFlow) return solve_pf(c, ac, resolved, opts);
  return solve_opf(c, ac, resolved, opts);
}

double objective_gen_cost(const NetworkCase& c, const AcSolution& s) {
  double cost = 0.0;
  for (std::size_t k = 0; k < s.gen_ids.size(); ++k) {
    for (const auto& g : c.generators) {
      if (g.id != s.gen_ids[k]) continue;
      cost += g.cost_c0 + g.cost_c1 * s.p_g[k] + g.cost_c2 * s.p_g[k] * s.p_g[k];
    }
  }
  return cost;
}

double objective_shed_cost(const AcSolution& s, const std::vector<Load>& loads) {
  double cost = 0.0;
  for (const auto& l : loads) {
    double z = 1.0;
    for (std::size_t k = 0; k < s.load_ids.size(); ++k)
      if (s.load_ids[k] == l.id) z = s.z_d[k];
    cost += l.shed_cost * std::abs(l.p_d) * (1.0 - z);
  }
  return cost;
}

double ResidualReport::max_residual() const {
  return std::max({max_balance, max_flow, max_slack_angle});
}

ResidualReport check_residuals(const NetworkCase& c, const std::vector<PseudoLoad>& pseudo,
                               const AcSolution& s) {
  ResidualReport rep;
  std::map<Id, std::size_t> bus;
  for (std::size_t i = 0; i < s.bus_ids.size(); ++i) bus[s.bus_ids[i]] = i;
  const std::size_t nb = s.bus_ids.size();
  std::vector<double> p(nb, 0.0), q(nb, 0.0);
  auto over = [&](double value) { rep.max_bound = std::max(rep.max_bound, value); };

  for (const auto& b : c.busses) {
    const std::size_t i = bus.at(b.id);
    over(b.v_min - s.v[i]);
    over(s.v[i] - b.v_max);
    if (b.is_slack) rep.max_slack_angle = std::max(rep.max_slack_angle, std::abs(s.theta[i]));
  }

  std::map<Id, std::size_t> flow_index;
  for (std::size_t k = 0; k < s.branch_ids.size(); ++k) flow_index[s.branch_ids[k]] = k;
  for (const auto& br : c.branches) {
    if (!br.status) continue;
    const std::size_t f = bus.at(br.from_bus), t = bus.at(br.to_bus);
    const BranchFlow fl = branch_flow(s.v[f], s.v[t], s.theta[f], s.theta[t], br.g, br.b, br.b_sh);
    if (auto it = flow_index.find(br.id); it != flow_index.end()) {
      const BranchFlow& r = s.flows[it->second];
      rep.max_flow = std::max({rep.max_flow, std::abs(r.p_from - fl.p_from), std::abs(r.q_from - fl.q_from),
                               std::abs(r.p_to - fl.p_to), std::abs(r.q_to - fl.q_to)});
    } else {
      rep.max_flow = std::numeric_limits<double>::infinity();
    }
    p[f] += fl.p_from;
    q[f] += fl.q_from;
    p[t] -= fl.p_to;
    q[t] -= fl.q_to;
    if (br.s_max > 0.0 && std::isfinite(br.s_max)) {
      over(std::hypot(fl.p_from, fl.q_from) - br.s_max);
      over(std::hypot(fl.p_to, fl.q_to) - br.s_max);
    }
    const double d = s.theta[f] - s.theta[t];
    over(d - br.theta_max);
    over(br.theta_min - d);
  }
  for (const auto& g : c.generators) {
    if (!g.status) continue;
    for (std::size_t k = 0; k < s.gen_ids.size(); ++k) {
      if (s.gen_ids[k] != g.id) continue;
      const std::size_t i = bus.at(g.bus);
      p[i] -= s.p_g[k];
      q[i] -= s.q_g[k];
      over(g.p_min - s.p_g[k]);
      over(s.p_g[k] - g.p_max);
      over(g.q_min - s.q_g[k]);
      over(s.q_g[k] - g.q_max);
    }
  }
  for (const auto& l : c.loads) {
    double z = 1.0;
    for (std::size_t k = 0; k < s.load_ids.size(); ++k)
      if (s.load_ids[k] == l.id) z = s.z_d[k];
    over(-z);
    over(z - 1.0);
    const std::size_t i = bus.at(l.bus);
    p[i] += l.p_d * z;
    q[i] += l.q_d * z;
  }
  for (const auto& sh : c.shunts) {
    if (!sh.status) continue;
    const std::size_t i = bus.at(sh.bus);
    p[i] += sh.g_s * s.v[i] * s.v[i];
    q[i] -= sh.b_s * s.v[i] * s.v[i];
  }
  for (const auto& pl : pseudo) {
    const std::size_t i = bus.at(pl.bus);
    q[i] += pl.q_const + pl.q_per_v * s.v[i];
  }
  for (std::size_t i = 0; i < nb; ++i)
    rep.max_balance = std::max({rep.max_balance, std::abs(p[i]), std::abs(q[i])});
  return rep;
}

double reactive_margin(const NetworkCase& c, const AcSolution& s, const Id& bus) {
  double margin = 0.0;
  bool any = false;
  for (const auto& g : c.generators) {
    if (!g.status || g.bus != bus) continue;
    for (std::size_t k = 0; k < s.gen_ids.size(); ++k) {
      if (s.gen_ids[k] != g.id) continue;
      margin += g.q_max - s.q_g[k];
      any = true;
    }
  }
  if (any) return margin;
  const Bus* b = c.find_bus(bus);
  if (!b) throw std::invalid_argument("unknown bus '" + bus + "'");
  return s.voltage(bus) - b->v_min;
}

CoupledSolution solve_coupled(const NetworkCase& c, const DcNetwork& net, const BlockerConfig& cfg,
                              const OpfOptions& opts) {
  CoupledSolution out;
  out.gic = solve_gic(net, cfg, 1.0);
  const auto base = qloss_pseudo_loads(net, out.gic);
  if (opts.coupling == CouplingMode::Embedded) {
    out.pseudo = base;
    out.ac = solve_acpf(c, out.pseudo, opts);
    out.rounds = 1;
    return out;
  }
  const int rounds = std::max(1, opts.coupling_rounds);
  std::vector<double> last;
  out.coupling_converged = rounds == 1;
  for (int r = 1; r <= rounds; ++r) {
    out.pseudo = freeze_pseudo_loads(base, r == 1 ? nullptr : &out.ac);
    out.ac = solve_acpf(c, out.pseudo, opts);
    out.rounds = r;
    std::vector<double> now;
    for (const auto& p : base) now.push_back(p.q_per_v * out.ac.voltage(p.bus));
    if (!last.empty()) {
      double diff = 0.0;
      for (std::size_t k = 0; k < now.size(); ++k) diff = std::max(diff, std::abs(now[k] - last[k]));
      if (diff < opts.coupling_tol) {
        out.coupling_converged = true;
        break;
      }
    }
    last = std::move(now);
  }
  return out;
}

}  // namespace gicopt
