// Convex relaxation of blocker placement for branch-and-bound.
//
// DC part: one voltage per electrical node. A neutral whose blocker is fixed
// open (z = 0) is merged into its ground grid, one fixed blocked (z = 1)
// stands alone. A free neutral keeps its own voltage and a lead current J to
// its ground grid, with
//   |J| <= (1 - z) J_max      |V_N - V_G| <= z dV_max
// which is exact at z in {0, 1}.
//
// AC coupling: the effective current magnitude I >= |I~|. With single-pass
// fixed-point coupling q_loss is linear in I; otherwise q_loss is tied to the
// bilinear product I v through McCormick envelopes (embedded coupling) or
// the box I v_min <= u <= I v_max (iterated fixed point).

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "gicopt/error.hpp"
#include "gicopt/nlp_model.hpp"
#include "gicopt/placement.hpp"

namespace gicopt {

namespace {

constexpr double kScaledSlack = 1e-7;

struct Affine {
  std::map<int, double> terms;
  double constant = 0.0;

  void add(const Affine& o, double w) {
    for (const auto& [k, c] : o.terms) terms[k] += w * c;
    constant += w * o.constant;
  }
  LinearTerms linear() const {
    LinearTerms out;
    for (const auto& [k, c] : terms)
      if (c != 0.0) out.emplace_back(k, c);
    return out;
  }
};

// Per-winding weights of the signed effective current, per phase.
void effective_weights(const TransformerTerminals& t, std::vector<std::pair<std::size_t, double>>& out) {
  auto put = [&](const std::optional<std::size_t>& e, double w) {
    if (e) out.emplace_back(*e, w / 3.0);
  };
  switch (t.config) {
    case TransformerConfig::DeltaDelta: put(t.high, 1.0); break;
    case TransformerConfig::GwyeDelta:
    case TransformerConfig::GwyeGwye:
      put(t.high, 1.0);
      put(t.low, 1.0 / t.alpha);
      break;
    case TransformerConfig::Auto:
      put(t.series, t.alpha / (t.alpha + 1.0));
      put(t.common, 1.0 / (t.alpha + 1.0));
      break;
    case TransformerConfig::ThreeWinding:
      put(t.high, 1.0);
      put(t.low, 1.0 / t.alpha);
      put(t.tertiary, 1.0 / t.beta);
      break;
    default: break;
  }
}

}  // namespace

RelaxationBounds derive_bounds(const PlacementContext& ctx) {
  const DcNetwork& net = ctx.net;
  const std::size_t n = net.candidates.size();
  const std::size_t nn = net.nodes.size();
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<std::uint64_t> masks;
  if (n <= 12) {
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) masks.push_back(m);
  } else {
    // Heuristic for large cases: extremes only.
    const std::uint64_t all = n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
    masks.push_back(0);
    masks.push_back(all);
    for (std::size_t k = 0; k < n && k < 64; ++k) {
      masks.push_back(std::uint64_t{1} << k);
      masks.push_back(all & ~(std::uint64_t{1} << k));
    }
  }

  std::vector<double> vlo(nn, inf), vhi(nn, -inf);
  std::vector<double> lead(n, 0.0), dv(n, 0.0), imax(net.transformers.size(), 0.0);
  bool any = false;
  for (std::uint64_t m : masks) {
    const BlockerConfig cfg = BlockerConfig::from_mask(net, m);
    GicSolution g;
    try {
      g = solve_gic(net, cfg, 1.0);
    } catch (const SingularNetworkError&) {
      continue;
    }
    any = true;
    for (std::size_t i = 0; i < nn; ++i) {
      vlo[i] = std::min(vlo[i], g.node_v[i]);
      vhi[i] = std::max(vhi[i], g.node_v[i]);
    }
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t node = net.candidates[k];
      const std::size_t ground = *net.nodes[node].ground_node;
      if (cfg.contains(node)) dv[k] = std::max(dv[k], std::abs(g.node_v[node] - g.node_v[ground]));
      else lead[k] = std::max(lead[k], std::abs(g.neutral_i[node]));
    }
    for (std::size_t t = 0; t < imax.size(); ++t) imax[t] = std::max(imax[t], g.transformers[t].i_eff);
  }

  RelaxationBounds b;
  b.v_lo.resize(nn);
  b.v_hi.resize(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    if (!any) {
      b.v_lo[i] = -1e6;
      b.v_hi[i] = 1e6;
      continue;
    }
    const double span = std::max(std::abs(vlo[i]), std::abs(vhi[i]));
    const double margin = 0.2 * span + 1.0;
    b.v_lo[i] = vlo[i] - margin;
    b.v_hi[i] = vhi[i] + margin;
  }
  for (std::size_t k = 0; k < n; ++k) {
    b.lead_max.push_back(any ? 1.2 * lead[k] + 1.0 : 1e6);
    b.dv_max.push_back(any ? 1.2 * dv[k] + 1.0 : 1e6);
  }
  for (double i : imax) b.i_max.push_back(any ? 1.2 * i + 1.0 : 1e6);
  return b;
}

RelaxationResult solve_relaxation(const PlacementContext& ctx, const RelaxationBounds& bounds,
                                  const std::vector<int>& fixed) {
  const PlacementProblem& p = *ctx.problem;
  const DcNetwork& net = ctx.net;
  const std::size_t nn = net.nodes.size();
  const std::size_t nc = net.candidates.size();
  const bool ac_on = needs_ac(p);

  AcData ac;
  std::vector<std::optional<double>> load_z;
  if (ac_on) {
    ac = compile_ac(p.network);
    load_z.resize(ac.loads.size());
    for (std::size_t l = 0; l < ac.loads.size(); ++l)
      if (!ac.loads[l].sheddable) load_z[l] = 1.0;
  }
  OpfModel m(ac_on ? &ac : nullptr, load_z);

  // Electrical nodes.
  std::vector<int> cand_pos(nn, -1);
  for (std::size_t k = 0; k < nc; ++k) cand_pos[net.candidates[k]] = static_cast<int>(k);
  std::vector<std::size_t> rep(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    const DcNode& node = net.nodes[i];
    rep[i] = i;
    if (node.kind == DcNodeKind::Neutral && node.ground_node) {
      const int k = cand_pos[i];
      if (k < 0 || fixed[k] == 0) rep[i] = *node.ground_node;
    }
  }
  std::vector<int> vvar(nn, -1);
  for (std::size_t i = 0; i < nn; ++i) {
    if (rep[i] != i) continue;
    vvar[i] = m.add_var(bounds.v_lo[i], bounds.v_hi[i], std::clamp(0.0, bounds.v_lo[i], bounds.v_hi[i]));
  }
  auto volt = [&](std::size_t i) { return vvar[rep[i]]; };

  std::vector<int> zvar(nc, -1), jvar(nc, -1);
  for (std::size_t k = 0; k < nc; ++k) {
    if (fixed[k] >= 0) continue;
    zvar[k] = m.add_var(0.0, 1.0, 0.5);
    jvar[k] = m.add_var(-bounds.lead_max[k], bounds.lead_max[k], 0.0);
  }

  auto edge_current = [&](const DcEdge& e) {
    Affine a;
    a.terms[volt(e.from_node)] += e.conductance;
    a.terms[volt(e.to_node)] -= e.conductance;
    a.constant = e.conductance * e.induced_v;
    return a;
  };

  // Kirchhoff's current law per electrical node.
  std::vector<Affine> kcl(nn);
  for (const auto& e : net.edges) {
    if (!e.in_service) continue;
    const std::size_t f = rep[e.from_node], t = rep[e.to_node];
    if (f == t) continue;
    const Affine i = edge_current(e);
    kcl[f].add(i, -1.0);
    kcl[t].add(i, 1.0);
  }
  for (std::size_t i = 0; i < nn; ++i)
    if (rep[i] == i && net.nodes[i].grounding_g > 0.0) kcl[i].terms[vvar[i]] -= net.nodes[i].grounding_g;
  for (std::size_t k = 0; k < nc; ++k) {
    if (jvar[k] < 0) continue;
    const std::size_t nnode = net.candidates[k];
    const std::size_t g = rep[*net.nodes[nnode].ground_node];
    kcl[nnode].terms[jvar[k]] -= 1.0;
    kcl[g].terms[jvar[k]] += 1.0;
  }
  for (std::size_t i = 0; i < nn; ++i)
    if (rep[i] == i) m.add_linear_eq(kcl[i].linear(), -kcl[i].constant);

  // Neutral leads of free candidates.
  for (std::size_t k = 0; k < nc; ++k) {
    if (zvar[k] < 0) continue;
    const std::size_t nnode = net.candidates[k];
    const int vn = vvar[nnode];
    const int vg = volt(*net.nodes[nnode].ground_node);
    const double jm = bounds.lead_max[k], dv = bounds.dv_max[k];
    m.add_linear_le({{jvar[k], 1.0}, {zvar[k], jm}}, jm);
    m.add_linear_le({{jvar[k], -1.0}, {zvar[k], jm}}, jm);
    m.add_linear_le({{vn, 1.0}, {vg, -1.0}, {zvar[k], -dv}}, 0.0);
    m.add_linear_le({{vn, -1.0}, {vg, 1.0}, {zvar[k], -dv}}, 0.0);
  }

  // Budget and count.
  double fixed_cost = 0.0;
  int fixed_ones = 0;
  LinearTerms count_terms, cost_terms;
  for (std::size_t k = 0; k < nc; ++k) {
    const double cost = net.nodes[net.candidates[k]].blocker_candidate->cost;
    if (fixed[k] == 1) {
      ++fixed_ones;
      fixed_cost += cost;
    } else if (zvar[k] >= 0) {
      count_terms.emplace_back(zvar[k], 1.0);
      cost_terms.emplace_back(zvar[k], cost);
    }
  }
  if (p.count && !count_terms.empty()) {
    if (p.count_sense == CountSense::Equal) m.add_linear_eq(count_terms, *p.count - fixed_ones);
    else m.add_linear_le(count_terms, *p.count - fixed_ones);
  }
  if (p.budget && !cost_terms.empty()) m.add_linear_le(cost_terms, *p.budget - fixed_cost);

  // Signed effective current per transformer.
  std::vector<Affine> itilde(net.transformers.size());
  for (std::size_t t = 0; t < net.transformers.size(); ++t) {
    std::vector<std::pair<std::size_t, double>> w;
    effective_weights(net.transformers[t], w);
    for (const auto& [e, wt] : w) {
      const DcEdge& edge = net.edges[e];
      if (edge.in_service) itilde[t].add(edge_current(edge), wt);
    }
  }

  if (ac_on) {
    const double vlo_default = 0.9, vhi_default = 1.1;
    for (std::size_t t = 0; t < net.transformers.size(); ++t) {
      const auto& term = net.transformers[t];
      if (!(term.high_kv > 0.0) || term.k_loss == 0.0) continue;
      const double coeff = qloss(term.s_base, term.high_kv, term.k_loss, 1.0, 1.0, net.base_mva);
      const int bus = ac.bus_index(term.high_bus);
      if (bus < 0) continue;
      const double imax = bounds.i_max[t];
      const int ibar = m.add_var(0.0, imax, 0.0);
      LinearTerms up = itilde[t].linear();
      up.emplace_back(ibar, -1.0);
      m.add_linear_le(up, -itilde[t].constant);
      Affine neg;
      neg.add(itilde[t], -1.0);
      LinearTerms dn = neg.linear();
      dn.emplace_back(ibar, -1.0);
      m.add_linear_le(dn, -neg.constant);

      const bool single_pass = p.ac.coupling == CouplingMode::FixedPoint && p.ac.coupling_rounds <= 1;
      if (single_pass) {
        m.add_q_term(bus, ibar, coeff);
        continue;
      }
      const double vmin = ac.v_min.empty() ? vlo_default : ac.v_min[bus];
      const double vmax = ac.v_max.empty() ? vhi_default : ac.v_max[bus];
      const int u = m.add_var(0.0, imax * vmax, 0.0);
      m.add_linear_le({{ibar, vmin}, {u, -1.0}}, 0.0);
      m.add_linear_le({{u, 1.0}, {ibar, -vmax}}, 0.0);
      if (p.ac.coupling == CouplingMode::Embedded) {
        const int v = m.v_var(bus);
        m.add_linear_le({{v, imax}, {ibar, vmax}, {u, -1.0}}, imax * vmax);
        m.add_linear_le({{u, 1.0}, {v, -imax}, {ibar, -vmin}}, -imax * vmin);
      }
      m.add_q_term(bus, u, coeff);
    }

    const double total = [&] {
      double s = 0.0;
      for (const auto& l : ac.loads) s += std::abs(l.p_d);
      return s;
    }();
    if (p.served_frac && total > 0.0) {
      LinearTerms terms;
      double served_fixed = 0.0;
      for (std::size_t l = 0; l < ac.loads.size(); ++l) {
        const double w = std::abs(ac.loads[l].p_d);
        if (m.zd_var(static_cast<int>(l)) >= 0) terms.emplace_back(m.zd_var(static_cast<int>(l)), -w);
        else served_fixed += w;
      }
      if (!terms.empty()) m.add_linear_le(terms, served_fixed - *p.served_frac * total);
    }
    if (p.shed_cap) {
      LinearTerms terms;
      double constant = 0.0;
      for (std::size_t l = 0; l < ac.loads.size(); ++l) {
        const double w = ac.loads[l].shed_cost * std::abs(ac.loads[l].p_d);
        if (m.zd_var(static_cast<int>(l)) < 0) continue;
        constant += w;
        terms.emplace_back(m.zd_var(static_cast<int>(l)), -w);
      }
      if (!terms.empty()) m.add_linear_le(terms, *p.shed_cap - constant);
    }
  }

  double scale = 1.0;
  switch (p.objective) {
    case PlacementObjective::BlockerCost:
      m.add_objective_constant(fixed_cost);
      for (const auto& [var, c] : cost_terms) m.add_objective_linear(var, c);
      break;
    case PlacementObjective::Shed:
      m.use_shed_cost();
      break;
    case PlacementObjective::GicSquared: {
      std::vector<Affine> terms;
      std::vector<double> caps;
      if (p.gic_set == GicSquareSet::TransformerEffective) {
        for (std::size_t t = 0; t < itilde.size(); ++t) {
          terms.push_back(itilde[t]);
          caps.push_back(bounds.i_max[t]);
        }
      } else {
        for (const auto& e : net.edges) {
          if (!e.in_service) continue;
          terms.push_back(edge_current(e));
          const double span = std::max(std::abs(bounds.v_lo[e.from_node] - bounds.v_hi[e.to_node]),
                                       std::abs(bounds.v_hi[e.from_node] - bounds.v_lo[e.to_node]));
          caps.push_back(e.conductance * (span + std::abs(e.induced_v)));
        }
      }
      for (double c : caps) scale = std::max(scale, c * c);
      for (std::size_t k = 0; k < terms.size(); ++k) {
        if (terms[k].terms.empty() && terms[k].constant == 0.0) continue;
        const int y = m.add_var(-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 0.0);
        LinearTerms row = terms[k].linear();
        row.emplace_back(y, -1.0);
        m.add_linear_eq(row, -terms[k].constant);
        m.add_objective_square(y, 1.0 / scale);
      }
      break;
    }
  }

  nlp::Options opts = p.ac.nlp;
  opts.feas_tol = std::max(opts.feas_tol, 1e-7);
  const nlp::Result r = nlp::solve(m, opts);

  RelaxationResult out;
  out.converged = r.converged();
  out.bound = r.objective * scale;
  // Squared currents are scaled by the largest cap, which magnifies the
  // solver's stopping error; back the bound off by that error.
  if (p.objective == PlacementObjective::GicSquared) out.bound = std::max(0.0, r.objective - kScaledSlack) * scale;
  out.z.resize(nc);
  for (std::size_t k = 0; k < nc; ++k) out.z[k] = zvar[k] >= 0 ? r.x[zvar[k]] : static_cast<double>(fixed[k]);
  return out;
}

}  // namespace gicopt
