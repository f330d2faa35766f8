#include "gicopt/gic_engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "gicopt/error.hpp"

namespace gicopt {

BlockerConfig BlockerConfig::from_nodes(std::vector<std::size_t> nodes) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return BlockerConfig{std::move(nodes)};
}

BlockerConfig BlockerConfig::from_mask(const DcNetwork& net, std::uint64_t mask) {
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < net.candidates.size(); ++i)
    if (mask & (std::uint64_t{1} << i)) nodes.push_back(net.candidates[i]);
  return from_nodes(std::move(nodes));
}

bool BlockerConfig::contains(std::size_t node) const {
  return std::binary_search(placed.begin(), placed.end(), node);
}

double effective_gic(TransformerConfig config, double alpha, double beta, const WindingCurrents& w) {
  auto need = [](const std::optional<double>& v, const char* name) {
    if (!v) throw std::invalid_argument(std::string("missing ") + name + " winding current");
    return *v;
  };
  switch (config) {
    case TransformerConfig::DeltaDelta:
      return need(w.high, "high");
    case TransformerConfig::GwyeDelta:
    case TransformerConfig::GwyeGwye:
      return (alpha * need(w.high, "high") + need(w.low, "low")) / alpha;
    case TransformerConfig::Auto:
      return (alpha * need(w.series, "series") + need(w.common, "common")) / (alpha + 1.0);
    case TransformerConfig::ThreeWinding:
      return need(w.high, "high") + need(w.low, "low") / alpha + need(w.tertiary, "tertiary") / beta;
    case TransformerConfig::Other:
    case TransformerConfig::Unknown:
      return 0.0;
  }
  return 0.0;
}

double effective_gic(const Transformer& xfmr, const WindingCurrents& w) {
  return effective_gic(xfmr.config, xfmr.alpha, xfmr.beta, w);
}

double ieff_magnitude(double i_tilde) { return std::abs(i_tilde); }

double qloss(double s_base_mva, double high_kv, double k_loss, double i_eff, double v_high,
             double system_base_mva) {
  const double mvar = std::sqrt(2.0 / 3.0) * (s_base_mva / high_kv) * k_loss * i_eff * v_high;
  return mvar / system_base_mva;
}

double qloss(const Transformer& xfmr, double high_kv, double i_eff, double v_high,
             double system_base_mva) {
  return qloss(xfmr.s_base, high_kv, xfmr.k_loss, i_eff, v_high, system_base_mva);
}

WindingCurrents winding_currents(const TransformerTerminals& term, std::span<const double> edge_i) {
  // Windings without a dc edge (delta or ungrounded) carry no dc current.
  auto per_phase = [&](const std::optional<std::size_t>& e) {
    return e ? edge_i[*e] / 3.0 : 0.0;
  };
  WindingCurrents w;
  w.high = per_phase(term.high);
  w.low = per_phase(term.low);
  w.series = per_phase(term.series);
  w.common = per_phase(term.common);
  w.tertiary = per_phase(term.tertiary);
  return w;
}

GicSolution solve_gic(const DcNetwork& net, const BlockerConfig& cfg, double v_high) {
  for (std::size_t node : cfg.placed) {
    if (node >= net.nodes.size() || !net.nodes[node].blocker_candidate)
      throw std::invalid_argument("blocker placed on a node that is not a candidate neutral");
  }

  const std::size_t n = net.nodes.size();
  // Unblocked neutrals collapse onto their ground grid.
  std::vector<std::size_t> rep(n);
  for (std::size_t i = 0; i < n; ++i) {
    const DcNode& node = net.nodes[i];
    rep[i] = (node.ground_node && !cfg.contains(i)) ? *node.ground_node : i;
  }
  std::vector<long> reduced(n, -1);
  long m = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (rep[i] == i) reduced[i] = m++;

  GicSolution sol;
  sol.node_v.assign(n, 0.0);
  sol.edge_i.assign(net.edges.size(), 0.0);
  sol.neutral_i.assign(n, 0.0);

  if (m > 0) {
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    for (std::size_t i = 0; i < n; ++i)
      if (rep[i] == i && net.nodes[i].grounding_g > 0.0)
        trip.emplace_back(reduced[i], reduced[i], net.nodes[i].grounding_g);
    for (const auto& e : net.edges) {
      if (!e.in_service) continue;
      const long f = reduced[rep[e.from_node]];
      const long t = reduced[rep[e.to_node]];
      const double a = e.conductance;
      if (f != t) {
        trip.emplace_back(f, f, a);
        trip.emplace_back(t, t, a);
        trip.emplace_back(f, t, -a);
        trip.emplace_back(t, f, -a);
      }
      // I = a (V_f - V_t + E): the source pushes a*E out of f and into t.
      rhs[f] -= a * e.induced_v;
      rhs[t] += a * e.induced_v;
    }
    Eigen::SparseMatrix<double> g(m, m);
    g.setFromTriplets(trip.begin(), trip.end());

    double max_diag = 0.0;
    for (long k = 0; k < m; ++k) max_diag = std::max(max_diag, g.coeff(k, k));

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(g);
    if (ldlt.info() != Eigen::Success)
      throw SingularNetworkError("nodal conductance factorization failed");
    const Eigen::VectorXd d = ldlt.vectorD();
    const double threshold = 1e-12 * std::max(max_diag, 1e-300);
    for (long k = 0; k < m; ++k) {
      if (!(d[k] > threshold))
        throw SingularNetworkError("floating dc network: a component has no ground return");
    }
    const Eigen::VectorXd v = ldlt.solve(rhs);
    for (std::size_t i = 0; i < n; ++i) sol.node_v[i] = v[reduced[rep[i]]];
  }

  std::vector<double> inflow(n, 0.0);
  for (std::size_t k = 0; k < net.edges.size(); ++k) {
    const auto& e = net.edges[k];
    if (!e.in_service) continue;
    const double i = e.conductance * (sol.node_v[e.from_node] - sol.node_v[e.to_node] + e.induced_v);
    sol.edge_i[k] = i;
    inflow[e.to_node] += i;
    inflow[e.from_node] -= i;
  }

  // Neutral current is whatever its windings deliver; the grid then passes
  // the sum of its neutrals plus direct inflow into remote earth.
  for (std::size_t i = 0; i < n; ++i)
    if (net.nodes[i].kind == DcNodeKind::Neutral) sol.neutral_i[i] = inflow[i];
  std::vector<double> reduced_inflow(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) reduced_inflow[rep[i]] += inflow[i];
  for (std::size_t i = 0; i < n; ++i) {
    if (rep[i] != i) continue;
    const double to_earth = net.nodes[i].grounding_g * sol.node_v[i];
    if (net.nodes[i].kind == DcNodeKind::Ground) sol.neutral_i[i] = to_earth;
    sol.max_kcl_residual = std::max(sol.max_kcl_residual, std::abs(reduced_inflow[i] - to_earth));
  }

  sol.transformers.reserve(net.transformers.size());
  for (const auto& term : net.transformers) {
    TransformerGic tg;
    tg.transformer = term.transformer;
    tg.i_tilde = effective_gic(term.config, term.alpha, term.beta, winding_currents(term, sol.edge_i));
    tg.i_eff = ieff_magnitude(tg.i_tilde);
    tg.qloss_coeff = term.high_kv > 0.0
                         ? qloss(term.s_base, term.high_kv, term.k_loss, tg.i_eff, 1.0, net.base_mva)
                         : 0.0;
    tg.q_loss = tg.qloss_coeff * v_high;
    sol.transformers.push_back(std::move(tg));
  }
  return sol;
}

}  // namespace gicopt
