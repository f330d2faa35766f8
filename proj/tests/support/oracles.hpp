#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the library's solvers.

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "gicopt/ac_opf.hpp"
#include "gicopt/case_model.hpp"
#include "gicopt/dc_network.hpp"

namespace oracle {

inline std::filesystem::path data_dir() { return GICOPT_DATA_DIR; }
inline std::filesystem::path case_path(const std::string& name) { return data_dir() / "cases" / (name + ".json"); }
inline gicopt::NetworkCase bundled(const std::string& name) { return gicopt::load_case(case_path(name)); }

inline const std::vector<std::string>& bundled_names() {
  static const std::vector<std::string> names = {"b4gic", "syn_loop4", "syn_chain6", "syn_mixed9", "epri21"};
  return names;
}

using Matrix = std::vector<std::vector<double>>;

// Gaussian elimination with partial pivoting. Throws on a singular matrix.
inline std::vector<double> dense_solve(Matrix a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-300) throw std::runtime_error("singular");
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

// Dense nodal solve of a dc network. Unblocked neutrals are folded into
// their ground node through a union of indices; blocked ones keep their own
// row. Returns per-node voltages.
inline std::vector<double> dense_gic_voltages(const gicopt::DcNetwork& net, const std::vector<std::size_t>& blocked) {
  const std::size_t n = net.nodes.size();
  std::vector<std::size_t> owner(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nd = net.nodes[i];
    const bool is_blocked = std::find(blocked.begin(), blocked.end(), i) != blocked.end();
    owner[i] = (nd.kind == gicopt::DcNodeKind::Neutral && nd.ground_node && !is_blocked) ? *nd.ground_node : i;
  }
  std::map<std::size_t, std::size_t> row;
  for (std::size_t i = 0; i < n; ++i)
    if (owner[i] == i) row.emplace(i, row.size());
  const std::size_t m = row.size();
  Matrix g(m, std::vector<double>(m, 0.0));
  std::vector<double> j(m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (owner[i] == i) g[row[i]][row[i]] += net.nodes[i].grounding_g;
  for (const auto& e : net.edges) {
    if (!e.in_service) continue;
    const std::size_t f = row[owner[e.from_node]];
    const std::size_t t = row[owner[e.to_node]];
    // Norton equivalent of a series source: a*E injected into t, drawn from f.
    j[f] -= e.conductance * e.induced_v;
    j[t] += e.conductance * e.induced_v;
    if (f == t) continue;
    g[f][f] += e.conductance;
    g[t][t] += e.conductance;
    g[f][t] -= e.conductance;
    g[t][f] -= e.conductance;
  }
  const std::vector<double> v = m ? dense_solve(g, j) : std::vector<double>{};
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = v[row[owner[i]]];
  return out;
}

inline std::vector<double> dense_edge_currents(const gicopt::DcNetwork& net, const std::vector<double>& v) {
  std::vector<double> out;
  for (const auto& e : net.edges)
    out.push_back(e.in_service ? e.conductance * (v[e.from_node] - v[e.to_node] + e.induced_v) : 0.0);
  return out;
}

// Random connected network of bus and ground nodes: a random spanning tree
// plus extra chords, at least one node with a ground conductance.
struct RandomNetSpec {
  int min_nodes = 5;
  int max_nodes = 30;
  double g_lo = 0.1, g_hi = 20.0;
  double e_lo = -500.0, e_hi = 500.0;
};

inline gicopt::DcNetwork random_network(std::mt19937_64& rng, const RandomNetSpec& s = {}) {
  std::uniform_int_distribution<int> nn(s.min_nodes, s.max_nodes);
  std::uniform_real_distribution<double> cond(s.g_lo, s.g_hi);
  std::uniform_real_distribution<double> src(s.e_lo, s.e_hi);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = nn(rng);
  gicopt::DcNetwork net;
  net.case_name = "random";
  for (int i = 0; i < n; ++i) {
    gicopt::DcNode node;
    node.id = "n" + std::to_string(i);
    node.kind = gicopt::DcNodeKind::Bus;
    net.nodes.push_back(node);
  }
  auto add_edge = [&](int a, int b) {
    gicopt::DcEdge e;
    e.id = "e" + std::to_string(net.edges.size());
    e.from_node = static_cast<std::size_t>(a);
    e.to_node = static_cast<std::size_t>(b);
    e.conductance = cond(rng);
    e.induced_v = src(rng);
    net.edges.push_back(e);
  };
  for (int i = 1; i < n; ++i) add_edge(std::uniform_int_distribution<int>(0, i - 1)(rng), i);
  const int chords = std::uniform_int_distribution<int>(0, n)(rng);
  for (int k = 0; k < chords; ++k) {
    const int a = std::uniform_int_distribution<int>(0, n - 1)(rng);
    const int b = std::uniform_int_distribution<int>(0, n - 1)(rng);
    if (a != b) add_edge(a, b);
  }
  bool any = false;
  for (auto& node : net.nodes) {
    if (unit(rng) < 0.3) {
      node.kind = gicopt::DcNodeKind::Ground;
      node.grounding_g = cond(rng);
      any = true;
    }
  }
  if (!any) {
    net.nodes[0].kind = gicopt::DcNodeKind::Ground;
    net.nodes[0].grounding_g = cond(rng);
  }
  return net;
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d / std::max(max_abs(b), 1e-300);
}

// Edge-current comparison floored at the largest g|E|, so radial networks
// with no circulating current compare roundoff against a physical scale.
inline double current_error(const gicopt::DcNetwork& net, const std::vector<double>& a, const std::vector<double>& b) {
  double scale = max_abs(b);
  for (const auto& e : net.edges) scale = std::max(scale, e.conductance * std::abs(e.induced_v));
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d / std::max(scale, 1e-300);
}

// Pi-model flows from complex arithmetic: y = g + jb series, j b_sh/2 at
// each end, S = V conj(I).
inline gicopt::BranchFlow complex_flow(double vj, double vk, double tj, double tk, double g, double b, double bsh) {
  using C = std::complex<double>;
  const C Vj = std::polar(vj, tj);
  const C Vk = std::polar(vk, tk);
  const C y(g, b);
  const C ysh(0.0, bsh / 2.0);
  const C Ij = y * (Vj - Vk) + ysh * Vj;
  const C Ik = y * (Vk - Vj) + ysh * Vk;
  const C Sj = Vj * std::conj(Ij);
  const C Sk = Vk * std::conj(Ik);
  // Sk is the power entering at k; the delivered power is its negative.
  return {Sj.real(), Sj.imag(), -Sk.real(), -Sk.imag()};
}

// Two-bus polar Newton-Raphson: slack at bus 1 (v=1, theta=0), PQ load at
// bus 2 drawing p + jq through series admittance g + jb.
struct TwoBusResult {
  double v2 = 1.0;
  double theta2 = 0.0;
  double p_slack = 0.0;
  double q_slack = 0.0;
};

inline TwoBusResult two_bus_newton(double g, double b, double p, double q) {
  double v = 1.0, th = 0.0;
  auto mismatch = [&](double vv, double tt, double& fp, double& fq) {
    // Power injected at bus 2 into the line equals -load.
    const double c = std::cos(tt), s = std::sin(tt);
    const double p2 = g * vv * vv - vv * (g * c + b * s);
    const double q2 = -b * vv * vv - vv * (g * s - b * c);
    fp = p2 + p;
    fq = q2 + q;
  };
  for (int it = 0; it < 50; ++it) {
    double fp, fq;
    mismatch(v, th, fp, fq);
    if (std::max(std::abs(fp), std::abs(fq)) < 1e-14) break;
    const double h = 1e-7;
    double a1, a2, b1, b2;
    mismatch(v, th + h, a1, a2);
    double m1, m2;
    mismatch(v, th - h, m1, m2);
    const double dpt = (a1 - m1) / (2 * h), dqt = (a2 - m2) / (2 * h);
    mismatch(v + h, th, b1, b2);
    mismatch(v - h, th, m1, m2);
    const double dpv = (b1 - m1) / (2 * h), dqv = (b2 - m2) / (2 * h);
    const double det = dpt * dqv - dpv * dqt;
    th -= (fp * dqv - fq * dpv) / det;
    v -= (dpt * fq - dqt * fp) / det;
  }
  TwoBusResult r;
  r.v2 = v;
  r.theta2 = th;
  const double c = std::cos(-th), s = std::sin(-th);
  r.p_slack = g - v * (g * c + b * s);
  r.q_slack = -b - v * (g * s - b * c);
  return r;
}

}  // namespace oracle
