#include "gicopt/nlp_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace gicopt {

namespace {

using nlp::SpMat;
using nlp::Vec;
using Trip = Eigen::Triplet<double>;

constexpr double kInf = std::numeric_limits<double>::infinity();

// One end's flow written as A v_a^2 + vf vt (alpha cos d + beta sin d) with
// d = theta_f - theta_t. Local variable order: theta_f, theta_t, vf, vt.
struct FlowCoef {
  double a;
  bool at_from;
  double alpha, beta;
};

struct FlowEval {
  double val = 0.0;
  std::array<double, 4> grad{};
  std::array<std::array<double, 4>, 4> hess{};
};

FlowEval eval_flow(const FlowCoef& k, double tf, double tt, double vf, double vt, bool want_hess) {
  const double d = tf - tt;
  const double c = std::cos(d), s = std::sin(d);
  const double cs = k.alpha * c + k.beta * s;  // alpha c + beta s
  const double sc = -k.alpha * s + k.beta * c;  // derivative of cs in d
  FlowEval e;
  const double va = k.at_from ? vf : vt;
  e.val = k.a * va * va + vf * vt * cs;
  const double dd = vf * vt * sc;
  e.grad[0] = dd;
  e.grad[1] = -dd;
  e.grad[2] = vt * cs + (k.at_from ? 2.0 * k.a * vf : 0.0);
  e.grad[3] = vf * cs + (k.at_from ? 0.0 : 2.0 * k.a * vt);
  if (!want_hess) return e;
  const double hdd = -vf * vt * cs;
  const double hdvf = vt * sc;
  const double hdvt = vf * sc;
  auto& h = e.hess;
  h[0][0] = hdd;
  h[1][1] = hdd;
  h[0][1] = h[1][0] = -hdd;
  h[0][2] = h[2][0] = hdvf;
  h[0][3] = h[3][0] = hdvt;
  h[1][2] = h[2][1] = -hdvf;
  h[1][3] = h[3][1] = -hdvt;
  h[2][2] = k.at_from ? 2.0 * k.a : 0.0;
  h[3][3] = k.at_from ? 0.0 : 2.0 * k.a;
  h[2][3] = h[3][2] = cs;
  return e;
}

std::array<FlowCoef, 4> flow_coefs(const AcData::BranchData& br) {
  const double h = 0.5 * br.b_sh;
  return {FlowCoef{br.g, true, -br.g, -br.b},            // P from
          FlowCoef{-(br.b + h), true, br.b, -br.g},      // Q from
          FlowCoef{br.g, false, -br.g, br.b},            // P to
          FlowCoef{-(br.b + h), false, br.b, br.g}};     // Q to
}

}  // namespace

int AcData::bus_index(const Id& id) const {
  for (std::size_t i = 0; i < bus_ids.size(); ++i)
    if (bus_ids[i] == id) return static_cast<int>(i);
  return -1;
}

AcData compile_ac(const NetworkCase& c) {
  AcData d;
  for (const auto& b : c.busses) {
    d.bus_ids.push_back(b.id);
    d.v_min.push_back(b.v_min);
    d.v_max.push_back(b.v_max);
    d.slack.push_back(b.is_slack);
  }
  for (const auto& br : c.branches) {
    if (!br.status) continue;
    d.branches.push_back({br.id, d.bus_index(br.from_bus), d.bus_index(br.to_bus), br.g, br.b, br.b_sh,
                          br.s_max, br.theta_min, br.theta_max});
  }
  for (const auto& g : c.generators) {
    if (!g.status) continue;
    d.gens.push_back({g.id, d.bus_index(g.bus), g.p_min, g.p_max, g.q_min, g.q_max, g.cost_c0, g.cost_c1,
                      g.cost_c2, g.p_set, g.v_set});
  }
  for (const auto& l : c.loads)
    d.loads.push_back({l.id, d.bus_index(l.bus), l.p_d, l.q_d, l.shed_cost, l.sheddable});
  for (const auto& s : c.shunts)
    if (s.status) d.shunts.push_back({d.bus_index(s.bus), s.g_s, s.b_s});
  return d;
}

OpfModel::OpfModel(const AcData* ac, std::vector<std::optional<double>> load_z)
    : ac_(ac), load_z_(std::move(load_z)) {
  if (!ac_) return;
  const int nb = ac_->num_busses();
  load_z_.resize(ac_->loads.size(), 1.0);
  theta_var_.assign(nb, -1);
  for (int i = 0; i < nb; ++i) {
    if (ac_->slack[i]) continue;
    theta_var_[i] = add_var(-kInf, kInf, 0.0);
  }
  v0_ = num_vars();
  for (int i = 0; i < nb; ++i) add_var(ac_->v_min[i], ac_->v_max[i], std::clamp(1.0, ac_->v_min[i], ac_->v_max[i]));
  pg0_ = num_vars();
  for (const auto& g : ac_->gens) add_var(g.p_min, g.p_max, 0.5 * (g.p_min + g.p_max));
  qg0_ = num_vars();
  for (const auto& g : ac_->gens) add_var(g.q_min, g.q_max, 0.5 * (g.q_min + g.q_max));
  zd_var_.assign(ac_->loads.size(), -1);
  for (std::size_t l = 0; l < ac_->loads.size(); ++l)
    if (!load_z_[l]) zd_var_[l] = add_var(0.0, 1.0, 0.9);

  for (int k = 0; k < static_cast<int>(ac_->branches.size()); ++k) {
    const auto& br = ac_->branches[k];
    if (std::isfinite(br.s_max) && br.s_max > 0.0) rated_.push_back(k);
    if (br.theta_min > -std::numbers::pi || br.theta_max < std::numbers::pi) angle_.push_back(k);
  }
}

int OpfModel::add_var(double lo, double hi, double init) {
  lo_.push_back(lo);
  hi_.push_back(hi);
  init_.push_back(init);
  obj_lin_.push_back(0.0);
  obj_sq_.push_back(0.0);
  return static_cast<int>(lo_.size()) - 1;
}

void OpfModel::add_pseudo_load(int bus, double q_const, double q_per_v) {
  pseudo_.push_back({bus, q_const, q_per_v});
}

void OpfModel::add_q_term(int bus, int var, double coef) { q_terms_.push_back({bus, var, coef}); }

void OpfModel::add_linear_eq(LinearTerms terms, double rhs) { eq_rows_.push_back({std::move(terms), rhs}); }

void OpfModel::add_linear_le(LinearTerms terms, double rhs) { le_rows_.push_back({std::move(terms), rhs}); }

void OpfModel::add_objective_linear(int var, double c) { obj_lin_[var] += c; }

void OpfModel::add_objective_square(int var, double c) { obj_sq_[var] += c; }

void OpfModel::use_gen_cost() {
  for (std::size_t g = 0; g < ac_->gens.size(); ++g) {
    const auto& gen = ac_->gens[g];
    obj_const_ += gen.c0;
    obj_lin_[pg_var(static_cast<int>(g))] += gen.c1;
    obj_sq_[pg_var(static_cast<int>(g))] += gen.c2;
  }
}

void OpfModel::use_shed_cost() {
  for (std::size_t l = 0; l < ac_->loads.size(); ++l) {
    const auto& ld = ac_->loads[l];
    const double w = ld.shed_cost * std::abs(ld.p_d);
    if (load_z_[l]) {
      obj_const_ += w * (1.0 - *load_z_[l]);
    } else {
      obj_const_ += w;
      obj_lin_[zd_var_[l]] -= w;
    }
  }
}

double OpfModel::served_z(const Vec& x, int l) const {
  return load_z_[l] ? *load_z_[l] : x[zd_var_[l]];
}

double OpfModel::theta(const Vec& x, int bus) const {
  const int k = theta_var_[bus];
  return k < 0 ? 0.0 : x[k];
}

int OpfModel::num_eq() const { return num_ac_eq() + static_cast<int>(eq_rows_.size()); }

int OpfModel::num_ineq() const {
  return 2 * static_cast<int>(rated_.size()) + 2 * static_cast<int>(angle_.size()) +
         static_cast<int>(le_rows_.size());
}

void OpfModel::bounds(Vec& lo, Vec& hi) const {
  lo = Eigen::Map<const Vec>(lo_.data(), num_vars());
  hi = Eigen::Map<const Vec>(hi_.data(), num_vars());
}

Vec OpfModel::initial_point() const { return Eigen::Map<const Vec>(init_.data(), num_vars()); }

double OpfModel::objective(const Vec& x) const {
  double f = obj_const_;
  for (int i = 0; i < num_vars(); ++i) f += obj_lin_[i] * x[i] + obj_sq_[i] * x[i] * x[i];
  return f;
}

Vec OpfModel::gradient(const Vec& x) const {
  Vec g(num_vars());
  for (int i = 0; i < num_vars(); ++i) g[i] = obj_lin_[i] + 2.0 * obj_sq_[i] * x[i];
  return g;
}

Vec OpfModel::eq(const Vec& x) const {
  Vec r = Vec::Zero(num_eq());
  if (ac_) {
    const int nb = ac_->num_busses();
    for (const auto& br : ac_->branches) {
      const auto k = flow_coefs(br);
      const double tf = theta(x, br.from), tt = theta(x, br.to);
      const double vf = x[v_var(br.from)], vt = x[v_var(br.to)];
      r[br.from] += eval_flow(k[0], tf, tt, vf, vt, false).val;
      r[nb + br.from] += eval_flow(k[1], tf, tt, vf, vt, false).val;
      r[br.to] += eval_flow(k[2], tf, tt, vf, vt, false).val;
      r[nb + br.to] += eval_flow(k[3], tf, tt, vf, vt, false).val;
    }
    for (std::size_t g = 0; g < ac_->gens.size(); ++g) {
      const int bus = ac_->gens[g].bus;
      r[bus] -= x[pg_var(static_cast<int>(g))];
      r[nb + bus] -= x[qg_var(static_cast<int>(g))];
    }
    for (std::size_t l = 0; l < ac_->loads.size(); ++l) {
      const auto& ld = ac_->loads[l];
      const double z = served_z(x, static_cast<int>(l));
      r[ld.bus] += ld.p_d * z;
      r[nb + ld.bus] += ld.q_d * z;
    }
    for (const auto& sh : ac_->shunts) {
      const double v = x[v_var(sh.bus)];
      r[sh.bus] += sh.g_s * v * v;
      r[nb + sh.bus] -= sh.b_s * v * v;
    }
    for (const auto& p : pseudo_) r[nb + p.bus] += p.q_const + p.q_per_v * x[v_var(p.bus)];
    for (const auto& q : q_terms_) r[nb + q.bus] += q.coef * x[q.var];
  }
  const int off = num_ac_eq();
  for (std::size_t k = 0; k < eq_rows_.size(); ++k) {
    double s = -eq_rows_[k].rhs;
    for (const auto& [var, c] : eq_rows_[k].terms) s += c * x[var];
    r[off + static_cast<int>(k)] = s;
  }
  return r;
}

Vec OpfModel::ineq(const Vec& x) const {
  Vec h(num_ineq());
  int row = 0;
  if (ac_) {
    for (int end = 0; end < 2; ++end) {
      for (int k : rated_) {
        const auto& br = ac_->branches[k];
        const auto c = flow_coefs(br);
        const double tf = theta(x, br.from), tt = theta(x, br.to);
        const double vf = x[v_var(br.from)], vt = x[v_var(br.to)];
        const double p = eval_flow(c[2 * end], tf, tt, vf, vt, false).val;
        const double q = eval_flow(c[2 * end + 1], tf, tt, vf, vt, false).val;
        h[row++] = p * p + q * q - br.s_max * br.s_max;
      }
    }
    for (int k : angle_) {
      const auto& br = ac_->branches[k];
      const double d = theta(x, br.from) - theta(x, br.to);
      h[row++] = d - br.theta_max;
      h[row++] = br.theta_min - d;
    }
  }
  for (const auto& lr : le_rows_) {
    double s = -lr.rhs;
    for (const auto& [var, c] : lr.terms) s += c * x[var];
    h[row++] = s;
  }
  return h;
}

SpMat OpfModel::eq_jacobian(const Vec& x) const {
  std::vector<Trip> trip;
  if (ac_) {
    const int nb = ac_->num_busses();
    for (const auto& br : ac_->branches) {
      const auto k = flow_coefs(br);
      const double tf = theta(x, br.from), tt = theta(x, br.to);
      const double vf = x[v_var(br.from)], vt = x[v_var(br.to)];
      const std::array<int, 4> gi{theta_var(br.from), theta_var(br.to), v_var(br.from), v_var(br.to)};
      const std::array<int, 4> rows{br.from, nb + br.from, br.to, nb + br.to};
      for (int t = 0; t < 4; ++t) {
        const FlowEval e = eval_flow(k[t], tf, tt, vf, vt, false);
        for (int a = 0; a < 4; ++a)
          if (gi[a] >= 0) trip.emplace_back(rows[t], gi[a], e.grad[a]);
      }
    }
    for (std::size_t g = 0; g < ac_->gens.size(); ++g) {
      const int bus = ac_->gens[g].bus;
      trip.emplace_back(bus, pg_var(static_cast<int>(g)), -1.0);
      trip.emplace_back(nb + bus, qg_var(static_cast<int>(g)), -1.0);
    }
    for (std::size_t l = 0; l < ac_->loads.size(); ++l) {
      if (load_z_[l]) continue;
      const auto& ld = ac_->loads[l];
      trip.emplace_back(ld.bus, zd_var_[l], ld.p_d);
      trip.emplace_back(nb + ld.bus, zd_var_[l], ld.q_d);
    }
    for (const auto& sh : ac_->shunts) {
      const double v = x[v_var(sh.bus)];
      trip.emplace_back(sh.bus, v_var(sh.bus), 2.0 * sh.g_s * v);
      trip.emplace_back(nb + sh.bus, v_var(sh.bus), -2.0 * sh.b_s * v);
    }
    for (const auto& p : pseudo_) trip.emplace_back(nb + p.bus, v_var(p.bus), p.q_per_v);
    for (const auto& q : q_terms_) trip.emplace_back(nb + q.bus, q.var, q.coef);
  }
  const int off = num_ac_eq();
  for (std::size_t k = 0; k < eq_rows_.size(); ++k)
    for (const auto& [var, c] : eq_rows_[k].terms) trip.emplace_back(off + static_cast<int>(k), var, c);
  SpMat j(num_eq(), num_vars());
  j.setFromTriplets(trip.begin(), trip.end());
  return j;
}

SpMat OpfModel::ineq_jacobian(const Vec& x) const {
  std::vector<Trip> trip;
  int row = 0;
  if (ac_) {
    for (int end = 0; end < 2; ++end) {
      for (int k : rated_) {
        const auto& br = ac_->branches[k];
        const auto c = flow_coefs(br);
        const double tf = theta(x, br.from), tt = theta(x, br.to);
        const double vf = x[v_var(br.from)], vt = x[v_var(br.to)];
        const FlowEval p = eval_flow(c[2 * end], tf, tt, vf, vt, false);
        const FlowEval q = eval_flow(c[2 * end + 1], tf, tt, vf, vt, false);
        const std::array<int, 4> gi{theta_var(br.from), theta_var(br.to), v_var(br.from), v_var(br.to)};
        for (int a = 0; a < 4; ++a)
          if (gi[a] >= 0) trip.emplace_back(row, gi[a], 2.0 * (p.val * p.grad[a] + q.val * q.grad[a]));
        ++row;
      }
    }
    for (int k : angle_) {
      const auto& br = ac_->branches[k];
      const int f = theta_var(br.from), t = theta_var(br.to);
      if (f >= 0) trip.emplace_back(row, f, 1.0);
      if (t >= 0) trip.emplace_back(row, t, -1.0);
      ++row;
      if (f >= 0) trip.emplace_back(row, f, -1.0);
      if (t >= 0) trip.emplace_back(row, t, 1.0);
      ++row;
    }
  }
  for (const auto& lr : le_rows_) {
    for (const auto& [var, c] : lr.terms) trip.emplace_back(row, var, c);
    ++row;
  }
  SpMat j(num_ineq(), num_vars());
  j.setFromTriplets(trip.begin(), trip.end());
  return j;
}

SpMat OpfModel::lagrangian_hessian(const Vec& x, const Vec& lam, const Vec& mu) const {
  std::vector<Trip> trip;
  for (int i = 0; i < num_vars(); ++i)
    if (obj_sq_[i] != 0.0) trip.emplace_back(i, i, 2.0 * obj_sq_[i]);
  if (ac_) {
    const int nb = ac_->num_busses();
    auto scatter = [&](const std::array<int, 4>& gi, const std::array<std::array<double, 4>, 4>& h, double w) {
      if (w == 0.0) return;
      for (int a = 0; a < 4; ++a) {
        if (gi[a] < 0) continue;
        for (int b = 0; b < 4; ++b)
          if (gi[b] >= 0 && h[a][b] != 0.0) trip.emplace_back(gi[a], gi[b], w * h[a][b]);
      }
    };
    for (const auto& br : ac_->branches) {
      const auto k = flow_coefs(br);
      const double tf = theta(x, br.from), tt = theta(x, br.to);
      const double vf = x[v_var(br.from)], vt = x[v_var(br.to)];
      const std::array<int, 4> gi{theta_var(br.from), theta_var(br.to), v_var(br.from), v_var(br.to)};
      const std::array<int, 4> rows{br.from, nb + br.from, br.to, nb + br.to};
      for (int t = 0; t < 4; ++t) scatter(gi, eval_flow(k[t], tf, tt, vf, vt, true).hess, lam[rows[t]]);
    }
    for (const auto& sh : ac_->shunts) {
      const double w = 2.0 * sh.g_s * lam[sh.bus] - 2.0 * sh.b_s * lam[nb + sh.bus];
      if (w != 0.0) trip.emplace_back(v_var(sh.bus), v_var(sh.bus), w);
    }

    int row = 0;
    for (int end = 0; end < 2; ++end) {
      for (int kb : rated_) {
        const double m = mu[row++];
        if (m == 0.0) continue;
        const auto& br = ac_->branches[kb];
        const auto c = flow_coefs(br);
        const double tf = theta(x, br.from), tt = theta(x, br.to);
        const double vf = x[v_var(br.from)], vt = x[v_var(br.to)];
        const FlowEval p = eval_flow(c[2 * end], tf, tt, vf, vt, true);
        const FlowEval q = eval_flow(c[2 * end + 1], tf, tt, vf, vt, true);
        std::array<std::array<double, 4>, 4> h{};
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b)
            h[a][b] = 2.0 * (p.grad[a] * p.grad[b] + p.val * p.hess[a][b] + q.grad[a] * q.grad[b] +
                             q.val * q.hess[a][b]);
        const std::array<int, 4> gi{theta_var(br.from), theta_var(br.to), v_var(br.from), v_var(br.to)};
        scatter(gi, h, m);
      }
    }
  }
  SpMat hm(num_vars(), num_vars());
  hm.setFromTriplets(trip.begin(), trip.end());
  return hm;
}

}  // namespace gicopt
