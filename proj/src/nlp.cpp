#include "gicopt/nlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/SparseLU>

namespace gicopt::nlp {

namespace {

// Variable bounds as extra rows of h: (index, sign, rhs) meaning
// sign * x[index] - rhs <= 0.
struct BoundRow {
  int var;
  double sign;
  double rhs;
};

struct Evaluation {
  double f = 0.0;
  Vec df;
  Vec g;
  Vec h;
  SpMat jg;
  SpMat jh;
};

double inf_norm(const Vec& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

bool finite(const Vec& v) { return v.allFinite(); }

class Solver {
 public:
  Solver(const Problem& p, const Options& o) : p_(p), o_(o) {
    n_ = p.num_vars();
    neq_ = p.num_eq();
    nh_ = p.num_ineq();
    Vec lo, hi;
    p.bounds(lo, hi);
    for (int i = 0; i < n_; ++i) {
      if (std::isfinite(lo[i])) bounds_.push_back({i, -1.0, -lo[i]});
      if (std::isfinite(hi[i])) bounds_.push_back({i, 1.0, hi[i]});
    }
    niq_ = nh_ + static_cast<int>(bounds_.size());
  }

  Result run() {
    Result res;
    Vec x = p_.initial_point();
    Evaluation ev = evaluate(x);
    if (!std::isfinite(ev.f) || !finite(ev.g) || !finite(ev.h)) return fail(res, x, ev, 0);

    Vec z = Vec::Constant(niq_, o_.z0);
    for (int i = 0; i < niq_; ++i)
      if (ev.h[i] < -o_.z0) z[i] = -ev.h[i];
    double gamma = 1.0;
    Vec mu = Vec::Constant(niq_, o_.z0);
    for (int i = 0; i < niq_; ++i)
      if (gamma / z[i] > o_.z0) mu[i] = gamma / z[i];
    Vec lam = Vec::Zero(neq_);

    double f_old = ev.f;
    for (int it = 1; it <= o_.max_iter; ++it) {
      const Vec mu_h = mu.head(nh_);
      SpMat lxx = p_.lagrangian_hessian(x, lam, mu_h);
      Vec lx = ev.df;
      if (neq_) lx += ev.jg.transpose() * lam;
      if (niq_) lx += ev.jh.transpose() * mu;

      Vec zinv = z.cwiseInverse();
      SpMat m = lxx;
      Vec nvec = lx;
      if (niq_) {
        Vec d = mu.cwiseProduct(zinv);
        SpMat jht = ev.jh.transpose();
        m += jht * d.asDiagonal() * ev.jh;
        Vec w = zinv.cwiseProduct(mu.cwiseProduct(ev.h) + Vec::Constant(niq_, gamma));
        nvec += jht * w;
      }

      Vec dx, dlam;
      if (!newton_step(m, ev.jg, nvec, ev.g, dx, dlam)) return fail(res, x, ev, it);

      Vec dz, dmu;
      if (niq_) {
        dz = -ev.h - z - ev.jh * dx;
        dmu = -mu + zinv.cwiseProduct(Vec::Constant(niq_, gamma) - mu.cwiseProduct(dz));
      }

      double alpha_p = 1.0, alpha_d = 1.0;
      for (int i = 0; i < niq_; ++i) {
        if (dz[i] < 0.0) alpha_p = std::min(alpha_p, o_.step_fraction * z[i] / -dz[i]);
        if (dmu[i] < 0.0) alpha_d = std::min(alpha_d, o_.step_fraction * mu[i] / -dmu[i]);
      }

      x += alpha_p * dx;
      if (niq_) {
        z += alpha_p * dz;
        mu += alpha_d * dmu;
        gamma = o_.sigma * z.dot(mu) / niq_;
      }
      if (neq_) lam += alpha_d * dlam;

      ev = evaluate(x);
      if (!std::isfinite(ev.f) || !finite(ev.g) || !finite(ev.h) || !finite(x))
        return fail(res, x, ev, it);

      lx = ev.df;
      if (neq_) lx += ev.jg.transpose() * lam;
      if (niq_) lx += ev.jh.transpose() * mu;

      const double max_g = inf_norm(ev.g);
      const double max_h = niq_ ? std::max(ev.h.maxCoeff(), 0.0) : 0.0;
      const double feas = std::max(max_g, max_h);
      const double grad =
          inf_norm(lx) / (1.0 + std::max(inf_norm(lam), inf_norm(mu)));
      const double comp = niq_ ? z.dot(mu) / (1.0 + inf_norm(x)) : 0.0;
      const double cost = std::abs(ev.f - f_old) / (1.0 + std::abs(f_old));
      f_old = ev.f;

      if (feas <= o_.feas_tol && grad <= o_.grad_tol && comp <= o_.comp_tol && cost <= o_.cost_tol) {
        res.status = Status::Converged;
        return finish(res, x, lam, mu, ev, it);
      }
    }
    res.status = Status::MaxIterations;
    return finish(res, x, lam, mu, ev, o_.max_iter);
  }

 private:
  Evaluation evaluate(const Vec& x) const {
    Evaluation ev;
    ev.f = p_.objective(x);
    ev.df = p_.gradient(x);
    ev.g = neq_ ? p_.eq(x) : Vec();
    ev.jg = neq_ ? p_.eq_jacobian(x) : SpMat(0, n_);
    Vec hnl = nh_ ? p_.ineq(x) : Vec();
    SpMat jhnl = nh_ ? p_.ineq_jacobian(x) : SpMat(0, n_);
    ev.h.resize(niq_);
    if (nh_) ev.h.head(nh_) = hnl;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(jhnl.nonZeros() + bounds_.size());
    for (int k = 0; k < jhnl.outerSize(); ++k)
      for (SpMat::InnerIterator itj(jhnl, k); itj; ++itj) trip.emplace_back(itj.row(), itj.col(), itj.value());
    for (std::size_t b = 0; b < bounds_.size(); ++b) {
      const auto& br = bounds_[b];
      const int row = nh_ + static_cast<int>(b);
      ev.h[row] = br.sign * x[br.var] - br.rhs;
      trip.emplace_back(row, br.var, br.sign);
    }
    ev.jh = SpMat(niq_, n_);
    ev.jh.setFromTriplets(trip.begin(), trip.end());
    return ev;
  }

  bool newton_step(const SpMat& m, const SpMat& jg, const Vec& nvec, const Vec& g, Vec& dx,
                   Vec& dlam) const {
    const int dim = n_ + neq_;
    Vec rhs(dim);
    rhs.head(n_) = -nvec;
    if (neq_) rhs.tail(neq_) = -g;

    double diag_scale = 1.0;
    for (int k = 0; k < m.outerSize(); ++k)
      for (SpMat::InnerIterator it(m, k); it; ++it)
        if (it.row() == it.col()) diag_scale = std::max(diag_scale, std::abs(it.value()));

    double delta = 0.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
      std::vector<Eigen::Triplet<double>> trip;
      trip.reserve(m.nonZeros() + 2 * jg.nonZeros() + dim);
      for (int k = 0; k < m.outerSize(); ++k)
        for (SpMat::InnerIterator it(m, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
      for (int k = 0; k < jg.outerSize(); ++k)
        for (SpMat::InnerIterator it(jg, k); it; ++it) {
          trip.emplace_back(n_ + it.row(), it.col(), it.value());
          trip.emplace_back(it.col(), n_ + it.row(), it.value());
        }
      for (int i = 0; i < n_; ++i) trip.emplace_back(i, i, o_.primal_reg);
      if (delta > 0.0) {
        for (int i = 0; i < n_; ++i) trip.emplace_back(i, i, delta);
        for (int i = 0; i < neq_; ++i) trip.emplace_back(n_ + i, n_ + i, -delta * 1e-3);
      }
      SpMat kkt(dim, dim);
      kkt.setFromTriplets(trip.begin(), trip.end());
      kkt.makeCompressed();
      Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
      lu.analyzePattern(kkt);
      lu.factorize(kkt);
      if (lu.info() == Eigen::Success) {
        Vec sol = lu.solve(rhs);
        if (lu.info() == Eigen::Success && sol.allFinite()) {
          dx = sol.head(n_);
          dlam = neq_ ? Vec(sol.tail(neq_)) : Vec();
          return true;
        }
      }
      delta = delta == 0.0 ? 1e-10 * diag_scale : delta * 100.0;
    }
    return false;
  }

  Result& finish(Result& res, const Vec& x, const Vec& lam, const Vec& mu, const Evaluation& ev,
                 int it) const {
    res.x = x;
    res.lam = lam;
    res.mu = mu.head(nh_);
    res.objective = ev.f;
    res.iterations = it;
    res.max_eq_residual = inf_norm(ev.g);
    res.max_ineq_violation = niq_ ? std::max(ev.h.maxCoeff(), 0.0) : 0.0;
    return res;
  }

  Result& fail(Result& res, const Vec& x, const Evaluation& ev, int it) const {
    res.status = Status::NumericalFailure;
    res.x = x;
    res.objective = ev.f;
    res.iterations = it;
    res.max_eq_residual = ev.g.size() ? inf_norm(ev.g) : 0.0;
    res.max_ineq_violation = std::numeric_limits<double>::infinity();
    return res;
  }

  const Problem& p_;
  const Options& o_;
  int n_ = 0, neq_ = 0, nh_ = 0, niq_ = 0;
  std::vector<BoundRow> bounds_;
};

}  // namespace

Result solve(const Problem& problem, const Options& options) {
  return Solver(problem, options).run();
}

}  // namespace gicopt::nlp
