#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <optional>

#include "gicopt/nlp.hpp"

using namespace gicopt::nlp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SpMat sparse(int r, int c, std::initializer_list<Eigen::Triplet<double>> t) {
  SpMat m(r, c);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

// min (x-1)^2 + (y-2)^2  s.t.  x + y = 1, optional y <= cap, x in [xlo, xhi].
class SmallQp : public Problem {
 public:
  SmallQp(std::optional<double> cap, double xlo, double xhi) : cap_(cap), xlo_(xlo), xhi_(xhi) {}
  int num_vars() const override { return 2; }
  int num_eq() const override { return 1; }
  int num_ineq() const override { return cap_ ? 1 : 0; }
  void bounds(Vec& lo, Vec& hi) const override {
    lo = Vec::Constant(2, -kInf);
    hi = Vec::Constant(2, kInf);
    lo[0] = xlo_;
    hi[0] = xhi_;
  }
  Vec initial_point() const override { return Vec::Constant(2, 0.9); }
  double objective(const Vec& x) const override { return std::pow(x[0] - 1, 2) + std::pow(x[1] - 2, 2); }
  Vec gradient(const Vec& x) const override { return Vec{{2 * (x[0] - 1), 2 * (x[1] - 2)}}; }
  Vec eq(const Vec& x) const override { return Vec{{x[0] + x[1] - 1}}; }
  Vec ineq(const Vec& x) const override {
    if (!cap_) return Vec(0);
    return Vec{{x[1] - *cap_}};
  }
  SpMat eq_jacobian(const Vec&) const override { return sparse(1, 2, {{0, 0, 1.0}, {0, 1, 1.0}}); }
  SpMat ineq_jacobian(const Vec&) const override {
    if (!cap_) return SpMat(0, 2);
    return sparse(1, 2, {{0, 1, 1.0}});
  }
  SpMat lagrangian_hessian(const Vec&, const Vec&, const Vec&) const override {
    return sparse(2, 2, {{0, 0, 2.0}, {1, 1, 2.0}});
  }

 private:
  std::optional<double> cap_;
  double xlo_, xhi_;
};

// Constant objective on the unit circle within the positive quadrant.
class FlatCircle : public Problem {
 public:
  int num_vars() const override { return 2; }
  int num_eq() const override { return 1; }
  int num_ineq() const override { return 0; }
  void bounds(Vec& lo, Vec& hi) const override {
    lo = Vec::Zero(2);
    hi = Vec::Ones(2);
  }
  Vec initial_point() const override { return Vec::Constant(2, 0.5); }
  double objective(const Vec&) const override { return 3.0; }
  Vec gradient(const Vec&) const override { return Vec::Zero(2); }
  Vec eq(const Vec& x) const override { return Vec{{x.squaredNorm() - 1.0}}; }
  Vec ineq(const Vec&) const override { return Vec(0); }
  SpMat eq_jacobian(const Vec& x) const override { return sparse(1, 2, {{0, 0, 2 * x[0]}, {0, 1, 2 * x[1]}}); }
  SpMat ineq_jacobian(const Vec&) const override { return SpMat(0, 2); }
  SpMat lagrangian_hessian(const Vec&, const Vec& lam, const Vec&) const override {
    return sparse(2, 2, {{0, 0, 2 * lam[0]}, {1, 1, 2 * lam[0]}});
  }
};

}  // namespace

TEST(InteriorPoint, EqualityConstrainedQp) {
  const Result r = solve(SmallQp(std::nullopt, -kInf, kInf));
  ASSERT_TRUE(r.converged());
  EXPECT_NEAR(r.x[0], 0.0, 1e-7);
  EXPECT_NEAR(r.x[1], 1.0, 1e-7);
  EXPECT_NEAR(r.objective, 2.0, 1e-7);
  EXPECT_NEAR(r.lam[0], 2.0, 1e-6);
}

TEST(InteriorPoint, ActiveInequality) {
  const Result r = solve(SmallQp(0.5, -kInf, kInf));
  ASSERT_TRUE(r.converged());
  EXPECT_NEAR(r.x[0], 0.5, 1e-7);
  EXPECT_NEAR(r.x[1], 0.5, 1e-7);
  EXPECT_NEAR(r.objective, 2.5, 1e-7);
  EXPECT_GT(r.mu[0], 0.0);
  EXPECT_LE(r.max_ineq_violation, 1e-10);
}

TEST(InteriorPoint, ActiveBound) {
  const Result r = solve(SmallQp(std::nullopt, 0.8, 2.0));
  ASSERT_TRUE(r.converged());
  EXPECT_NEAR(r.x[0], 0.8, 1e-7);
  EXPECT_NEAR(r.x[1], 0.2, 1e-7);
  EXPECT_NEAR(r.objective, 3.28, 1e-7);
}

TEST(InteriorPoint, RegularizationDoesNotMoveTheOptimum) {
  Options plain;
  plain.primal_reg = 0.0;
  const Result a = solve(SmallQp(0.5, 0.0, 2.0), plain);
  const Result b = solve(SmallQp(0.5, 0.0, 2.0));
  ASSERT_TRUE(a.converged() && b.converged());
  EXPECT_NEAR(a.x[0], b.x[0], 1e-7);
  EXPECT_NEAR(a.x[1], b.x[1], 1e-7);
}

TEST(InteriorPoint, FlatObjectiveReachesFeasibility) {
  const Result r = solve(FlatCircle());
  ASSERT_TRUE(r.converged()) << r.iterations;
  EXPECT_LE(r.max_eq_residual, 1e-10);
  EXPECT_NEAR(r.x.norm(), 1.0, 1e-9);
  EXPECT_EQ(r.objective, 3.0);
}

TEST(InteriorPoint, IterationLimitIsReported) {
  Options o;
  o.max_iter = 1;
  const Result r = solve(SmallQp(0.5, 0.0, 2.0), o);
  EXPECT_EQ(r.status, Status::MaxIterations);
}
