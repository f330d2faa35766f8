#pragma once

// Primal-dual interior-point method for
//
//   min f(x)  s.t.  g(x) = 0,  h(x) <= 0,  lo <= x <= hi
//
// following the step structure of MATPOWER's MIPS: Newton steps on the
// perturbed KKT conditions with the inequality slacks eliminated, separate
// primal and dual step lengths, and a centering parameter sigma.

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace gicopt::nlp {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

class Problem {
 public:
  virtual ~Problem() = default;

  virtual int num_vars() const = 0;
  virtual int num_eq() const = 0;
  virtual int num_ineq() const = 0;  // rows of h, not counting variable bounds

  virtual void bounds(Vec& lo, Vec& hi) const = 0;  // +-infinity where unbounded
  virtual Vec initial_point() const = 0;

  virtual double objective(const Vec& x) const = 0;
  virtual Vec gradient(const Vec& x) const = 0;
  virtual Vec eq(const Vec& x) const = 0;
  virtual Vec ineq(const Vec& x) const = 0;
  virtual SpMat eq_jacobian(const Vec& x) const = 0;    // num_eq x num_vars
  virtual SpMat ineq_jacobian(const Vec& x) const = 0;  // num_ineq x num_vars

  // Hessian of f + lam'g + mu'h, full (both triangles).
  virtual SpMat lagrangian_hessian(const Vec& x, const Vec& lam, const Vec& mu) const = 0;
};

struct Options {
  double feas_tol = 1e-10;  // absolute, on max |g| and max(h, 0)
  double grad_tol = 1e-7;   // scaled, as in MIPS
  double comp_tol = 1e-9;
  double cost_tol = 1e-9;
  int max_iter = 300;
  double step_fraction = 0.99995;
  double sigma = 0.1;
  double z0 = 1.0;
  // Constant added to the Hessian block of every Newton system. A proximal
  // term around the current iterate: it leaves KKT points unchanged but keeps
  // steps bounded when the objective is flat on the feasible set.
  double primal_reg = 1e-6;
};

enum class Status { Converged, MaxIterations, NumericalFailure };

struct Result {
  Status status = Status::NumericalFailure;
  Vec x;
  Vec lam;  // equality multipliers
  Vec mu;   // inequality multipliers (h rows only)
  double objective = 0.0;
  int iterations = 0;
  double max_eq_residual = 0.0;
  double max_ineq_violation = 0.0;  // over h rows and bounds

  bool converged() const { return status == Status::Converged; }
};

Result solve(const Problem& problem, const Options& options = {});

}  // namespace gicopt::nlp
