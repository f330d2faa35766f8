#pragma once

// Polar AC network model as an nlp::Problem, with room for extra variables
// and linear rows so the placement relaxation can bolt its dc part onto the
// same AC core.
//
// Variable layout: [theta (non-slack busses)] [v] [pg] [qg] [z_d (free
// loads)] [extra]. The AC block is absent when the model is built without a
// network.
//
// Equality rows: P balance per bus, Q balance per bus, then linear rows.
// Inequality rows: thermal limit at the from end, at the to end, angle
// difference limits, then linear rows.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gicopt/case_model.hpp"
#include "gicopt/nlp.hpp"

namespace gicopt {

// In-service AC data with bus references resolved to indices.
struct AcData {
  struct BranchData {
    Id id;
    int from = 0;
    int to = 0;
    double g = 0.0, b = 0.0, b_sh = 0.0;
    double s_max = 0.0;
    double theta_min = 0.0, theta_max = 0.0;
  };
  struct GenData {
    Id id;
    int bus = 0;
    double p_min = 0.0, p_max = 0.0, q_min = 0.0, q_max = 0.0;
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;
    std::optional<double> p_set, v_set;
  };
  struct LoadData {
    Id id;
    int bus = 0;
    double p_d = 0.0, q_d = 0.0;
    double shed_cost = 1.0;
    bool sheddable = true;
  };
  struct ShuntData {
    int bus = 0;
    double g_s = 0.0, b_s = 0.0;
  };

  std::vector<Id> bus_ids;
  std::vector<double> v_min, v_max;
  std::vector<bool> slack;
  std::vector<BranchData> branches;
  std::vector<GenData> gens;
  std::vector<LoadData> loads;
  std::vector<ShuntData> shunts;

  int num_busses() const { return static_cast<int>(bus_ids.size()); }
  int bus_index(const Id& id) const;  // -1 if absent
};

AcData compile_ac(const NetworkCase& c);

using LinearTerms = std::vector<std::pair<int, double>>;

class OpfModel : public nlp::Problem {
 public:
  // `load_z[l]` fixes load l's served fraction; nullopt makes it a variable in
  // [0, 1]. `ac` may be null for a model with extra variables only.
  OpfModel(const AcData* ac, std::vector<std::optional<double>> load_z);

  int add_var(double lo, double hi, double init);

  int theta_var(int bus) const { return theta_var_.empty() ? -1 : theta_var_[bus]; }
  int v_var(int bus) const { return v0_ + bus; }
  int pg_var(int g) const { return pg0_ + g; }
  int qg_var(int g) const { return qg0_ + g; }
  int zd_var(int l) const { return zd_var_[l]; }
  const std::optional<double>& load_fixed(int l) const { return load_z_[l]; }

  // Reactive consumption at `bus`: q_const + q_per_v * v_bus.
  void add_pseudo_load(int bus, double q_const, double q_per_v);
  // Reactive consumption at `bus` equal to coef * x[var].
  void add_q_term(int bus, int var, double coef);

  void add_linear_eq(LinearTerms terms, double rhs);  // sum c x = rhs
  void add_linear_le(LinearTerms terms, double rhs);  // sum c x <= rhs

  void add_objective_linear(int var, double c);
  void add_objective_square(int var, double c);  // c * x^2
  void add_objective_constant(double c) { obj_const_ += c; }
  void use_gen_cost();
  void use_shed_cost();  // kappa |p_d| (1 - z_d)

  void set_initial(int var, double value) { init_[var] = value; }
  void set_bounds(int var, double lo, double hi) {
    lo_[var] = lo;
    hi_[var] = hi;
  }

  const AcData* ac() const { return ac_; }
  int num_ac_eq() const { return ac_ ? 2 * ac_->num_busses() : 0; }

  int num_vars() const override { return static_cast<int>(lo_.size()); }
  int num_eq() const override;
  int num_ineq() const override;
  void bounds(nlp::Vec& lo, nlp::Vec& hi) const override;
  nlp::Vec initial_point() const override;
  double objective(const nlp::Vec& x) const override;
  nlp::Vec gradient(const nlp::Vec& x) const override;
  nlp::Vec eq(const nlp::Vec& x) const override;
  nlp::Vec ineq(const nlp::Vec& x) const override;
  nlp::SpMat eq_jacobian(const nlp::Vec& x) const override;
  nlp::SpMat ineq_jacobian(const nlp::Vec& x) const override;
  nlp::SpMat lagrangian_hessian(const nlp::Vec& x, const nlp::Vec& lam,
                                const nlp::Vec& mu) const override;

  double served_z(const nlp::Vec& x, int l) const;

 private:
  struct LinearRow {
    LinearTerms terms;
    double rhs;
  };
  struct QTerm {
    int bus, var;
    double coef;
  };
  struct Pseudo {
    int bus;
    double q_const, q_per_v;
  };

  double theta(const nlp::Vec& x, int bus) const;

  const AcData* ac_;
  std::vector<std::optional<double>> load_z_;
  std::vector<int> theta_var_;
  std::vector<int> zd_var_;
  int v0_ = 0, pg0_ = 0, qg0_ = 0;
  std::vector<double> lo_, hi_, init_;
  std::vector<QTerm> q_terms_;
  std::vector<Pseudo> pseudo_;
  std::vector<LinearRow> eq_rows_, le_rows_;
  std::vector<int> rated_;     // branches with a thermal row
  std::vector<int> angle_;     // branches with angle-difference rows
  std::vector<double> obj_lin_, obj_sq_;
  double obj_const_ = 0.0;
};

}  // namespace gicopt
