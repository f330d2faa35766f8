#pragma once

// Polar AC power flow and optimal power flow with GIC reactive-loss
// pseudo-loads and load-shedding decisions.
//
// Sign conventions: p_from/q_from is the power entering the branch at its
// from bus; p_to/q_to is the power the branch delivers into its to bus. Bus
// balance at i is
//   sum_{from=i} p_from - sum_{to=i} p_to = sum p_g - sum p_d z_d - g_s v^2
//   sum_{from=i} q_from - sum_{to=i} q_to = sum q_g - sum q_d z_d + b_s v^2 - q_loss
// with z_d = 1 meaning the load is served.

#include <optional>
#include <string>
#include <vector>

#include "gicopt/case_model.hpp"
#include "gicopt/dc_network.hpp"
#include "gicopt/gic_engine.hpp"
#include "gicopt/nlp.hpp"

namespace gicopt {

struct BranchFlow {
  double p_from = 0.0;
  double q_from = 0.0;
  double p_to = 0.0;
  double q_to = 0.0;
};

// Pi-model branch flows; b_sh is the total line charging, split evenly.
BranchFlow branch_flow(double v_j, double v_k, double theta_j, double theta_k, double g, double b,
                       double b_sh);

// Reactive consumption at `bus`: q_const + q_per_v * v_bus, per-unit.
struct PseudoLoad {
  Id bus;
  double q_const = 0.0;
  double q_per_v = 0.0;
  Id source;  // transformer id, for reporting
};

// One pseudo-load per transformer with nonzero loss, on its high-side bus,
// proportional to that bus's voltage.
std::vector<PseudoLoad> qloss_pseudo_loads(const DcNetwork& net, const GicSolution& gic);

enum class SolveMode { Opf, PowerFlow };
enum class ObjectiveMode { GenCost, ShedCost };
enum class ShedMode { Fixed, Binary, Continuous };
enum class CouplingMode { FixedPoint, Embedded };

struct OpfOptions {
  SolveMode mode = SolveMode::Opf;
  ObjectiveMode objective = ObjectiveMode::GenCost;
  ShedMode shed = ShedMode::Fixed;
  std::vector<double> load_z;  // served fraction when shedding is fixed; empty = all served

  std::optional<double> min_served_fraction;  // sum |p_d| z_d >= rho sum |p_d|
  std::optional<double> max_shed_cost;        // sum kappa |p_d| (1 - z_d) <= cap

  nlp::Options nlp;
  double residual_tol = 1e-8;
  double pf_tol = 1e-10;
  int pf_max_iter = 30;
  int shed_node_limit = 5000;

  // GIC coupling used by solve_coupled: FixedPoint runs up to
  // coupling_rounds AC solves, re-evaluating q_loss at the last voltages;
  // Embedded keeps q_loss proportional to v inside one solve.
  CouplingMode coupling = CouplingMode::FixedPoint;
  int coupling_rounds = 1;
  double coupling_tol = 1e-6;
};

enum class AcStatus { Converged, LimitsViolated };

struct AcSolution {
  AcStatus status = AcStatus::Converged;
  std::vector<Id> bus_ids;
  std::vector<double> v, theta;
  std::vector<Id> gen_ids;
  std::vector<double> p_g, q_g;
  std::vector<Id> branch_ids;  // in-service branches only
  std::vector<BranchFlow> flows;
  std::vector<Id> load_ids;
  std::vector<double> z_d;
  std::vector<double> q_pseudo;  // pseudo-load per bus at the solution
  double objective = 0.0;
  double max_residual = 0.0;         // power balance, independent re-check
  double max_bound_violation = 0.0;  // voltage, dispatch, thermal, angle
  int iterations = 0;
  int shed_nodes = 0;

  double voltage(const Id& bus) const;
};

double served_fraction(const NetworkCase& c, const AcSolution& s);

// Pseudo-loads frozen at the voltages of `at` (1.0 pu everywhere if null).
std::vector<PseudoLoad> freeze_pseudo_loads(const std::vector<PseudoLoad>& loads, const AcSolution* at);

// Throws DivergenceError when the solver stalls and InfeasibleError when no
// shedding decision satisfies the constraints.
AcSolution solve_acpf(const NetworkCase& c, const std::vector<PseudoLoad>& pseudo, const OpfOptions& opts);

double objective_gen_cost(const NetworkCase& c, const AcSolution& s);
// sum kappa_d |p_d| (1 - z_d) over `loads`, matched to the solution by id.
double objective_shed_cost(const AcSolution& s, const std::vector<Load>& loads);

struct ResidualReport {
  double max_balance = 0.0;     // per-unit, P and Q
  double max_flow = 0.0;        // reported flows vs re-evaluated branch_flow
  double max_slack_angle = 0.0; // rad
  double max_bound = 0.0;       // voltage, dispatch, thermal, angle difference, z in [0,1]

  double max_residual() const;
};

// Re-evaluates balance, flows and limits from the reported voltages alone.
ResidualReport check_residuals(const NetworkCase& c, const std::vector<PseudoLoad>& pseudo,
                               const AcSolution& s);

// Reactive headroom at a bus: sum of (q_max - q_g) over its generators, or
// v - v_min at a bus without generation.
double reactive_margin(const NetworkCase& c, const AcSolution& s, const Id& bus);

struct CoupledSolution {
  GicSolution gic;
  std::vector<PseudoLoad> pseudo;  // as used by the final AC solve
  AcSolution ac;
  int rounds = 0;
  bool coupling_converged = true;
};

// GIC solve, q_loss, AC solve.
CoupledSolution solve_coupled(const NetworkCase& c, const DcNetwork& net, const BlockerConfig& cfg,
                              const OpfOptions& opts);

}  // namespace gicopt
