#pragma once

// Blocker placement: choose which candidate neutrals get a dc blocker.
//
// Every configuration is judged by the same exact evaluator: a structural GIC
// solve, the resulting q_loss pseudo-loads, and an AC OPF that minimizes
// shedding subject to the served-fraction and shed-cost limits. Enumeration
// applies it to every subset; branch-and-bound prunes with a convex
// relaxation and applies it only at integral nodes.

#include <chrono>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gicopt/ac_opf.hpp"
#include "gicopt/case_model.hpp"
#include "gicopt/dc_network.hpp"
#include "gicopt/gic_engine.hpp"

namespace gicopt {

enum class PlacementObjective { BlockerCost, Shed, GicSquared };
enum class GicSquareSet { TransformerEffective, AllEdges };
enum class CountSense { Equal, AtMost };

std::string_view to_string(PlacementObjective o);
std::optional<PlacementObjective> parse_placement_objective(std::string_view s);

struct PlacementProblem {
  NetworkCase network;
  PlacementObjective objective = PlacementObjective::BlockerCost;
  std::optional<double> budget;        // sum of blocker costs <= budget
  std::optional<int> count;            // number of blockers
  CountSense count_sense = CountSense::Equal;
  std::optional<double> shed_cap;      // shed cost <= cap
  std::optional<double> served_frac;   // served fraction >= rho
  double gap = 0.0;                    // relative optimality gap for branch-and-bound
  double time_limit_s = std::numeric_limits<double>::infinity();
  GicSquareSet gic_set = GicSquareSet::TransformerEffective;
  OpfOptions ac;                       // coupling and solver settings for the AC stage
};

// Throws Error (exit code Usage) when the objective lacks the constraints it
// needs: shed needs a budget or count, gic-sq needs a count.
void check_problem(const PlacementProblem& p);

// Whether the AC stage is part of the evaluation.
bool needs_ac(const PlacementProblem& p);

// Shared, immutable state for one problem.
struct PlacementContext {
  const PlacementProblem* problem = nullptr;
  DcNetwork net;  // field applied
};

PlacementContext make_context(const PlacementProblem& p);

struct ConfigEvaluation {
  bool feasible = false;
  std::string reason;  // why not, when infeasible
  double objective = std::numeric_limits<double>::infinity();
  double blocker_cost = 0.0;
  int count = 0;
  double served_fraction = 0.0;
  double shed_cost = 0.0;
  double gic_sq = 0.0;
  std::optional<GicSolution> gic;
  std::optional<AcSolution> ac;
  std::vector<PseudoLoad> pseudo;
};

// Combinatorial limits only (budget, count).
bool within_limits(const PlacementContext& ctx, const BlockerConfig& cfg);

ConfigEvaluation evaluate_config(const PlacementContext& ctx, const BlockerConfig& cfg);

// Sum of squared effective GIC over transformers, or of squared edge currents
// over every in-service dc edge.
double objective_gic_sq(const GicSolution& gic, GicSquareSet set = GicSquareSet::TransformerEffective);

enum class Optimality { Proved, Gap, Timeout };
std::string_view to_string(Optimality o);

struct IncumbentEvent {
  double seconds = 0.0;
  double objective = 0.0;
  long node = 0;
};

// One branch-and-bound node: candidate fixings (-1 free, 0 open, 1 blocked)
// and the relaxation bound when the relaxation converged.
struct NodeRecord {
  std::vector<int> fixed;
  std::optional<double> bound;
};

struct SearchStats {
  long nodes = 0;
  long evaluations = 0;
  double seconds = 0.0;
  std::vector<IncumbentEvent> incumbents;
  std::vector<NodeRecord> log;
};

struct TransformerGicReport {
  Id transformer;
  double i_eff_before = 0.0;  // no blockers
  double i_eff_after = 0.0;   // chosen placement
};

struct PlacementSolution {
  std::vector<Id> placed;  // transformer ids, candidate order
  std::vector<std::size_t> placed_nodes;
  int candidates = 0;
  double objective = 0.0;
  double load_met = 0.0;  // served fraction
  double blocker_cost = 0.0;
  double shed_cost = 0.0;
  double gic_sq = 0.0;
  std::vector<TransformerGicReport> transformers;
  SearchStats stats;
  Optimality optimality = Optimality::Proved;
  double gap = 0.0;
};

inline constexpr std::size_t kMaxEnumerationCandidates = 20;

// Exhaustive search. Throws Error (exit code Usage) above
// kMaxEnumerationCandidates and InfeasibleError when nothing is feasible.
// Uses GICOPT_THREADS worker threads when set.
PlacementSolution enumerate_optimal(const PlacementProblem& p);

// Best-first branch-and-bound on the convex relaxation.
PlacementSolution branch_and_bound(const PlacementProblem& p);

struct ConstraintSlack {
  std::string name;  // budget, count, shed-cap, served-fraction, ac-feasible
  bool active = false;
  double slack = 0.0;  // >= 0 when satisfied (count equality: -|difference|)
  bool pass = true;
};

struct ConstraintReport {
  std::vector<ConstraintSlack> constraints;
  bool all_pass = true;
};

// Re-evaluates the placed set from scratch and reports every constraint.
ConstraintReport constraint_check(const PlacementSolution& s, const PlacementProblem& p, double tol = 1e-6);

// Explanation of why no configuration is feasible, naming the binding
// constraint.
std::string infeasibility_certificate(const PlacementContext& ctx);

// ---- relaxation (used by branch_and_bound, exposed for tests) ----

struct RelaxationBounds {
  std::vector<double> v_lo, v_hi;  // per dc node, volts
  std::vector<double> lead_max;    // per candidate, amps between neutral and ground grid
  std::vector<double> dv_max;      // per candidate, volts across an open blocker
  std::vector<double> i_max;       // per transformer, amps
};

RelaxationBounds derive_bounds(const PlacementContext& ctx);

struct RelaxationResult {
  bool converged = false;
  double bound = 0.0;
  std::vector<double> z;  // per candidate, fixed values included
};

// Relaxation with candidates fixed per `fixed` (-1 free, 0 open, 1 blocked).
RelaxationResult solve_relaxation(const PlacementContext& ctx, const RelaxationBounds& b,
                                  const std::vector<int>& fixed);

}  // namespace gicopt
