#pragma once

// End-to-end pipeline, benchmark suites and report writers behind the CLI.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gicopt/ac_opf.hpp"
#include "gicopt/case_model.hpp"
#include "gicopt/dc_network.hpp"
#include "gicopt/gic_engine.hpp"
#include "gicopt/placement.hpp"

namespace gicopt {

struct PlacementSettings {
  PlacementObjective objective = PlacementObjective::BlockerCost;
  std::optional<double> budget;
  std::optional<int> count;
  CountSense count_sense = CountSense::Equal;
  std::optional<double> shed_cap;
  std::optional<double> served_frac = 0.85;
  double gap = 0.0;
  double time_limit_s = std::numeric_limits<double>::infinity();
  GicSquareSet gic_set = GicSquareSet::TransformerEffective;
  bool enumerate = false;
};

PlacementProblem make_problem(const NetworkCase& c, const PlacementSettings& s, const OpfOptions& ac = {});
PlacementSolution solve_placement(const PlacementProblem& p, bool enumerate);

// Applies --field-mag / --field-dir style overrides.
void override_field(NetworkCase& c, std::optional<double> magnitude, std::optional<double> direction);

// Candidate node set for a list of transformer ids; throws std::invalid_argument
// naming an id that is not a candidate.
BlockerConfig blockers_from_ids(const DcNetwork& net, const std::vector<Id>& ids);

struct PipelineOptions {
  std::filesystem::path out_dir = "gicopt-out";
  bool dump_dc_only = false;
  std::optional<double> field_mag;
  std::optional<double> field_dir;
  std::vector<Id> blockers;  // configuration for the gic and AC stages
  OpfOptions ac;
  std::optional<PlacementSettings> placement;
};

struct BenchmarkRow {
  std::string case_name;
  int busses = 0;
  int placed = 0;
  int candidates = 0;
  double load_met = 0.0;  // fraction
  double cost = 0.0;
  double seconds = 0.0;
  std::string machine;
  std::string status = "ok";
  std::string placed_ids;  // ';'-separated
};

struct PipelineResult {
  std::vector<std::filesystem::path> artifacts;
  std::optional<std::string> ac_failure;  // AC stage error when placement still ran
  std::optional<PlacementSolution> placement;
  std::optional<BenchmarkRow> row;
};

// build -> field coupling -> gic -> q_loss -> AC (-> placement), writing every
// intermediate result under out_dir. Errors propagate as gicopt::Error.
PipelineResult run_pipeline(const std::filesystem::path& case_path, const PipelineOptions& o);

struct BenchmarkReport {
  std::string suite;
  std::string machine;
  std::vector<BenchmarkRow> rows;

  void write_csv(std::ostream& os) const;
  void write_markdown(std::ostream& os) const;
};

// Suite manifest: {"name": ..., "cases": [{"case": path relative to the
// manifest, "objective", "budget", "count", "shed_cap", "served_frac",
// "method": "branch-and-bound" | "enumerate", "time_limit", "skip"}]}.
// Per-case failures are recorded in the row's status.
BenchmarkReport benchmark(const std::filesystem::path& suite_path);

std::string machine_descriptor();
std::string format_percent(double fraction);  // 1.0 -> "100%", 0.8183 -> "81.8%"
std::string format_cost(double cost);         // 1 -> "1.0"

BenchmarkRow make_row(const NetworkCase& c, const PlacementSolution& s);

// Reports.
void write_gic_csv(std::ostream& os, const DcNetwork& net, const GicSolution& gic);
void write_node_voltage_csv(std::ostream& os, const DcNetwork& net, const GicSolution& gic);
nlohmann::json ac_to_json(const AcSolution& s);
void write_ac_summary(std::ostream& os, const AcSolution& s);
nlohmann::json placement_to_json(const PlacementSolution& s, const PlacementProblem& p);
void write_placement_csv(std::ostream& os, const PlacementSolution& s);

}  // namespace gicopt
