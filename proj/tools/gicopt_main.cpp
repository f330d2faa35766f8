// gicopt: command-line front end.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gicopt/ac_opf.hpp"
#include "gicopt/case_model.hpp"
#include "gicopt/dc_network.hpp"
#include "gicopt/error.hpp"
#include "gicopt/field_coupling.hpp"
#include "gicopt/gic_engine.hpp"
#include "gicopt/harness.hpp"
#include "gicopt/placement.hpp"

using namespace gicopt;

namespace {

struct FieldArgs {
  std::optional<double> mag;
  std::optional<double> dir;

  void attach(CLI::App* app) {
    app->add_option("--field-mag", mag, "Override field magnitude, V/km");
    app->add_option("--field-dir", dir, "Override field direction, degrees clockwise from north");
  }
};

struct AcArgs {
  bool pf = false;
  std::string objective = "gen-cost";
  std::string shed = "fixed";
  bool embedded = false;
  int rounds = 1;
  std::optional<double> served_frac;
  std::optional<double> shed_cap;

  void attach(CLI::App* app, bool with_mode) {
    if (with_mode) {
      app->add_flag("--pf", pf, "Power flow at generator setpoints instead of OPF");
      app->add_option("--ac-objective", objective, "OPF objective")->check(CLI::IsMember({"gen-cost", "shed"}));
      app->add_option("--shed", shed, "Load shedding")->check(CLI::IsMember({"fixed", "binary", "continuous"}));
      app->add_option("--served-frac", served_frac, "Served fraction lower bound");
      app->add_option("--shed-cap", shed_cap, "Shed cost upper bound");
    }
    app->add_flag("--embedded", embedded, "Keep q_loss proportional to voltage inside the AC solve");
    app->add_option("--rounds", rounds, "Fixed-point coupling rounds")->check(CLI::PositiveNumber);
  }

  OpfOptions options() const {
    OpfOptions o;
    o.mode = pf ? SolveMode::PowerFlow : SolveMode::Opf;
    o.objective = objective == "shed" ? ObjectiveMode::ShedCost : ObjectiveMode::GenCost;
    o.shed = shed == "binary" ? ShedMode::Binary : shed == "continuous" ? ShedMode::Continuous : ShedMode::Fixed;
    o.min_served_fraction = served_frac;
    o.max_shed_cost = shed_cap;
    o.coupling = embedded ? CouplingMode::Embedded : CouplingMode::FixedPoint;
    o.coupling_rounds = rounds;
    return o;
  }
};

struct PlaceArgs {
  std::string objective = "blocker-cost";
  std::optional<double> budget;
  std::optional<int> count;
  bool count_at_most = false;
  std::optional<double> shed_cap;
  std::optional<double> served_frac;
  bool no_served_frac = false;
  double gap = 0.0;
  std::optional<double> time_limit;
  bool enumerate = false;
  std::string gic_set = "transformers";

  void attach(CLI::App* app) {
    app->add_option("--objective", objective, "Placement objective")
        ->check(CLI::IsMember({"blocker-cost", "shed", "gic-sq"}));
    app->add_option("--budget", budget, "Blocker cost budget");
    app->add_option("--count", count, "Number of blockers");
    app->add_flag("--count-at-most", count_at_most, "Treat --count as an upper bound");
    app->add_option("--shed-cap", shed_cap, "Shed cost upper bound");
    app->add_option("--served-frac", served_frac, "Served fraction lower bound (0.85 for blocker-cost)");
    app->add_flag("--no-served-frac", no_served_frac, "Drop the served fraction constraint");
    app->add_option("--gap", gap, "Relative optimality gap")->check(CLI::NonNegativeNumber);
    app->add_option("--time-limit", time_limit, "Search time limit, seconds")->check(CLI::PositiveNumber);
    app->add_flag("--enumerate", enumerate, "Exhaustive search instead of branch-and-bound");
    app->add_option("--gic-set", gic_set, "Terms of the gic-sq objective")
        ->check(CLI::IsMember({"transformers", "edges"}));
  }

  PlacementSettings settings() const {
    PlacementSettings s;
    s.objective = *parse_placement_objective(objective);
    s.budget = budget;
    s.count = count;
    s.count_sense = count_at_most ? CountSense::AtMost : CountSense::Equal;
    s.shed_cap = shed_cap;
    s.served_frac = served_frac;
    if (!served_frac && s.objective == PlacementObjective::BlockerCost) s.served_frac = 0.85;
    if (no_served_frac) s.served_frac.reset();
    s.gap = gap;
    if (time_limit) s.time_limit_s = *time_limit;
    s.enumerate = enumerate;
    s.gic_set = gic_set == "edges" ? GicSquareSet::AllEdges : GicSquareSet::TransformerEffective;
    return s;
  }
};

std::vector<Id> split_ids(const std::string& s) {
  std::vector<Id> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (ch != ' ') {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

template <typename F>
void with_output(const std::string& path, F&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  write(os);
}

NetworkCase load_with_field(const std::string& path, const FieldArgs& f) {
  NetworkCase c = load_case(path);
  override_field(c, f.mag, f.dir);
  return c;
}

DcNetwork coupled_network(const NetworkCase& c) {
  DcNetwork net = build_dc_network(c);
  if (c.gmd) net = apply_field(std::move(net), *c.gmd);
  return net;
}

int run(int argc, char** argv) {
  CLI::App app{"GIC blocker placement with AC power flow"};
  app.set_config("--config", "", "Defaults file (TOML or INI)");
  app.require_subcommand(1);

  std::string case_path;

  auto* validate_cmd = app.add_subcommand("validate", "Check a case file");
  validate_cmd->add_option("case", case_path, "Case JSON")->required();

  auto* gic_cmd = app.add_subcommand("solve-gic", "Quasi-dc GIC for one blocker configuration");
  FieldArgs gic_field;
  std::string gic_block, gic_out, gic_dump;
  bool gic_nodes = false;
  gic_cmd->add_option("case", case_path, "Case JSON")->required();
  gic_field.attach(gic_cmd);
  gic_cmd->add_option("--block", gic_block, "Comma-separated transformer ids with blockers");
  gic_cmd->add_option("--dump-dc", gic_dump, "Write the dc network tables to this directory and stop");
  gic_cmd->add_flag("--nodes", gic_nodes, "Also print node voltages");
  gic_cmd->add_option("--out", gic_out, "Output CSV (default stdout)");

  auto* ac_cmd = app.add_subcommand("acpf", "AC power flow / OPF with GIC reactive losses");
  FieldArgs ac_field;
  AcArgs ac_args;
  std::string ac_block, ac_json;
  ac_cmd->add_option("case", case_path, "Case JSON")->required();
  ac_field.attach(ac_cmd);
  ac_args.attach(ac_cmd, true);
  ac_cmd->add_option("--block", ac_block, "Comma-separated transformer ids with blockers");
  ac_cmd->add_option("--json", ac_json, "Write the solution as JSON");

  auto* place_cmd = app.add_subcommand("place-blockers", "Optimal blocker placement");
  FieldArgs place_field;
  AcArgs place_ac;
  PlaceArgs place_args;
  std::string place_json, place_csv, place_out;
  place_cmd->add_option("case", case_path, "Case JSON")->required();
  place_field.attach(place_cmd);
  place_ac.attach(place_cmd, false);
  place_args.attach(place_cmd);
  place_cmd->add_option("--json", place_json, "Write the solution as JSON");
  place_cmd->add_option("--csv", place_csv, "Write per-transformer GIC before/after as CSV");
  place_cmd->add_option("--out", place_out, "Run the full pipeline and write every artifact here");

  auto* bench_cmd = app.add_subcommand("benchmark", "Run a suite manifest");
  std::string suite_path, bench_csv, bench_md;
  bench_cmd->add_option("suite", suite_path, "Suite manifest JSON")->required();
  bench_cmd->add_option("--csv", bench_csv, "CSV report (default stdout)");
  bench_cmd->add_option("--md", bench_md, "Markdown report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::Usage);
  }

  if (validate_cmd->parsed()) {
    const NetworkCase c = parse_case([&] {
      std::ifstream in(case_path);
      if (!in) throw IoError("cannot read " + case_path);
      try {
        return nlohmann::json::parse(in);
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(case_path + ": " + e.what());
      }
    }());
    const auto diags = validate(c);
    std::cout << format_diagnostics(diags);
    if (has_errors(diags)) return static_cast<int>(ExitCode::Validation);
    std::cout << "ok " << c.name << ": " << c.busses.size() << " busses, " << c.branches.size() << " branches, "
              << c.transformers.size() << " transformers, " << c.candidates.size() << " candidates\n";
    return 0;
  }

  if (gic_cmd->parsed()) {
    if (!gic_dump.empty()) {
      PipelineOptions o;
      o.out_dir = gic_dump;
      o.dump_dc_only = true;
      o.field_mag = gic_field.mag;
      o.field_dir = gic_field.dir;
      for (const auto& p : run_pipeline(case_path, o).artifacts) std::cout << p.string() << '\n';
      return 0;
    }
    const NetworkCase c = load_with_field(case_path, gic_field);
    const DcNetwork net = coupled_network(c);
    const GicSolution gic = solve_gic(net, blockers_from_ids(net, split_ids(gic_block)), 1.0);
    with_output(gic_out, [&](std::ostream& os) {
      os.precision(10);
      write_gic_csv(os, net, gic);
      if (gic_nodes) write_node_voltage_csv(os, net, gic);
    });
    return 0;
  }

  if (ac_cmd->parsed()) {
    const NetworkCase c = load_with_field(case_path, ac_field);
    const DcNetwork net = coupled_network(c);
    const CoupledSolution cs = solve_coupled(c, net, blockers_from_ids(net, split_ids(ac_block)), ac_args.options());
    write_ac_summary(std::cout, cs.ac);
    std::cout << "served_fraction," << served_fraction(c, cs.ac) << '\n';
    if (!ac_json.empty()) with_output(ac_json, [&](std::ostream& os) { os << ac_to_json(cs.ac).dump(2) << '\n'; });
    return cs.ac.status == AcStatus::Converged ? 0 : static_cast<int>(ExitCode::AcDivergence);
  }

  if (place_cmd->parsed()) {
    const PlacementSettings settings = place_args.settings();
    if (!place_out.empty()) {
      PipelineOptions o;
      o.out_dir = place_out;
      o.field_mag = place_field.mag;
      o.field_dir = place_field.dir;
      o.ac = place_ac.options();
      o.placement = settings;
      const PipelineResult r = run_pipeline(case_path, o);
      if (r.ac_failure) std::cerr << "note: AC stage without blockers failed: " << *r.ac_failure << '\n';
      for (const auto& p : r.artifacts) std::cout << p.string() << '\n';
      return 0;
    }
    const NetworkCase c = load_with_field(case_path, place_field);
    const PlacementProblem p = make_problem(c, settings, place_ac.options());
    const PlacementSolution s = solve_placement(p, settings.enumerate);
    BenchmarkReport rep;
    rep.suite = c.name;
    rep.machine = machine_descriptor();
    rep.rows.push_back(make_row(c, s));
    rep.rows.back().machine = rep.machine;
    rep.write_markdown(std::cout);
    std::cout << "placed: " << (s.placed.empty() ? std::string("(none)") : [&] {
      std::string out;
      for (const auto& id : s.placed) out += (out.empty() ? "" : ",") + id;
      return out;
    }()) << "\nobjective: " << s.objective << '\n';
    if (!place_json.empty())
      with_output(place_json, [&](std::ostream& os) { os << placement_to_json(s, p).dump(2) << '\n'; });
    if (!place_csv.empty()) with_output(place_csv, [&](std::ostream& os) { write_placement_csv(os, s); });
    return 0;
  }

  if (bench_cmd->parsed()) {
    const BenchmarkReport rep = benchmark(suite_path);
    with_output(bench_csv, [&](std::ostream& os) { rep.write_csv(os); });
    if (!bench_md.empty()) with_output(bench_md, [&](std::ostream& os) { rep.write_markdown(os); });
    return 0;
  }
  return static_cast<int>(ExitCode::Usage);
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.exit_code());
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::Usage);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::Internal);
  }
}
