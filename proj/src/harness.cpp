#include "gicopt/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "gicopt/error.hpp"
#include "gicopt/field_coupling.hpp"

namespace gicopt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << std::setprecision(12);
  return os;
}

void write_json_file(const fs::path& path, const json& doc) {
  auto os = open_out(path);
  os << doc.dump(2) << '\n';
}

std::string join_ids(const std::vector<Id>& ids, char sep) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += sep;
    out += id;
  }
  return out;
}

template <typename T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

PlacementProblem make_problem(const NetworkCase& c, const PlacementSettings& s, const OpfOptions& ac) {
  PlacementProblem p;
  p.network = c;
  p.objective = s.objective;
  p.budget = s.budget;
  p.count = s.count;
  p.count_sense = s.count_sense;
  p.shed_cap = s.shed_cap;
  p.served_frac = s.served_frac;
  p.gap = s.gap;
  p.time_limit_s = s.time_limit_s;
  p.gic_set = s.gic_set;
  p.ac = ac;
  return p;
}

PlacementSolution solve_placement(const PlacementProblem& p, bool enumerate) {
  return enumerate ? enumerate_optimal(p) : branch_and_bound(p);
}

void override_field(NetworkCase& c, std::optional<double> magnitude, std::optional<double> direction) {
  if (!magnitude && !direction) return;
  GmdField f = c.gmd.value_or(GmdField{});
  if (magnitude) f.magnitude = *magnitude;
  if (direction) f.direction = *direction;
  c.gmd = f;
}

BlockerConfig blockers_from_ids(const DcNetwork& net, const std::vector<Id>& ids) {
  std::vector<std::size_t> nodes;
  for (const auto& id : ids) {
    bool found = false;
    for (std::size_t node : net.candidates) {
      if (net.nodes[node].transformer == id) {
        nodes.push_back(node);
        found = true;
        break;
      }
    }
    if (!found) throw std::invalid_argument("not a blocker candidate: " + id);
  }
  return BlockerConfig::from_nodes(std::move(nodes));
}

std::string machine_descriptor() {
  std::string cpu = "unknown-cpu";
  std::ifstream info("/proc/cpuinfo");
  for (std::string line; std::getline(info, line);) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        cpu = line.substr(colon + 1);
        cpu.erase(0, cpu.find_first_not_of(' '));
      }
      break;
    }
  }
  return cpu + " x" + std::to_string(std::max(1u, std::thread::hardware_concurrency()));
}

std::string format_percent(double fraction) {
  std::ostringstream os;
  const double pct = 100.0 * fraction;
  const double tenths = std::round(pct * 10.0);
  if (std::fmod(tenths, 10.0) == 0.0) os << static_cast<long long>(tenths / 10.0) << '%';
  else os << std::fixed << std::setprecision(1) << tenths / 10.0 << '%';
  return os.str();
}

std::string format_cost(double cost) {
  std::ostringstream os;
  const double tenths = cost * 10.0;
  os << std::fixed << std::setprecision(std::abs(tenths - std::round(tenths)) < 1e-9 ? 1 : 3) << cost;
  return os.str();
}

BenchmarkRow make_row(const NetworkCase& c, const PlacementSolution& s) {
  BenchmarkRow r;
  r.case_name = c.name;
  r.busses = static_cast<int>(c.busses.size());
  r.placed = static_cast<int>(s.placed.size());
  r.candidates = s.candidates;
  r.load_met = s.load_met;
  r.cost = s.blocker_cost;
  r.seconds = s.stats.seconds;
  r.placed_ids = join_ids(s.placed, ';');
  if (s.optimality != Optimality::Proved) r.status = std::string(to_string(s.optimality));
  return r;
}

void write_gic_csv(std::ostream& os, const DcNetwork& net, const GicSolution& gic) {
  os << "transformer,config,i_tilde_a,i_eff_a,qloss_coeff_pu,qloss_pu\n";
  for (std::size_t t = 0; t < gic.transformers.size(); ++t) {
    const auto& g = gic.transformers[t];
    os << g.transformer << ',' << to_string(net.transformers[t].config) << ',' << g.i_tilde << ','
       << g.i_eff << ',' << g.qloss_coeff << ',' << g.q_loss << '\n';
  }
}

void write_node_voltage_csv(std::ostream& os, const DcNetwork& net, const GicSolution& gic) {
  os << "node,kind,voltage_v,earth_current_a\n";
  for (std::size_t i = 0; i < net.nodes.size(); ++i)
    os << net.nodes[i].id << ',' << to_string(net.nodes[i].kind) << ',' << gic.node_v[i] << ','
       << gic.neutral_i[i] << '\n';
}

json ac_to_json(const AcSolution& s) {
  json j;
  j["status"] = s.status == AcStatus::Converged ? "converged" : "limits-violated";
  j["objective"] = s.objective;
  j["max_residual"] = s.max_residual;
  j["max_bound_violation"] = s.max_bound_violation;
  j["iterations"] = s.iterations;
  j["shed_nodes"] = s.shed_nodes;
  json busses = json::array();
  for (std::size_t i = 0; i < s.bus_ids.size(); ++i)
    busses.push_back({{"id", s.bus_ids[i]}, {"v", s.v[i]}, {"theta", s.theta[i]},
                      {"q_pseudo", i < s.q_pseudo.size() ? s.q_pseudo[i] : 0.0}});
  j["busses"] = busses;
  json gens = json::array();
  for (std::size_t g = 0; g < s.gen_ids.size(); ++g)
    gens.push_back({{"id", s.gen_ids[g]}, {"p_g", s.p_g[g]}, {"q_g", s.q_g[g]}});
  j["generators"] = gens;
  json branches = json::array();
  for (std::size_t b = 0; b < s.branch_ids.size(); ++b) {
    const auto& f = s.flows[b];
    branches.push_back({{"id", s.branch_ids[b]},
                        {"p_from", f.p_from},
                        {"q_from", f.q_from},
                        {"p_to", f.p_to},
                        {"q_to", f.q_to}});
  }
  j["branches"] = branches;
  json loads = json::array();
  for (std::size_t l = 0; l < s.load_ids.size(); ++l) loads.push_back({{"id", s.load_ids[l]}, {"z", s.z_d[l]}});
  j["loads"] = loads;
  return j;
}

void write_ac_summary(std::ostream& os, const AcSolution& s) {
  os << std::fixed << std::setprecision(6);
  os << "bus,v_pu,theta_rad,q_pseudo_pu\n";
  for (std::size_t i = 0; i < s.bus_ids.size(); ++i)
    os << s.bus_ids[i] << ',' << s.v[i] << ',' << s.theta[i] << ','
       << (i < s.q_pseudo.size() ? s.q_pseudo[i] : 0.0) << '\n';
  os << "generator,p_pu,q_pu\n";
  for (std::size_t g = 0; g < s.gen_ids.size(); ++g) os << s.gen_ids[g] << ',' << s.p_g[g] << ',' << s.q_g[g] << '\n';
  os << "load,served\n";
  for (std::size_t l = 0; l < s.load_ids.size(); ++l) os << s.load_ids[l] << ',' << s.z_d[l] << '\n';
  os << std::scientific << std::setprecision(3) << "objective," << s.objective << "\nmax_residual," << s.max_residual
     << "\nmax_bound_violation," << s.max_bound_violation << '\n';
  os << std::defaultfloat;
}

json placement_to_json(const PlacementSolution& s, const PlacementProblem& p) {
  json j;
  j["case"] = p.network.name;
  j["objective_kind"] = std::string(to_string(p.objective));
  j["placed"] = s.placed;
  j["candidates"] = s.candidates;
  j["objective"] = s.objective;
  j["load_met"] = s.load_met;
  j["blocker_cost"] = s.blocker_cost;
  j["shed_cost"] = s.shed_cost;
  j["gic_sq"] = s.gic_sq;
  j["optimality"] = std::string(to_string(s.optimality));
  j["gap"] = s.gap;
  j["constraints"] = {{"budget", opt_json(p.budget)},
                      {"count", opt_json(p.count)},
                      {"count_sense", p.count_sense == CountSense::Equal ? "equal" : "at-most"},
                      {"shed_cap", opt_json(p.shed_cap)},
                      {"served_frac", opt_json(p.served_frac)}};
  json xf = json::array();
  for (const auto& t : s.transformers)
    xf.push_back({{"id", t.transformer}, {"i_eff_before", t.i_eff_before}, {"i_eff_after", t.i_eff_after}});
  j["transformers"] = xf;
  json inc = json::array();
  for (const auto& e : s.stats.incumbents)
    inc.push_back({{"seconds", e.seconds}, {"objective", e.objective}, {"node", e.node}});
  j["stats"] = {{"nodes", s.stats.nodes},
                {"evaluations", s.stats.evaluations},
                {"seconds", s.stats.seconds},
                {"incumbents", inc}};
  return j;
}

void write_placement_csv(std::ostream& os, const PlacementSolution& s) {
  os << "transformer,blocked,i_eff_before_a,i_eff_after_a\n";
  for (const auto& t : s.transformers) {
    const bool blocked = std::find(s.placed.begin(), s.placed.end(), t.transformer) != s.placed.end();
    os << t.transformer << ',' << (blocked ? 1 : 0) << ',' << t.i_eff_before << ',' << t.i_eff_after << '\n';
  }
}

PipelineResult run_pipeline(const fs::path& case_path, const PipelineOptions& o) {
  PipelineResult res;
  NetworkCase c = load_case(case_path);
  override_field(c, o.field_mag, o.field_dir);

  std::error_code ec;
  fs::create_directories(o.out_dir, ec);
  if (ec) throw IoError("cannot create " + o.out_dir.string() + ": " + ec.message());
  auto emit = [&](const std::string& name) {
    res.artifacts.push_back(o.out_dir / name);
    return open_out(res.artifacts.back());
  };

  DcNetwork net = build_dc_network(c);
  if (c.gmd) net = apply_field(std::move(net), *c.gmd);
  {
    auto os = emit("dc_nodes.csv");
    write_node_csv(os, net);
  }
  {
    auto os = emit("dc_edges.csv");
    write_edge_csv(os, net);
  }
  {
    auto os = emit("dc_network.dot");
    write_dot(os, net);
  }
  if (o.dump_dc_only) return res;

  const BlockerConfig cfg = blockers_from_ids(net, o.blockers);
  const GicSolution gic = solve_gic(net, cfg, 1.0);
  {
    auto os = emit("gic.csv");
    write_gic_csv(os, net, gic);
  }
  {
    auto os = emit("dc_node_voltages.csv");
    write_node_voltage_csv(os, net, gic);
  }
  {
    auto os = emit("pseudo_loads.csv");
    os << "source,bus,q_per_v_pu\n";
    for (const auto& pl : qloss_pseudo_loads(net, gic)) os << pl.source << ',' << pl.bus << ',' << pl.q_per_v << '\n';
  }

  try {
    const CoupledSolution cs = solve_coupled(c, net, cfg, o.ac);
    write_json_file(o.out_dir / "ac.json", ac_to_json(cs.ac));
    res.artifacts.push_back(o.out_dir / "ac.json");
  } catch (const Error& e) {
    if (!o.placement) throw;
    res.ac_failure = e.what();
    auto os = emit("ac_failure.txt");
    os << e.what() << '\n';
  }

  if (o.placement) {
    const PlacementProblem p = make_problem(c, *o.placement, o.ac);
    PlacementSolution s = solve_placement(p, o.placement->enumerate);
    write_json_file(o.out_dir / "placement.json", placement_to_json(s, p));
    res.artifacts.push_back(o.out_dir / "placement.json");
    {
      auto os = emit("placement.csv");
      write_placement_csv(os, s);
    }
    BenchmarkRow row = make_row(c, s);
    row.machine = machine_descriptor();
    BenchmarkReport rep;
    rep.suite = c.name;
    rep.machine = row.machine;
    rep.rows.push_back(row);
    {
      auto os = emit("report.csv");
      rep.write_csv(os);
    }
    {
      auto os = emit("report.md");
      rep.write_markdown(os);
    }
    res.row = row;
    res.placement = std::move(s);
  }
  return res;
}

namespace {

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += (ch == '\n' ? ' ' : ch);
  }
  return out + '"';
}

}  // namespace

void BenchmarkReport::write_csv(std::ostream& os) const {
  os << "case,busses,blockers,load_met,cost,runtime_s,machine,status,placed\n";
  for (const auto& r : rows) {
    std::ostringstream secs;
    secs << std::fixed << std::setprecision(3) << r.seconds;
    os << r.case_name << ',' << r.busses << ',' << r.placed << '/' << r.candidates << ','
       << format_percent(r.load_met) << ',' << format_cost(r.cost) << ',' << secs.str() << ','
       << csv_quote(r.machine) << ',' << csv_quote(r.status) << ',' << r.placed_ids << '\n';
  }
}

void BenchmarkReport::write_markdown(std::ostream& os) const {
  os << "| Case | Busses | Blockers | Load met | Cost | Runtime (s) | Status |\n";
  os << "|---|---:|---:|---:|---:|---:|---|\n";
  for (const auto& r : rows) {
    std::ostringstream secs;
    secs << std::fixed << std::setprecision(3) << r.seconds;
    os << "| " << r.case_name << " | " << r.busses << " | " << r.placed << '/' << r.candidates << " | "
       << format_percent(r.load_met) << " | " << format_cost(r.cost) << " | " << secs.str() << " | " << r.status
       << " |\n";
  }
  os << "\nMachine: " << machine << '\n';
}

BenchmarkReport benchmark(const fs::path& suite_path) {
  std::ifstream in(suite_path);
  if (!in) throw IoError("cannot read " + suite_path.string());
  json suite;
  try {
    suite = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(suite_path.string() + ": " + e.what());
  }

  BenchmarkReport rep;
  rep.suite = suite.value("name", suite_path.stem().string());
  rep.machine = machine_descriptor();
  const fs::path base = suite_path.parent_path();
  for (const auto& entry : suite.at("cases")) {
    if (entry.value("skip", false)) continue;
    const fs::path path = base / entry.at("case").get<std::string>();
    BenchmarkRow row;
    row.case_name = path.stem().string();
    row.machine = rep.machine;
    const auto start = std::chrono::steady_clock::now();
    try {
      const NetworkCase c = load_case(path);
      row.case_name = c.name;
      row.busses = static_cast<int>(c.busses.size());
      row.candidates = static_cast<int>(c.candidates.size());
      PlacementSettings s;
      if (entry.contains("objective")) {
        auto obj = parse_placement_objective(entry["objective"].get<std::string>());
        if (!obj) throw Error("harness", "unknown objective in suite entry " + path.string(), ExitCode::Usage);
        s.objective = *obj;
      }
      if (entry.contains("budget")) s.budget = entry["budget"].get<double>();
      if (entry.contains("count")) s.count = entry["count"].get<int>();
      if (entry.value("count_at_most", false)) s.count_sense = CountSense::AtMost;
      if (entry.contains("shed_cap")) s.shed_cap = entry["shed_cap"].get<double>();
      if (entry.contains("served_frac")) {
        if (entry["served_frac"].is_null()) s.served_frac.reset();
        else s.served_frac = entry["served_frac"].get<double>();
      }
      s.gap = entry.value("gap", 0.0);
      if (entry.contains("time_limit")) s.time_limit_s = entry["time_limit"].get<double>();
      s.enumerate = entry.value("method", std::string("branch-and-bound")) == "enumerate";
      const PlacementSolution sol = solve_placement(make_problem(c, s), s.enumerate);
      const std::string machine = row.machine;
      row = make_row(c, sol);
      row.machine = machine;
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace gicopt
