#pragma once

// Network data model for GIC studies: the AC transmission case plus the
// quasi-dc attributes (dc resistances, substation grounding, transformer core
// configuration) and the geoelectric field.
//
// Units: AC quantities are per-unit on the case base (`base_mva`), branch angle
// limits are radians in memory and degrees on disk. DC quantities stay
// physical: resistances in ohms, field in V/km, currents in amps.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace gicopt {

using Id = std::string;

struct Bus {
  Id id;
  double base_kv = 0.0;
  double v_min = 0.9;
  double v_max = 1.1;
  bool is_slack = false;
  Id substation;

  bool operator==(const Bus&) const = default;
};

enum class BranchKind { Line, Transformer };

struct Branch {
  Id id;
  Id from_bus;
  Id to_bus;
  double g = 0.0;
  double b = 0.0;
  double b_sh = 0.0;
  double s_max = 0.0;
  double theta_min = 0.0;  // rad
  double theta_max = 0.0;  // rad
  bool status = true;
  double r_dc_per_phase = 0.0;  // ohm, lines only
  BranchKind kind = BranchKind::Line;
  Id transformer;  // set when kind == Transformer

  bool operator==(const Branch&) const = default;
};

enum class TransformerConfig { DeltaDelta, GwyeDelta, GwyeGwye, Auto, ThreeWinding, Other, Unknown };

std::string_view to_string(TransformerConfig c);
TransformerConfig parse_transformer_config(std::string_view s);

// Per-winding values. For auto-transformers `high` is the series winding and
// `low` the common winding.
template <typename T>
struct WindingValues {
  T high{};
  T low{};
  T tertiary{};

  bool operator==(const WindingValues&) const = default;
};

struct Transformer {
  Id id;
  TransformerConfig config = TransformerConfig::GwyeDelta;
  std::string config_name;  // raw spelling, kept for diagnostics on Unknown
  double alpha = 1.0;       // high/low turns ratio
  double beta = 0.0;        // high/tertiary turns ratio (three-winding only)
  WindingValues<double> winding_r;  // ohm per phase
  WindingValues<bool> grounded;
  double k_loss = 0.0;
  double s_base = 100.0;  // MVA
  Id high_bus;
  Id low_bus;
  Id tertiary_bus;  // empty unless three-winding

  bool operator==(const Transformer&) const = default;
};

// Default grounding flags implied by a core configuration.
WindingValues<bool> default_grounding(TransformerConfig c);

struct Substation {
  Id id;
  std::optional<double> latitude;
  std::optional<double> longitude;
  std::optional<double> grounding_r;  // ohm; nullopt = ungrounded

  bool grounded() const { return grounding_r.has_value(); }
  bool operator==(const Substation&) const = default;
};

struct Generator {
  Id id;
  Id bus;
  double p_min = 0.0;
  double p_max = 0.0;
  double q_min = 0.0;
  double q_max = 0.0;
  double cost_c0 = 0.0;
  double cost_c1 = 0.0;
  double cost_c2 = 0.0;
  bool status = true;
  // Power-flow setpoints; only used by the fixed-dispatch power flow.
  std::optional<double> p_set;
  std::optional<double> v_set;

  bool operator==(const Generator&) const = default;
};

struct Load {
  Id id;
  Id bus;
  double p_d = 0.0;
  double q_d = 0.0;
  double shed_cost = 1.0;
  bool sheddable = true;

  bool operator==(const Load&) const = default;
};

struct Shunt {
  Id id;
  Id bus;
  double g_s = 0.0;
  double b_s = 0.0;
  bool status = true;

  bool operator==(const Shunt&) const = default;
};

struct GmdField {
  double magnitude = 0.0;  // V/km
  double direction = 0.0;  // degrees clockwise from geographic north

  bool operator==(const GmdField&) const = default;
};

// A blocker site as declared in the case file: the neutral of `transformer`.
struct CandidateSpec {
  Id transformer;
  double cost = 1.0;

  bool operator==(const CandidateSpec&) const = default;
};

struct NetworkCase {
  std::string name;
  double base_mva = 100.0;
  bool allow_gen_without_gsu = false;
  std::vector<Substation> substations;
  std::vector<Bus> busses;
  std::vector<Branch> branches;
  std::vector<Transformer> transformers;
  std::vector<Generator> generators;
  std::vector<Load> loads;
  std::vector<Shunt> shunts;
  std::optional<GmdField> gmd;
  std::vector<CandidateSpec> candidates;

  const Bus* find_bus(std::string_view id) const;
  const Substation* find_substation(std::string_view id) const;
  const Transformer* find_transformer(std::string_view id) const;
  std::optional<std::size_t> bus_index(std::string_view id) const;

  bool operator==(const NetworkCase&) const = default;
};

// Generator busses at or above this nominal voltage need an explicit GSU.
inline constexpr double kTransmissionKv = 100.0;

enum class Severity { Error, Warning };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string code;
  std::string message;

  bool operator==(const Diagnostic&) const = default;
};

// All invariant violations of `c`. Pure; an empty list means the case is valid.
std::vector<Diagnostic> validate(const NetworkCase& c);

bool has_errors(const std::vector<Diagnostic>& diags);

// One `SEVERITY code message` line per diagnostic.
std::string format_diagnostics(const std::vector<Diagnostic>& diags);

// Parse without validating. Throws ParseError naming the record and field.
NetworkCase parse_case(const nlohmann::json& doc);

// Parse and validate; throws ValidationError carrying the formatted errors.
NetworkCase case_from_json(const nlohmann::json& doc);
NetworkCase load_case(const std::filesystem::path& path);

nlohmann::json to_json(const NetworkCase& c);

// Natural ordering of identifiers ("T2" < "T10").
bool natural_less(std::string_view a, std::string_view b);

}  // namespace gicopt
