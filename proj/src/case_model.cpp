#include "gicopt/case_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "gicopt/error.hpp"

namespace gicopt {

using nlohmann::json;

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

struct ConfigName {
  TransformerConfig config;
  std::string_view name;
};

constexpr ConfigName kConfigNames[] = {
    {TransformerConfig::DeltaDelta, "delta-delta"},
    {TransformerConfig::GwyeDelta, "gwye-delta"},
    {TransformerConfig::GwyeGwye, "gwye-gwye"},
    {TransformerConfig::Auto, "auto"},
    {TransformerConfig::ThreeWinding, "three-winding"},
    {TransformerConfig::Other, "other"},
};

// Field access with error messages that name the record and the field.
class Record {
 public:
  Record(const json& j, std::string what) : j_(j), what_(std::move(what)) {
    if (!j_.is_object()) throw ParseError(what_ + ": expected an object");
  }

  const std::string& what() const { return what_; }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  double number(const char* key) const {
    if (!j_.contains(key)) throw ParseError(what_ + ": missing field '" + key + "'");
    const json& v = j_.at(key);
    if (!v.is_number()) throw ParseError(what_ + ": field '" + key + "' must be a number");
    return v.get<double>();
  }

  double number(const char* key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  std::optional<double> optional_number(const char* key) const {
    if (!has(key)) return std::nullopt;
    return number(key);
  }

  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ParseError(what_ + ": field '" + key + "' must be a boolean");
    return v.get<bool>();
  }

  Id id(const char* key) const {
    if (!j_.contains(key)) throw ParseError(what_ + ": missing field '" + key + "'");
    return id_value(j_.at(key), key);
  }

  Id id(const char* key, const Id& fallback) const { return has(key) ? id(key) : fallback; }

  std::string text(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ParseError(what_ + ": field '" + key + "' must be a string");
    return v.get<std::string>();
  }

  const json& at(const char* key) const { return j_.at(key); }

 private:
  Id id_value(const json& v, const char* key) const {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw ParseError(what_ + ": field '" + key + "' must be a string or integer identifier");
  }

  const json& j_;
  std::string what_;
};

std::string record_name(const char* kind, std::size_t index, const json& j) {
  std::ostringstream os;
  os << kind;
  if (j.is_object() && j.contains("id")) {
    const json& id = j.at("id");
    if (id.is_string()) {
      os << " '" << id.get<std::string>() << "'";
      return os.str();
    }
    if (id.is_number_integer()) {
      os << " '" << id.get<long long>() << "'";
      return os.str();
    }
  }
  os << " #" << index;
  return os.str();
}

const json& section(const json& parent, const char* key, const char* where) {
  static const json kEmpty = json::array();
  if (!parent.contains(key) || parent.at(key).is_null()) return kEmpty;
  const json& s = parent.at(key);
  if (!s.is_array()) throw ParseError(std::string(where) + ": '" + key + "' must be an array");
  return s;
}

WindingValues<double> parse_winding_r(const Record& r) {
  WindingValues<double> w;
  if (!r.has("winding_r")) return w;
  Record wr(r.at("winding_r"), r.what() + ".winding_r");
  w.high = wr.number("high", 0.0);
  w.low = wr.number("low", 0.0);
  w.tertiary = wr.number("tertiary", 0.0);
  return w;
}

WindingValues<bool> parse_grounded(const Record& r, TransformerConfig config) {
  WindingValues<bool> g = default_grounding(config);
  if (!r.has("grounded")) return g;
  Record gr(r.at("grounded"), r.what() + ".grounded");
  g.high = gr.boolean("high", g.high);
  g.low = gr.boolean("low", g.low);
  g.tertiary = gr.boolean("tertiary", g.tertiary);
  return g;
}

template <typename T>
const T* find_by_id(const std::vector<T>& items, std::string_view id) {
  auto it = std::find_if(items.begin(), items.end(), [&](const T& t) { return t.id == id; });
  return it == items.end() ? nullptr : &*it;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string_view to_string(TransformerConfig c) {
  for (const auto& cn : kConfigNames)
    if (cn.config == c) return cn.name;
  return "unknown";
}

TransformerConfig parse_transformer_config(std::string_view s) {
  for (const auto& cn : kConfigNames)
    if (cn.name == s) return cn.config;
  return TransformerConfig::Unknown;
}

WindingValues<bool> default_grounding(TransformerConfig c) {
  switch (c) {
    case TransformerConfig::GwyeGwye: return {true, true, false};
    case TransformerConfig::GwyeDelta: return {true, false, false};
    case TransformerConfig::Auto: return {false, true, false};
    case TransformerConfig::ThreeWinding: return {true, true, true};
    default: return {false, false, false};
  }
}

const Bus* NetworkCase::find_bus(std::string_view id) const { return find_by_id(busses, id); }

const Substation* NetworkCase::find_substation(std::string_view id) const {
  return find_by_id(substations, id);
}

const Transformer* NetworkCase::find_transformer(std::string_view id) const {
  return find_by_id(transformers, id);
}

std::optional<std::size_t> NetworkCase::bus_index(std::string_view id) const {
  for (std::size_t i = 0; i < busses.size(); ++i)
    if (busses[i].id == id) return i;
  return std::nullopt;
}

bool natural_less(std::string_view a, std::string_view b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const bool da = std::isdigit(static_cast<unsigned char>(a[i]));
    const bool db = std::isdigit(static_cast<unsigned char>(b[j]));
    if (da && db) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      std::string_view na = a.substr(i, ie - i), nb = b.substr(j, je - j);
      while (na.size() > 1 && na.front() == '0') na.remove_prefix(1);
      while (nb.size() > 1 && nb.front() == '0') nb.remove_prefix(1);
      if (na.size() != nb.size()) return na.size() < nb.size();
      if (na != nb) return na < nb;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  if ((a.size() - i) != (b.size() - j)) return (a.size() - i) < (b.size() - j);
  return a < b;
}

NetworkCase parse_case(const json& doc) {
  if (!doc.is_object()) throw ParseError("case: document must be a JSON object");
  NetworkCase c;
  c.name = doc.value("name", std::string{});
  if (!doc.contains("network") || !doc.at("network").is_object())
    throw ParseError("case: missing 'network' section");
  const json& net = doc.at("network");
  Record netr(net, "network");
  c.base_mva = netr.number("base_mva", 100.0);
  c.allow_gen_without_gsu = netr.boolean("allow_gen_without_gsu", false);

  const json& subs = section(net, "substations", "network");
  for (std::size_t i = 0; i < subs.size(); ++i) {
    Record r(subs[i], record_name("substation", i, subs[i]));
    Substation s;
    s.id = r.id("id");
    s.latitude = r.optional_number("latitude");
    s.longitude = r.optional_number("longitude");
    s.grounding_r = r.optional_number("grounding_r");
    c.substations.push_back(std::move(s));
  }

  const json& busses = section(net, "busses", "network");
  for (std::size_t i = 0; i < busses.size(); ++i) {
    Record r(busses[i], record_name("bus", i, busses[i]));
    Bus b;
    b.id = r.id("id");
    b.base_kv = r.number("base_kv");
    b.v_min = r.number("v_min", 0.9);
    b.v_max = r.number("v_max", 1.1);
    b.is_slack = r.boolean("is_slack", false);
    b.substation = r.id("substation");
    c.busses.push_back(std::move(b));
  }

  const json& branches = section(net, "branches", "network");
  for (std::size_t i = 0; i < branches.size(); ++i) {
    Record r(branches[i], record_name("branch", i, branches[i]));
    Branch br;
    br.id = r.id("id");
    br.from_bus = r.id("from_bus");
    br.to_bus = r.id("to_bus");
    br.g = r.number("g");
    br.b = r.number("b");
    br.b_sh = r.number("b_sh", 0.0);
    br.s_max = r.number("s_max");
    br.theta_min = r.number("theta_min", -60.0) * kDegToRad;
    br.theta_max = r.number("theta_max", 60.0) * kDegToRad;
    br.status = r.boolean("status", true);
    br.r_dc_per_phase = r.number("r_dc_per_phase", 0.0);
    const std::string kind = r.text("kind", "line");
    if (kind == "line") {
      br.kind = BranchKind::Line;
    } else if (kind == "transformer") {
      br.kind = BranchKind::Transformer;
      br.transformer = r.id("transformer");
    } else {
      throw ParseError(r.what() + ": field 'kind' must be 'line' or 'transformer'");
    }
    c.branches.push_back(std::move(br));
  }

  const json& xfmrs = section(net, "transformers", "network");
  for (std::size_t i = 0; i < xfmrs.size(); ++i) {
    Record r(xfmrs[i], record_name("transformer", i, xfmrs[i]));
    Transformer t;
    t.id = r.id("id");
    t.config_name = r.text("config", "");
    if (t.config_name.empty()) throw ParseError(r.what() + ": missing field 'config'");
    t.config = parse_transformer_config(t.config_name);
    t.high_bus = r.id("high_bus");
    t.low_bus = r.id("low_bus");
    t.tertiary_bus = r.id("tertiary_bus", Id{});
    t.winding_r = parse_winding_r(r);
    t.grounded = parse_grounded(r, t.config);
    t.k_loss = r.number("k_loss", 0.0);
    t.s_base = r.number("s_base", c.base_mva);
    if (r.has("alpha")) {
      t.alpha = r.number("alpha");
    } else {
      const Bus* hb = c.find_bus(t.high_bus);
      const Bus* lb = c.find_bus(t.low_bus);
      t.alpha = (hb && lb && lb->base_kv > 0) ? hb->base_kv / lb->base_kv : 0.0;
    }
    if (r.has("beta")) {
      t.beta = r.number("beta");
    } else if (!t.tertiary_bus.empty()) {
      const Bus* hb = c.find_bus(t.high_bus);
      const Bus* tb = c.find_bus(t.tertiary_bus);
      t.beta = (hb && tb && tb->base_kv > 0) ? hb->base_kv / tb->base_kv : 0.0;
    }
    c.transformers.push_back(std::move(t));
  }

  const json& gens = section(net, "generators", "network");
  for (std::size_t i = 0; i < gens.size(); ++i) {
    Record r(gens[i], record_name("generator", i, gens[i]));
    Generator g;
    g.id = r.id("id");
    g.bus = r.id("bus");
    g.p_min = r.number("p_min");
    g.p_max = r.number("p_max");
    g.q_min = r.number("q_min");
    g.q_max = r.number("q_max");
    g.cost_c0 = r.number("cost_c0", 0.0);
    g.cost_c1 = r.number("cost_c1", 0.0);
    g.cost_c2 = r.number("cost_c2", 0.0);
    g.status = r.boolean("status", true);
    g.p_set = r.optional_number("p_set");
    g.v_set = r.optional_number("v_set");
    c.generators.push_back(std::move(g));
  }

  const json& loads = section(net, "loads", "network");
  for (std::size_t i = 0; i < loads.size(); ++i) {
    Record r(loads[i], record_name("load", i, loads[i]));
    Load l;
    l.id = r.id("id");
    l.bus = r.id("bus");
    l.p_d = r.number("p_d");
    l.q_d = r.number("q_d", 0.0);
    l.shed_cost = r.number("shed_cost", 1.0);
    l.sheddable = r.boolean("sheddable", true);
    c.loads.push_back(std::move(l));
  }

  const json& shunts = section(net, "shunts", "network");
  for (std::size_t i = 0; i < shunts.size(); ++i) {
    Record r(shunts[i], record_name("shunt", i, shunts[i]));
    Shunt s;
    s.id = r.id("id");
    s.bus = r.id("bus");
    s.g_s = r.number("g_s", 0.0);
    s.b_s = r.number("b_s", 0.0);
    s.status = r.boolean("status", true);
    c.shunts.push_back(std::move(s));
  }

  if (doc.contains("gmd") && !doc.at("gmd").is_null()) {
    Record r(doc.at("gmd"), "gmd");
    c.gmd = GmdField{r.number("magnitude"), r.number("direction")};
  }

  const json& cands = section(doc, "candidates", "case");
  for (std::size_t i = 0; i < cands.size(); ++i) {
    Record r(cands[i], "candidate #" + std::to_string(i));
    c.candidates.push_back(CandidateSpec{r.id("transformer"), r.number("cost", 1.0)});
  }
  return c;
}

std::vector<Diagnostic> validate(const NetworkCase& c) {
  std::vector<Diagnostic> out;
  auto error = [&](std::string code, std::string msg) {
    out.push_back({Severity::Error, std::move(code), std::move(msg)});
  };
  auto warning = [&](std::string code, std::string msg) {
    out.push_back({Severity::Warning, std::move(code), std::move(msg)});
  };

  if (c.busses.empty()) error("E_NO_BUSSES", "no busses");
  if (!(c.base_mva > 0)) error("E_BASE_MVA", "base_mva must be positive");

  auto check_unique = [&](const auto& items, const char* kind) {
    std::set<Id> seen;
    for (const auto& item : items)
      if (!seen.insert(item.id).second)
        error("E_DUPLICATE_ID", std::string(kind) + " '" + item.id + "': duplicate id");
  };
  check_unique(c.substations, "substation");
  check_unique(c.busses, "bus");
  check_unique(c.branches, "branch");
  check_unique(c.transformers, "transformer");
  check_unique(c.generators, "generator");
  check_unique(c.loads, "load");
  check_unique(c.shunts, "shunt");

  for (const auto& s : c.substations) {
    const std::string who = "substation '" + s.id + "'";
    if (s.latitude && std::abs(*s.latitude) > 90.0)
      error("E_LATITUDE", who + ": latitude out of range");
    if (s.longitude && std::abs(*s.longitude) > 180.0)
      error("E_LONGITUDE", who + ": longitude out of range");
    if (s.grounding_r && !(*s.grounding_r > 0.0))
      error("E_GROUNDING_R", who + ": grounding_r must be positive when grounded");
  }

  bool any_slack = false;
  for (const auto& b : c.busses) {
    const std::string who = "bus '" + b.id + "'";
    if (!(b.base_kv > 0.0)) error("E_BASE_KV", who + ": base_kv must be positive");
    if (!(b.v_min > 0.0 && b.v_min <= b.v_max))
      error("E_VOLTAGE_BOUNDS", who + ": require 0 < v_min <= v_max");
    if (!c.find_substation(b.substation))
      error("E_DANGLING_REF", who + ": unknown substation '" + b.substation + "'");
    any_slack = any_slack || b.is_slack;
  }
  if (!c.busses.empty() && !any_slack) error("E_NO_SLACK", "no slack bus");

  for (const auto& br : c.branches) {
    const std::string who = "branch '" + br.id + "'";
    if (!c.find_bus(br.from_bus))
      error("E_DANGLING_REF", who + ": unknown from_bus '" + br.from_bus + "'");
    if (!c.find_bus(br.to_bus))
      error("E_DANGLING_REF", who + ": unknown to_bus '" + br.to_bus + "'");
    if (br.from_bus == br.to_bus) error("E_SELF_LOOP", who + ": from_bus equals to_bus");
    if (!(br.s_max > 0.0)) error("E_RATING", who + ": s_max must be positive");
    if (!(br.theta_min <= 0.0 && 0.0 <= br.theta_max))
      error("E_ANGLE_BOUNDS", who + ": require theta_min <= 0 <= theta_max");
    if (br.kind == BranchKind::Line && br.status && !(br.r_dc_per_phase > 0.0))
      error("E_DC_RESISTANCE", who + ": r_dc_per_phase must be positive for in-service lines");
    if (br.kind == BranchKind::Transformer && !c.find_transformer(br.transformer))
      error("E_DANGLING_REF", who + ": unknown transformer '" + br.transformer + "'");
  }

  for (const auto& t : c.transformers) {
    const std::string who = "transformer '" + t.id + "'";
    if (t.config == TransformerConfig::Unknown)
      error("E_XFMR_CONFIG", who + ": unknown config '" + t.config_name + "'");
    if (!(t.alpha > 0.0)) error("E_TURNS_RATIO", who + ": turns ratio alpha must be positive");
    if (t.config == TransformerConfig::ThreeWinding) {
      if (!(t.beta > 0.0)) error("E_TURNS_RATIO", who + ": turns ratio beta must be positive");
      if (!c.find_bus(t.tertiary_bus))
        error("E_DANGLING_REF", who + ": unknown tertiary_bus '" + t.tertiary_bus + "'");
    }
    if (!(t.k_loss >= 0.0)) error("E_KLOSS", who + ": k_loss must be non-negative");
    if (!(t.s_base > 0.0)) error("E_SBASE", who + ": s_base must be positive");
    const Bus* hb = c.find_bus(t.high_bus);
    if (!hb) error("E_DANGLING_REF", who + ": unknown high_bus '" + t.high_bus + "'");
    if (!c.find_bus(t.low_bus))
      error("E_DANGLING_REF", who + ": unknown low_bus '" + t.low_bus + "'");

    const auto allowed = default_grounding(t.config);
    if ((t.grounded.high && !allowed.high) || (t.grounded.low && !allowed.low) ||
        (t.grounded.tertiary && !allowed.tertiary))
      error("E_GROUNDING_CONFIG", who + ": grounded winding not allowed by config '" +
                                      std::string(to_string(t.config)) + "'");
    const bool auto_xf = t.config == TransformerConfig::Auto;
    if (auto_xf && !(t.winding_r.high > 0.0))
      error("E_WINDING_R", who + ": series winding resistance must be positive");
    if (t.grounded.high && !auto_xf && !(t.winding_r.high > 0.0))
      error("E_WINDING_R", who + ": high winding resistance must be positive");
    if (t.grounded.low && !(t.winding_r.low > 0.0))
      error("E_WINDING_R", who + ": low winding resistance must be positive");
    if (t.grounded.tertiary && !(t.winding_r.tertiary > 0.0))
      error("E_WINDING_R", who + ": tertiary winding resistance must be positive");
    const bool has_neutral = t.grounded.high || t.grounded.low || t.grounded.tertiary;
    if (has_neutral && hb) {
      const Substation* s = c.find_substation(hb->substation);
      if (s && !s->grounded())
        error("E_UNGROUNDED_NEUTRAL",
              who + ": grounded neutral at ungrounded substation '" + s->id + "'");
    }
  }

  for (const auto& g : c.generators) {
    const std::string who = "generator '" + g.id + "'";
    const Bus* b = c.find_bus(g.bus);
    if (!b) error("E_DANGLING_REF", who + ": unknown bus '" + g.bus + "'");
    if (!(g.p_min <= g.p_max)) error("E_GEN_BOUNDS", who + ": p_min > p_max");
    if (!(g.q_min <= g.q_max)) error("E_GEN_BOUNDS", who + ": q_min > q_max");
    if (b && g.status && b->base_kv >= kTransmissionKv && !c.allow_gen_without_gsu) {
      const bool behind_gsu =
          std::any_of(c.transformers.begin(), c.transformers.end(), [&](const Transformer& t) {
            return t.low_bus == g.bus || t.tertiary_bus == g.bus;
          });
      if (!behind_gsu)
        error("E_GEN_NO_GSU",
              who + ": attached to transmission bus '" + g.bus + "' without a step-up transformer");
    }
  }

  for (const auto& l : c.loads) {
    const std::string who = "load '" + l.id + "'";
    if (!c.find_bus(l.bus)) error("E_DANGLING_REF", who + ": unknown bus '" + l.bus + "'");
    if (!(l.shed_cost >= 0.0)) error("E_SHED_COST", who + ": shed_cost must be non-negative");
  }
  for (const auto& s : c.shunts)
    if (!c.find_bus(s.bus))
      error("E_DANGLING_REF", "shunt '" + s.id + "': unknown bus '" + s.bus + "'");

  if (!c.gmd) {
    error("E_NO_GMD", "missing gmd section");
  } else {
    if (!(c.gmd->magnitude >= 0.0)) error("E_GMD_FIELD", "gmd: magnitude must be non-negative");
    if (!(c.gmd->direction >= 0.0 && c.gmd->direction < 360.0))
      error("E_GMD_FIELD", "gmd: direction must lie in [0, 360)");
  }

  std::set<Id> cand_seen;
  for (const auto& cs : c.candidates) {
    const std::string who = "candidate '" + cs.transformer + "'";
    if (!cand_seen.insert(cs.transformer).second)
      error("E_DUPLICATE_ID", who + ": duplicate candidate");
    if (!(cs.cost > 0.0)) error("E_CANDIDATE_COST", who + ": cost must be positive");
    const Transformer* t = c.find_transformer(cs.transformer);
    if (!t) {
      error("E_DANGLING_REF", who + ": unknown transformer");
      continue;
    }
    if (!(t->grounded.high || t->grounded.low || t->grounded.tertiary))
      error("E_CANDIDATE_NEUTRAL", who + ": transformer has no grounded neutral");
  }

  // Ground return exists when some grounded neutral sits in a grounded substation.
  bool ground_path = false;
  for (const auto& t : c.transformers) {
    if (!(t.grounded.high || t.grounded.low || t.grounded.tertiary)) continue;
    if (t.config == TransformerConfig::DeltaDelta || t.config == TransformerConfig::Other ||
        t.config == TransformerConfig::Unknown)
      continue;
    const Bus* hb = c.find_bus(t.high_bus);
    const Substation* s = hb ? c.find_substation(hb->substation) : nullptr;
    if (s && s->grounded()) ground_path = true;
  }
  if (!c.busses.empty() && !ground_path) warning("W_NO_GROUND", "no ground return path");

  return out;
}

bool has_errors(const std::vector<Diagnostic>& diags) {
  return std::any_of(diags.begin(), diags.end(),
                     [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

std::string format_diagnostics(const std::vector<Diagnostic>& diags) {
  std::ostringstream os;
  for (const auto& d : diags)
    os << (d.severity == Severity::Error ? "ERROR" : "WARNING") << ' ' << d.code << ' '
       << d.message << '\n';
  return os.str();
}

NetworkCase case_from_json(const json& doc) {
  NetworkCase c = parse_case(doc);
  auto diags = validate(c);
  if (has_errors(diags)) {
    std::vector<Diagnostic> errors;
    std::copy_if(diags.begin(), diags.end(), std::back_inserter(errors),
                 [](const Diagnostic& d) { return d.severity == Severity::Error; });
    std::string msg = format_diagnostics(errors);
    if (!msg.empty() && msg.back() == '\n') msg.pop_back();
    throw ValidationError(msg);
  }
  return c;
}

NetworkCase load_case(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open case file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  NetworkCase c = case_from_json(doc);
  if (c.name.empty()) c.name = path.stem().string();
  return c;
}

json to_json(const NetworkCase& c) {
  json net;
  net["base_mva"] = c.base_mva;
  net["allow_gen_without_gsu"] = c.allow_gen_without_gsu;

  json subs = json::array();
  for (const auto& s : c.substations)
    subs.push_back({{"id", s.id},
                    {"latitude", optional_json(s.latitude)},
                    {"longitude", optional_json(s.longitude)},
                    {"grounding_r", optional_json(s.grounding_r)}});
  net["substations"] = std::move(subs);

  json busses = json::array();
  for (const auto& b : c.busses)
    busses.push_back({{"id", b.id},
                      {"base_kv", b.base_kv},
                      {"v_min", b.v_min},
                      {"v_max", b.v_max},
                      {"is_slack", b.is_slack},
                      {"substation", b.substation}});
  net["busses"] = std::move(busses);

  json branches = json::array();
  for (const auto& br : c.branches) {
    json j = {{"id", br.id},
              {"from_bus", br.from_bus},
              {"to_bus", br.to_bus},
              {"g", br.g},
              {"b", br.b},
              {"b_sh", br.b_sh},
              {"s_max", br.s_max},
              {"theta_min", br.theta_min * kRadToDeg},
              {"theta_max", br.theta_max * kRadToDeg},
              {"status", br.status},
              {"r_dc_per_phase", br.r_dc_per_phase},
              {"kind", br.kind == BranchKind::Line ? "line" : "transformer"}};
    if (br.kind == BranchKind::Transformer) j["transformer"] = br.transformer;
    branches.push_back(std::move(j));
  }
  net["branches"] = std::move(branches);

  json xfmrs = json::array();
  for (const auto& t : c.transformers) {
    json j = {{"id", t.id},
              {"config", t.config == TransformerConfig::Unknown ? t.config_name
                                                                : std::string(to_string(t.config))},
              {"alpha", t.alpha},
              {"beta", t.beta},
              {"winding_r",
               {{"high", t.winding_r.high}, {"low", t.winding_r.low}, {"tertiary", t.winding_r.tertiary}}},
              {"grounded",
               {{"high", t.grounded.high}, {"low", t.grounded.low}, {"tertiary", t.grounded.tertiary}}},
              {"k_loss", t.k_loss},
              {"s_base", t.s_base},
              {"high_bus", t.high_bus},
              {"low_bus", t.low_bus}};
    if (!t.tertiary_bus.empty()) j["tertiary_bus"] = t.tertiary_bus;
    xfmrs.push_back(std::move(j));
  }
  net["transformers"] = std::move(xfmrs);

  json gens = json::array();
  for (const auto& g : c.generators) {
    json j = {{"id", g.id},         {"bus", g.bus},         {"p_min", g.p_min},
              {"p_max", g.p_max},   {"q_min", g.q_min},     {"q_max", g.q_max},
              {"cost_c0", g.cost_c0}, {"cost_c1", g.cost_c1}, {"cost_c2", g.cost_c2},
              {"status", g.status}};
    if (g.p_set) j["p_set"] = *g.p_set;
    if (g.v_set) j["v_set"] = *g.v_set;
    gens.push_back(std::move(j));
  }
  net["generators"] = std::move(gens);

  json loads = json::array();
  for (const auto& l : c.loads)
    loads.push_back({{"id", l.id},
                     {"bus", l.bus},
                     {"p_d", l.p_d},
                     {"q_d", l.q_d},
                     {"shed_cost", l.shed_cost},
                     {"sheddable", l.sheddable}});
  net["loads"] = std::move(loads);

  json shunts = json::array();
  for (const auto& s : c.shunts)
    shunts.push_back(
        {{"id", s.id}, {"bus", s.bus}, {"g_s", s.g_s}, {"b_s", s.b_s}, {"status", s.status}});
  net["shunts"] = std::move(shunts);

  json doc;
  doc["name"] = c.name;
  doc["network"] = std::move(net);
  if (c.gmd) doc["gmd"] = {{"magnitude", c.gmd->magnitude}, {"direction", c.gmd->direction}};
  json cands = json::array();
  for (const auto& cs : c.candidates) cands.push_back({{"transformer", cs.transformer}, {"cost", cs.cost}});
  doc["candidates"] = std::move(cands);
  return doc;
}

}  // namespace gicopt
