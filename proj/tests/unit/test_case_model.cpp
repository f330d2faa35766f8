#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "gicopt/case_model.hpp"
#include "gicopt/dc_network.hpp"
#include "gicopt/error.hpp"
#include "oracles.hpp"

using namespace gicopt;
using nlohmann::json;

namespace {

json b4gic_json() {
  std::ifstream in(oracle::case_path("b4gic"));
  return json::parse(in);
}

bool has_code(const std::vector<Diagnostic>& d, const std::string& code) {
  for (const auto& x : d)
    if (x.code == code) return true;
  return false;
}

const Diagnostic* find_code(const std::vector<Diagnostic>& d, const std::string& code) {
  for (const auto& x : d)
    if (x.code == code) return &x;
  return nullptr;
}

}  // namespace

TEST(CaseModel, B4gicShape) {
  const NetworkCase c = oracle::bundled("b4gic");
  EXPECT_EQ(c.busses.size(), 4u);
  EXPECT_EQ(c.candidates.size(), 2u);
  EXPECT_EQ(c.transformers.size(), 2u);
  ASSERT_TRUE(c.gmd.has_value());
}

TEST(CaseModel, BundledCasesValidateWithoutErrors) {
  for (const auto& name : oracle::bundled_names()) {
    const auto d = validate(oracle::bundled(name));
    EXPECT_FALSE(has_errors(d)) << name << "\n" << format_diagnostics(d);
  }
  EXPECT_TRUE(validate(oracle::bundled("b4gic")).empty());
}

TEST(CaseModel, RoundTripIsFieldwiseIdentical) {
  for (const auto& name : oracle::bundled_names()) {
    const NetworkCase c = oracle::bundled(name);
    const NetworkCase back = parse_case(json::parse(to_json(c).dump()));
    EXPECT_EQ(back, c) << name;
  }
}

TEST(CaseModel, ValidateIsPure) {
  NetworkCase c = oracle::bundled("epri21");
  c.transformers[0].alpha = 0.0;
  c.branches[0].to_bus = "99";
  const NetworkCase copy = c;
  const auto first = validate(c);
  const auto second = validate(c);
  EXPECT_EQ(first, second);
  EXPECT_EQ(c, copy);
}

TEST(CaseModel, EmptyBusListIsAnError) {
  json doc = b4gic_json();
  doc["network"]["busses"] = json::array();
  const auto d = validate(parse_case(doc));
  const Diagnostic* x = find_code(d, "E_NO_BUSSES");
  ASSERT_NE(x, nullptr);
  EXPECT_EQ(x->message, "no busses");
  EXPECT_THROW(case_from_json(doc), ValidationError);
}

TEST(CaseModel, DanglingBusReferenceNamesBranch) {
  json doc = b4gic_json();
  doc["network"]["branches"][1]["to_bus"] = "99";
  const auto d = validate(parse_case(doc));
  const Diagnostic* x = find_code(d, "E_DANGLING_REF");
  ASSERT_NE(x, nullptr);
  EXPECT_NE(x->message.find("branch 'L1'"), std::string::npos) << x->message;
  EXPECT_NE(x->message.find("99"), std::string::npos);
  try {
    case_from_json(doc);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.exit_code(), ExitCode::Validation);
    EXPECT_NE(std::string(e.what()).find("L1"), std::string::npos);
  }
}

TEST(CaseModel, ZeroTurnsRatio) {
  NetworkCase c = oracle::bundled("b4gic");
  c.transformers[1].alpha = 0.0;
  const auto d = validate(c);
  const Diagnostic* x = find_code(d, "E_TURNS_RATIO");
  ASSERT_NE(x, nullptr);
  EXPECT_NE(x->message.find("T2"), std::string::npos);
}

TEST(CaseModel, NoGroundedSubstationWarns) {
  NetworkCase c = oracle::bundled("b4gic");
  for (auto& t : c.transformers) {
    t.config = TransformerConfig::DeltaDelta;
    t.config_name = "delta-delta";
    t.grounded = default_grounding(t.config);
  }
  c.candidates.clear();
  const auto d = validate(c);
  const Diagnostic* x = find_code(d, "W_NO_GROUND");
  ASSERT_NE(x, nullptr);
  EXPECT_EQ(x->severity, Severity::Warning);
  EXPECT_EQ(x->message, "no ground return path");
  EXPECT_FALSE(has_errors(d)) << format_diagnostics(d);

  // Agrees with reachability on the built network.
  const DcNetwork net = build_dc_network(c);
  for (bool r : grounded_reachability(net)) EXPECT_FALSE(r);
}

TEST(CaseModel, UngroundedNeutralAtUngroundedSubstation) {
  NetworkCase c = oracle::bundled("b4gic");
  c.substations[1].grounding_r.reset();
  EXPECT_TRUE(has_code(validate(c), "E_UNGROUNDED_NEUTRAL"));
}

TEST(CaseModel, MissingGmdAndUnknownConfig) {
  json doc = b4gic_json();
  doc.erase("gmd");
  doc["network"]["transformers"][0]["config"] = "zigzag";
  const auto d = validate(parse_case(doc));
  EXPECT_TRUE(has_code(d, "E_NO_GMD"));
  const Diagnostic* x = find_code(d, "E_XFMR_CONFIG");
  ASSERT_NE(x, nullptr);
  EXPECT_NE(x->message.find("zigzag"), std::string::npos);
}

TEST(CaseModel, TransmissionGeneratorNeedsStepUp) {
  NetworkCase c = oracle::bundled("b4gic");
  c.generators[0].bus = "2";
  EXPECT_TRUE(has_code(validate(c), "E_GEN_NO_GSU"));
  c.allow_gen_without_gsu = true;
  EXPECT_FALSE(has_code(validate(c), "E_GEN_NO_GSU"));
}

TEST(CaseModel, DuplicateIdsAndMissingSlack) {
  NetworkCase c = oracle::bundled("b4gic");
  c.loads.push_back(c.loads[0]);
  for (auto& b : c.busses) b.is_slack = false;
  const auto d = validate(c);
  EXPECT_TRUE(has_code(d, "E_DUPLICATE_ID"));
  EXPECT_TRUE(has_code(d, "E_NO_SLACK"));
}

TEST(CaseModel, ParseErrorNamesRecordAndField) {
  json doc = b4gic_json();
  doc["network"]["busses"][1].erase("base_kv");
  try {
    parse_case(doc);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("bus '2'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("base_kv"), std::string::npos) << msg;
    EXPECT_EQ(e.exit_code(), ExitCode::CaseParse);
  }

  json bad = b4gic_json();
  bad["network"]["generators"][0]["p_max"] = "lots";
  try {
    parse_case(bad);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("generator 'G1'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("p_max"), std::string::npos) << msg;
  }
}

TEST(CaseModel, AnglesAreDegreesOnDisk) {
  const NetworkCase c = oracle::bundled("b4gic");
  EXPECT_NEAR(c.branches[0].theta_max, 60.0 * std::numbers::pi / 180.0, 1e-15);
  EXPECT_NEAR(c.branches[0].theta_min, -60.0 * std::numbers::pi / 180.0, 1e-15);
  const json out = to_json(c);
  EXPECT_NEAR(out["network"]["branches"][0]["theta_max"].get<double>(), 60.0, 1e-12);
}

TEST(CaseModel, IntegerIdsBecomeStrings) {
  json doc = b4gic_json();
  doc["network"]["busses"][0]["id"] = 1;
  const NetworkCase c = parse_case(doc);
  EXPECT_EQ(c.busses[0].id, "1");
}

TEST(CaseModel, TurnsRatioDefaultsFromBaseKv) {
  json doc = b4gic_json();
  doc["network"]["transformers"][0].erase("alpha");
  const NetworkCase c = parse_case(doc);
  EXPECT_DOUBLE_EQ(c.transformers[0].alpha, 500.0 / 20.0);
}

TEST(CaseModel, LoadCaseErrors) {
  EXPECT_THROW(load_case(oracle::data_dir() / "cases" / "does_not_exist.json"), IoError);
  const auto tmp = std::filesystem::temp_directory_path() / "gicopt_bad_case.json";
  {
    std::ofstream out(tmp);
    out << "{ not json";
  }
  EXPECT_THROW(load_case(tmp), ParseError);
  std::filesystem::remove(tmp);
}

TEST(CaseModel, NaturalOrdering) {
  EXPECT_TRUE(natural_less("T2", "T10"));
  EXPECT_FALSE(natural_less("T10", "T2"));
  EXPECT_TRUE(natural_less("A", "B"));
  EXPECT_TRUE(natural_less("T1", "T1a"));
  EXPECT_FALSE(natural_less("T3", "T3"));
  EXPECT_TRUE(natural_less("2", "10"));
}

TEST(CaseModel, ConfigNamesRoundTrip) {
  for (auto cfg : {TransformerConfig::DeltaDelta, TransformerConfig::GwyeDelta, TransformerConfig::GwyeGwye,
                   TransformerConfig::Auto, TransformerConfig::ThreeWinding, TransformerConfig::Other})
    EXPECT_EQ(parse_transformer_config(to_string(cfg)), cfg);
  EXPECT_EQ(parse_transformer_config("wye-zigzag"), TransformerConfig::Unknown);
}
