#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <sstream>

#include "gicopt/case_model.hpp"
#include "gicopt/dc_network.hpp"
#include "gicopt/error.hpp"
#include "oracles.hpp"

using namespace gicopt;
using nlohmann::json;

namespace {

// Two busses in one grounded substation joined by a single transformer.
NetworkCase one_transformer(const std::string& config) {
  json doc = {
      {"name", "xf2"},
      {"network",
       {{"substations", {{{"id", "S1"}, {"latitude", 40.0}, {"longitude", -90.0}, {"grounding_r", 0.5}}}},
        {"busses",
         {{{"id", "H"}, {"base_kv", 345.0}, {"is_slack", true}, {"substation", "S1"}},
          {{"id", "L"}, {"base_kv", 115.0}, {"substation", "S1"}}}},
        {"branches",
         {{{"id", "X1"}, {"from_bus", "H"}, {"to_bus", "L"}, {"g", 0.0}, {"b", -10.0}, {"s_max", 5.0},
           {"kind", "transformer"}, {"transformer", "X1"}}}},
        {"transformers",
         {{{"id", "X1"}, {"config", config}, {"high_bus", "H"}, {"low_bus", "L"},
           {"winding_r", {{"high", 0.3}, {"low", 0.1}}}, {"k_loss", 1.2}}}}}},
      {"gmd", {{"magnitude", 1.0}, {"direction", 0.0}}}};
  return parse_case(doc);
}

std::size_t count_kind(const DcNetwork& net, DcNodeKind k) {
  std::size_t n = 0;
  for (const auto& x : net.nodes) n += x.kind == k;
  return n;
}

Eigen::MatrixXd nodal_matrix(const DcNetwork& net) {
  const auto n = static_cast<Eigen::Index>(net.nodes.size());
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) g(i, i) += net.nodes[i].grounding_g;
  for (const auto& e : net.edges) {
    const auto f = static_cast<Eigen::Index>(e.from_node), t = static_cast<Eigen::Index>(e.to_node);
    g(f, f) += e.conductance;
    g(t, t) += e.conductance;
    g(f, t) -= e.conductance;
    g(t, f) -= e.conductance;
  }
  // Unblocked neutral leads: a stiff conductance stands in for the merge.
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    if (!net.nodes[i].ground_node) continue;
    const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(*net.nodes[i].ground_node);
    g(a, a) += 1e3;
    g(b, b) += 1e3;
    g(a, b) -= 1e3;
    g(b, a) -= 1e3;
  }
  return g;
}

}  // namespace

TEST(DcBuilder, DeltaDeltaContributesNothing) {
  const DcNetwork net = build_dc_network(one_transformer("delta-delta"));
  EXPECT_TRUE(net.edges.empty());
  EXPECT_EQ(count_kind(net, DcNodeKind::Neutral), 0u);
  EXPECT_TRUE(candidate_neutrals(net).empty());
}

TEST(DcBuilder, GwyeGwyeSharesOneNeutral) {
  const DcNetwork net = build_dc_network(one_transformer("gwye-gwye"));
  ASSERT_EQ(net.edges.size(), 2u);
  ASSERT_EQ(count_kind(net, DcNodeKind::Neutral), 1u);
  EXPECT_EQ(count_kind(net, DcNodeKind::Ground), 1u);
  EXPECT_EQ(net.edges[0].to_node, net.edges[1].to_node);
  EXPECT_EQ(net.nodes[net.edges[0].to_node].kind, DcNodeKind::Neutral);
  EXPECT_DOUBLE_EQ(net.edges[0].conductance, 3.0 / 0.3);
  EXPECT_DOUBLE_EQ(net.edges[1].conductance, 3.0 / 0.1);
  const auto& term = net.transformers.at(0);
  ASSERT_TRUE(term.high && term.low && term.neutral);
  EXPECT_FALSE(term.series || term.common || term.tertiary);
}

TEST(DcBuilder, GwyeDeltaHasOnlyHighWinding) {
  const DcNetwork net = build_dc_network(one_transformer("gwye-delta"));
  ASSERT_EQ(net.edges.size(), 1u);
  EXPECT_EQ(net.edges[0].kind, DcEdgeKind::WindingHigh);
  EXPECT_EQ(net.nodes[net.edges[0].from_node].ac_bus, "H");
}

TEST(DcBuilder, B4gicCandidates) {
  const DcNetwork net = build_dc_network(oracle::bundled("b4gic"));
  ASSERT_EQ(net.candidates.size(), 2u);
  for (std::size_t k : net.candidates) {
    EXPECT_EQ(net.nodes[k].kind, DcNodeKind::Neutral);
    ASSERT_TRUE(net.nodes[k].blocker_candidate);
  }
  const auto c = candidate_neutrals(net);
  EXPECT_EQ(c[0].transformer, "T1");
  EXPECT_EQ(c[1].transformer, "T2");
  // Line edge carries 3/r of the per-phase dc resistance.
  for (const auto& e : net.edges)
    if (e.kind == DcEdgeKind::Line) EXPECT_DOUBLE_EQ(e.conductance, 3.0 / 3.4);
}

TEST(DcBuilder, CandidatesInNaturalOrder) {
  const DcNetwork net = build_dc_network(oracle::bundled("epri21"));
  const auto c = candidate_neutrals(net);
  ASSERT_EQ(c.size(), 8u);
  for (std::size_t i = 1; i < c.size(); ++i) EXPECT_TRUE(natural_less(c[i - 1].transformer, c[i].transformer));
}

TEST(DcBuilder, AllDeltaNetworkHasNoGroundPath) {
  NetworkCase c = oracle::bundled("epri21");
  for (auto& t : c.transformers) {
    t.config = TransformerConfig::DeltaDelta;
    t.config_name = "delta-delta";
    t.grounded = default_grounding(t.config);
  }
  c.candidates.clear();
  const DcNetwork net = build_dc_network(c);
  EXPECT_EQ(count_kind(net, DcNodeKind::Ground), 0u);
  const auto reach = grounded_reachability(net);
  for (std::size_t i = 0; i < net.nodes.size(); ++i)
    if (net.nodes[i].kind == DcNodeKind::Bus) EXPECT_FALSE(reach[i]) << net.nodes[i].id;
}

TEST(DcBuilder, NodalMatrixSymmetricPositive) {
  for (const auto& name : oracle::bundled_names()) {
    const DcNetwork net = build_dc_network(oracle::bundled(name));
    const Eigen::MatrixXd g = nodal_matrix(net);
    EXPECT_LT((g - g.transpose()).cwiseAbs().maxCoeff(), 1e-12) << name;
    // Grounded: strictly positive definite unless some component floats.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    const auto reach = grounded_reachability(net);
    const bool all_grounded = std::all_of(reach.begin(), reach.end(), [](bool b) { return b; });
    if (all_grounded) EXPECT_GT(es.eigenvalues().minCoeff(), 0.0) << name;
    else EXPECT_GT(es.eigenvalues().minCoeff(), -1e-9) << name;

    // Without grounding conductances the matrix is only semidefinite.
    DcNetwork floating = net;
    for (auto& n : floating.nodes) n.grounding_g = 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> fs(nodal_matrix(floating));
    EXPECT_GT(fs.eigenvalues().minCoeff(), -1e-9) << name;
    EXPECT_LT(fs.eigenvalues().minCoeff(), 1e-9) << name;
  }
}

TEST(DcBuilder, RebuildIsDeterministic) {
  for (const auto& name : oracle::bundled_names()) {
    const NetworkCase c = oracle::bundled(name);
    const DcNetwork a = build_dc_network(c);
    const DcNetwork b = build_dc_network(c);
    ASSERT_EQ(a.nodes.size(), b.nodes.size());
    ASSERT_EQ(a.edges.size(), b.edges.size());
    for (std::size_t i = 0; i < a.nodes.size(); ++i) EXPECT_EQ(a.nodes[i].id, b.nodes[i].id);
    for (std::size_t i = 0; i < a.edges.size(); ++i) {
      EXPECT_EQ(a.edges[i].id, b.edges[i].id);
      EXPECT_EQ(a.edges[i].from_node, b.edges[i].from_node);
      EXPECT_EQ(a.edges[i].to_node, b.edges[i].to_node);
    }
    EXPECT_EQ(a.candidates, b.candidates);
    std::ostringstream da, db;
    write_dot(da, a);
    write_dot(db, b);
    EXPECT_EQ(da.str(), db.str());
  }
}

TEST(DcBuilder, MixedConfigurations) {
  const NetworkCase c = oracle::bundled("syn_mixed9");
  const DcNetwork net = build_dc_network(c);
  for (const auto& term : net.transformers) {
    switch (term.config) {
      case TransformerConfig::DeltaDelta:
        EXPECT_FALSE(term.neutral || term.high || term.low) << term.transformer;
        break;
      case TransformerConfig::Auto:
        EXPECT_TRUE(term.series && term.common && term.neutral) << term.transformer;
        break;
      case TransformerConfig::ThreeWinding:
        EXPECT_TRUE(term.high && term.low && term.tertiary && term.neutral) << term.transformer;
        break;
      case TransformerConfig::GwyeGwye:
        EXPECT_TRUE(term.high && term.low && term.neutral) << term.transformer;
        break;
      case TransformerConfig::GwyeDelta:
        EXPECT_TRUE(term.high && term.neutral && !term.low) << term.transformer;
        break;
      default:
        break;
    }
  }
}

TEST(DcBuilder, TablesListEveryNodeAndEdge) {
  const DcNetwork net = build_dc_network(oracle::bundled("b4gic"));
  std::ostringstream nodes, edges;
  write_node_csv(nodes, net);
  write_edge_csv(edges, net);
  auto lines = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n'); };
  EXPECT_EQ(lines(nodes.str()), static_cast<long>(net.nodes.size()) + 1);
  EXPECT_EQ(lines(edges.str()), static_cast<long>(net.edges.size()) + 1);
}

TEST(DcBuilder, GroundedNeutralAtUngroundedSubstationFails) {
  NetworkCase c = oracle::bundled("b4gic");
  c.substations[0].grounding_r.reset();
  try {
    build_dc_network(c);
    FAIL() << "expected BuildError";
  } catch (const BuildError& e) {
    EXPECT_EQ(e.exit_code(), ExitCode::DcBuild);
    EXPECT_NE(std::string(e.what()).find("T1"), std::string::npos);
  }
}
