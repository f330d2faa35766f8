#pragma once

// Quasi-dc equivalent of an AC case. Inductances are shorts and capacitances
// are opens, so line charging and shunts contribute nothing; only series
// conductors, transformer windings and substation grounding remain.
//
// Node kinds:
//   Bus     one per AC bus that touches at least one dc edge
//   Neutral one per transformer with a grounded winding
//   Ground  one per substation grounding grid that hosts a neutral
//
// Neutrals of one substation share its Ground node. A neutral without a
// blocker is the same electrical node as its Ground; a blocked neutral floats.
// The solver realizes that by merging nodes, so the lead between a neutral and
// its ground grid is never an edge.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gicopt/case_model.hpp"

namespace gicopt {

enum class DcNodeKind { Bus, Neutral, Ground };
enum class DcEdgeKind { Line, WindingHigh, WindingLow, WindingSeries, WindingCommon, WindingTertiary };

std::string_view to_string(DcNodeKind k);
std::string_view to_string(DcEdgeKind k);

struct BlockerCandidate {
  std::size_t node = 0;
  double cost = 1.0;
  Id transformer;
};

struct DcNode {
  Id id;
  DcNodeKind kind = DcNodeKind::Bus;
  Id substation;
  double grounding_g = 0.0;  // S to remote earth; nonzero only on Ground nodes
  std::optional<std::size_t> ground_node;  // Neutral -> its substation Ground
  std::optional<BlockerCandidate> blocker_candidate;
  Id ac_bus;       // Bus nodes
  Id transformer;  // Neutral nodes
};

struct DcEdge {
  Id id;
  std::size_t from_node = 0;
  std::size_t to_node = 0;
  double conductance = 0.0;  // S, three phases in parallel
  DcEdgeKind kind = DcEdgeKind::Line;
  Id ac_link;  // AC branch (line) or transformer branch this edge belongs to
  bool in_service = true;
  double induced_v = 0.0;  // V, lines only
};

// Edge indices of one transformer's windings; absent windings carry no dc.
struct TransformerTerminals {
  Id transformer;
  TransformerConfig config = TransformerConfig::Other;
  double alpha = 1.0;
  double beta = 0.0;
  double k_loss = 0.0;
  double s_base = 100.0;
  double high_kv = 0.0;
  Id high_bus;
  std::optional<std::size_t> neutral;
  std::optional<std::size_t> high;
  std::optional<std::size_t> low;
  std::optional<std::size_t> series;
  std::optional<std::size_t> common;
  std::optional<std::size_t> tertiary;
};

struct DcNetwork {
  std::string case_name;
  double base_mva = 100.0;
  std::vector<DcNode> nodes;
  std::vector<DcEdge> edges;
  std::vector<TransformerTerminals> transformers;  // same order as the case
  std::vector<Substation> substations;             // copied for field coupling
  std::vector<std::size_t> candidates;             // neutral node indices, by transformer id

  std::optional<std::size_t> node_index(std::string_view id) const;
  std::optional<std::size_t> candidate_position(std::size_t node) const;
};

DcNetwork build_dc_network(const NetworkCase& c);

// Candidate neutral nodes in deterministic (natural transformer-id) order.
std::vector<DcNode> candidate_neutrals(const DcNetwork& net);

// Connected components of bus/neutral/ground nodes that contain a grounded
// node; used by validation and tests as a reachability check.
std::vector<bool> grounded_reachability(const DcNetwork& net);

void write_dot(std::ostream& os, const DcNetwork& net);
void write_node_csv(std::ostream& os, const DcNetwork& net);
void write_edge_csv(std::ostream& os, const DcNetwork& net);

}  // namespace gicopt
