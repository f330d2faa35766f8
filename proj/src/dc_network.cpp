#include "gicopt/dc_network.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <ostream>

#include "gicopt/error.hpp"

namespace gicopt {

std::string_view to_string(DcNodeKind k) {
  switch (k) {
    case DcNodeKind::Bus: return "bus";
    case DcNodeKind::Neutral: return "neutral";
    case DcNodeKind::Ground: return "ground";
  }
  return "?";
}

std::string_view to_string(DcEdgeKind k) {
  switch (k) {
    case DcEdgeKind::Line: return "line";
    case DcEdgeKind::WindingHigh: return "winding-high";
    case DcEdgeKind::WindingLow: return "winding-low";
    case DcEdgeKind::WindingSeries: return "winding-series";
    case DcEdgeKind::WindingCommon: return "winding-common";
    case DcEdgeKind::WindingTertiary: return "winding-tertiary";
  }
  return "?";
}

std::optional<std::size_t> DcNetwork::node_index(std::string_view id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].id == id) return i;
  return std::nullopt;
}

std::optional<std::size_t> DcNetwork::candidate_position(std::size_t node) const {
  auto it = std::find(candidates.begin(), candidates.end(), node);
  if (it == candidates.end()) return std::nullopt;
  return static_cast<std::size_t>(it - candidates.begin());
}

namespace {

// Edge endpoints are recorded symbolically first; node indices are assigned
// once every edge is known so that isolated busses get no node.
struct PendingEdge {
  DcEdge edge;
  std::string from_key;
  std::string to_key;
};

std::string bus_key(const Id& bus) { return "bus:" + bus; }
std::string neutral_key(const Id& xf) { return "neutral:" + xf; }
std::string ground_key(const Id& sub) { return "ground:" + sub; }

}  // namespace

DcNetwork build_dc_network(const NetworkCase& c) {
  DcNetwork net;
  net.case_name = c.name;
  net.base_mva = c.base_mva;
  net.substations = c.substations;

  std::vector<PendingEdge> pending;

  for (const auto& br : c.branches) {
    if (br.kind != BranchKind::Line) continue;
    if (!(br.r_dc_per_phase > 0.0)) {
      if (br.status)
        throw BuildError("branch '" + br.id + "': in-service line without dc resistance");
      continue;
    }
    DcEdge e;
    e.id = "line:" + br.id;
    e.kind = DcEdgeKind::Line;
    e.conductance = 3.0 / br.r_dc_per_phase;
    e.ac_link = br.id;
    e.in_service = br.status;
    pending.push_back({e, bus_key(br.from_bus), bus_key(br.to_bus)});
  }

  // Ground nodes are created in substation order, neutrals in transformer order.
  std::vector<Id> neutral_subs;  // substation of each neutral, in creation order
  for (const auto& t : c.transformers) {
    TransformerTerminals term;
    term.transformer = t.id;
    term.config = t.config;
    term.alpha = t.alpha;
    term.beta = t.beta;
    term.k_loss = t.k_loss;
    term.s_base = t.s_base;
    term.high_bus = t.high_bus;
    const Bus* hb = c.find_bus(t.high_bus);
    term.high_kv = hb ? hb->base_kv : 0.0;

    if (t.config == TransformerConfig::Unknown)
      throw BuildError("transformer '" + t.id + "': unknown config '" + t.config_name + "'");

    // Transformer status: all of its AC branches in service.
    Id ac_link;
    bool in_service = true;
    for (const auto& br : c.branches) {
      if (br.kind == BranchKind::Transformer && br.transformer == t.id) {
        if (ac_link.empty()) ac_link = br.id;
        in_service = in_service && br.status;
      }
    }
    if (ac_link.empty()) ac_link = t.id;

    auto add_edge = [&](DcEdgeKind kind, const Id& from_bus, const std::string& to_key, double r) {
      if (!(r > 0.0))
        throw BuildError("transformer '" + t.id + "': " + std::string(to_string(kind)) +
                         " resistance must be positive");
      DcEdge e;
      e.id = std::string(to_string(kind)) + ":" + t.id;
      e.kind = kind;
      e.conductance = 3.0 / r;
      e.ac_link = ac_link;
      e.in_service = in_service;
      pending.push_back({e, bus_key(from_bus), to_key});
      return pending.size() - 1;
    };

    const std::string nkey = neutral_key(t.id);
    bool uses_neutral = false;
    auto to_neutral = [&](DcEdgeKind kind, const Id& bus, double r) {
      uses_neutral = true;
      return add_edge(kind, bus, nkey, r);
    };
    switch (t.config) {
      case TransformerConfig::GwyeGwye:
        if (t.grounded.high) term.high = to_neutral(DcEdgeKind::WindingHigh, t.high_bus, t.winding_r.high);
        if (t.grounded.low) term.low = to_neutral(DcEdgeKind::WindingLow, t.low_bus, t.winding_r.low);
        break;
      case TransformerConfig::GwyeDelta:
        if (t.grounded.high) term.high = to_neutral(DcEdgeKind::WindingHigh, t.high_bus, t.winding_r.high);
        break;
      case TransformerConfig::Auto:
        term.series = add_edge(DcEdgeKind::WindingSeries, t.high_bus, bus_key(t.low_bus), t.winding_r.high);
        if (t.grounded.low) term.common = to_neutral(DcEdgeKind::WindingCommon, t.low_bus, t.winding_r.low);
        break;
      case TransformerConfig::ThreeWinding:
        if (t.grounded.high) term.high = to_neutral(DcEdgeKind::WindingHigh, t.high_bus, t.winding_r.high);
        if (t.grounded.low) term.low = to_neutral(DcEdgeKind::WindingLow, t.low_bus, t.winding_r.low);
        if (t.grounded.tertiary)
          term.tertiary = to_neutral(DcEdgeKind::WindingTertiary, t.tertiary_bus, t.winding_r.tertiary);
        break;
      case TransformerConfig::DeltaDelta:
      case TransformerConfig::Other:
      case TransformerConfig::Unknown:
        break;
    }
    if (uses_neutral) {
      const Substation* s = hb ? c.find_substation(hb->substation) : nullptr;
      if (!s) throw BuildError("transformer '" + t.id + "': high bus has no substation");
      if (!s->grounded())
        throw BuildError("transformer '" + t.id + "': grounded neutral at ungrounded substation '" +
                         s->id + "'");
      neutral_subs.push_back(s->id);
      term.neutral = 0;  // placeholder, resolved below
    }
    net.transformers.push_back(std::move(term));
  }

  // Assign node indices: busses (case order), neutrals, ground grids.
  std::map<std::string, std::size_t> index;
  for (const auto& b : c.busses) {
    const std::string key = bus_key(b.id);
    const bool touched = std::any_of(pending.begin(), pending.end(), [&](const PendingEdge& p) {
      return p.from_key == key || p.to_key == key;
    });
    if (!touched) continue;
    DcNode n;
    n.id = key;
    n.kind = DcNodeKind::Bus;
    n.substation = b.substation;
    n.ac_bus = b.id;
    index[key] = net.nodes.size();
    net.nodes.push_back(std::move(n));
  }
  std::size_t k = 0;
  for (auto& term : net.transformers) {
    if (!term.neutral) continue;
    DcNode n;
    n.id = neutral_key(term.transformer);
    n.kind = DcNodeKind::Neutral;
    n.substation = neutral_subs[k++];
    n.transformer = term.transformer;
    term.neutral = net.nodes.size();
    index[n.id] = net.nodes.size();
    net.nodes.push_back(std::move(n));
  }
  for (const auto& s : c.substations) {
    if (std::find(neutral_subs.begin(), neutral_subs.end(), s.id) == neutral_subs.end()) continue;
    DcNode n;
    n.id = ground_key(s.id);
    n.kind = DcNodeKind::Ground;
    n.substation = s.id;
    n.grounding_g = 1.0 / *s.grounding_r;
    index[n.id] = net.nodes.size();
    net.nodes.push_back(std::move(n));
  }
  for (auto& n : net.nodes)
    if (n.kind == DcNodeKind::Neutral) n.ground_node = index.at(ground_key(n.substation));

  for (auto& p : pending) {
    auto f = index.find(p.from_key);
    auto t = index.find(p.to_key);
    if (f == index.end() || t == index.end())
      throw BuildError("edge '" + p.edge.id + "': endpoint not in network");
    p.edge.from_node = f->second;
    p.edge.to_node = t->second;
    net.edges.push_back(std::move(p.edge));
  }

  // Blocker candidates, ordered by transformer id.
  std::vector<CandidateSpec> specs = c.candidates;
  std::sort(specs.begin(), specs.end(),
            [](const CandidateSpec& a, const CandidateSpec& b) { return natural_less(a.transformer, b.transformer); });
  for (const auto& cs : specs) {
    auto it = index.find(neutral_key(cs.transformer));
    if (it == index.end())
      throw BuildError("candidate '" + cs.transformer + "': transformer has no grounded neutral");
    net.nodes[it->second].blocker_candidate = BlockerCandidate{it->second, cs.cost, cs.transformer};
    net.candidates.push_back(it->second);
  }
  return net;
}

std::vector<DcNode> candidate_neutrals(const DcNetwork& net) {
  std::vector<DcNode> out;
  out.reserve(net.candidates.size());
  for (std::size_t i : net.candidates) out.push_back(net.nodes[i]);
  return out;
}

std::vector<bool> grounded_reachability(const DcNetwork& net) {
  // Union-find with neutrals merged into their ground grids.
  std::vector<std::size_t> parent(net.nodes.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](std::size_t a, std::size_t b) { parent[find(a)] = find(b); };
  for (std::size_t i = 0; i < net.nodes.size(); ++i)
    if (net.nodes[i].ground_node) unite(i, *net.nodes[i].ground_node);
  for (const auto& e : net.edges)
    if (e.in_service) unite(e.from_node, e.to_node);
  std::vector<bool> root_grounded(net.nodes.size(), false);
  for (std::size_t i = 0; i < net.nodes.size(); ++i)
    if (net.nodes[i].grounding_g > 0.0) root_grounded[find(i)] = true;
  std::vector<bool> out(net.nodes.size());
  for (std::size_t i = 0; i < net.nodes.size(); ++i) out[i] = root_grounded[find(i)];
  return out;
}

void write_dot(std::ostream& os, const DcNetwork& net) {
  os << "graph dc {\n";
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    const auto& n = net.nodes[i];
    const char* shape = n.kind == DcNodeKind::Bus ? "circle" : n.kind == DcNodeKind::Neutral ? "box" : "triangle";
    os << "  n" << i << " [label=\"" << n.id << "\", shape=" << shape;
    if (n.blocker_candidate) os << ", style=filled, fillcolor=lightblue";
    os << "];\n";
  }
  for (const auto& n : net.nodes)
    if (n.ground_node)
      os << "  n" << *net.node_index(n.id) << " -- n" << *n.ground_node << " [style=dashed];\n";
  for (const auto& e : net.edges) {
    os << "  n" << e.from_node << " -- n" << e.to_node << " [label=\"" << e.id << "\"";
    if (!e.in_service) os << ", style=dotted";
    os << "];\n";
  }
  os << "}\n";
}

void write_node_csv(std::ostream& os, const DcNetwork& net) {
  os << "index,id,kind,substation,grounding_g,ground_node,candidate_cost\n";
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    const auto& n = net.nodes[i];
    os << i << ',' << n.id << ',' << to_string(n.kind) << ',' << n.substation << ','
       << n.grounding_g << ',';
    if (n.ground_node) os << *n.ground_node;
    os << ',';
    if (n.blocker_candidate) os << n.blocker_candidate->cost;
    os << '\n';
  }
}

void write_edge_csv(std::ostream& os, const DcNetwork& net) {
  os << "index,id,kind,from,to,conductance_S,ac_link,in_service,induced_v\n";
  for (std::size_t i = 0; i < net.edges.size(); ++i) {
    const auto& e = net.edges[i];
    os << i << ',' << e.id << ',' << to_string(e.kind) << ',' << net.nodes[e.from_node].id << ','
       << net.nodes[e.to_node].id << ',' << e.conductance << ',' << e.ac_link << ','
       << (e.in_service ? 1 : 0) << ',' << e.induced_v << '\n';
  }
}

}  // namespace gicopt
