#pragma once

// Quasi-dc solve for a fixed blocker configuration, effective GIC per
// transformer and the resulting reactive loss.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gicopt/case_model.hpp"
#include "gicopt/dc_network.hpp"

namespace gicopt {

// Neutral nodes with a blocker installed. Sorted, unique node indices.
struct BlockerConfig {
  std::vector<std::size_t> placed;

  static BlockerConfig from_nodes(std::vector<std::size_t> nodes);
  // Bit i of `mask` selects net.candidates[i].
  static BlockerConfig from_mask(const DcNetwork& net, std::uint64_t mask);
  bool contains(std::size_t node) const;
};

// Per-phase winding currents in amps, oriented from the winding's bus toward
// the neutral (series winding: high bus toward low bus).
struct WindingCurrents {
  std::optional<double> high;
  std::optional<double> low;
  std::optional<double> series;
  std::optional<double> common;
  std::optional<double> tertiary;
};

struct TransformerGic {
  Id transformer;
  double i_tilde = 0.0;     // signed effective GIC, A per phase
  double i_eff = 0.0;       // magnitude, A per phase
  double qloss_coeff = 0.0; // per-unit reactive loss per per-unit high-side voltage
  double q_loss = 0.0;      // per-unit at the evaluation voltage
};

struct GicSolution {
  std::vector<double> node_v;     // V, per dc node
  std::vector<double> edge_i;     // A, per dc edge (three phases)
  std::vector<double> neutral_i;  // A into remote earth or the ground grid, per node
  std::vector<TransformerGic> transformers;
  double max_kcl_residual = 0.0;
};

// Solves the nodal system G V = J. Blocked neutrals are detached from their
// ground grid; everything else is merged into it. q_loss is evaluated at
// `v_high` per-unit on every high-side bus.
// Throws SingularNetworkError when some component has no ground return.
GicSolution solve_gic(const DcNetwork& net, const BlockerConfig& cfg, double v_high = 1.0);

// Signed effective GIC by core configuration. Throws std::invalid_argument
// when a winding current required by the configuration is absent.
double effective_gic(TransformerConfig config, double alpha, double beta, const WindingCurrents& w);
double effective_gic(const Transformer& xfmr, const WindingCurrents& w);

double ieff_magnitude(double i_tilde);

// Reactive loss, in per-unit of `system_base_mva`:
//   sqrt(2/3) * (S_b / V_b) * K * i_eff * v_high  [MVAr]
// with S_b in MVA, V_b the high-side nominal voltage in kV line-to-line and
// i_eff in amps per phase.
double qloss(double s_base_mva, double high_kv, double k_loss, double i_eff, double v_high,
             double system_base_mva);
double qloss(const Transformer& xfmr, double high_kv, double i_eff, double v_high,
             double system_base_mva);

// Winding currents of one transformer read off a solved network.
WindingCurrents winding_currents(const TransformerTerminals& term, std::span<const double> edge_i);

}  // namespace gicopt
