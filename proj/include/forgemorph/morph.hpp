#pragma once

#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "forgemorph/costmodel.hpp"

namespace forgemorph::morph {

using costmodel::CostEstimate;
using costmodel::PEAllocation;
using costmodel::TermsOverrides;
using netgraph::DeviceProfile;
using netgraph::NetworkGraph;
using netgraph::Shape;

/// Contiguous backbone segment with its own classification head. Blocks
/// partition the conv/pool backbone; heads stay resident even when their
/// block is gated.
struct LayerBlock {
  std::string block_id;
  std::vector<std::string> layer_ids;
  Shape head_input;  // output shape of the block's last layer
  int head_fc_out = 0;
};

enum class MorphKind { DepthPrefix, WidthFraction };

struct MorphMode {
  MorphKind kind = MorphKind::DepthPrefix;
  std::string name;
  int depth_k = 0;             // DepthPrefix
  double width_fraction = 1.0; // WidthFraction
  PEAllocation active_alloc;
  std::vector<int> active_filters;  // per conv layer
  CostEstimate active;    // gated view: only live hardware contributes
  CostEstimate resident;  // synthesized footprint, mode-invariant
  double switch_latency_s = 0;  // reactivation: one frame of the new mode
  std::optional<double> accuracy;  // user-supplied, never computed here
};

/// Affine power model calibrated against measured samples; calibration
/// data ships as CSV, never as hardcoded truth.
struct PowerModel {
  double base_mw = 0;
  double coef_dsp = 0;
  double coef_lut = 0;
  double coef_bram = 0;
  double fit_residual = 0;  // RMS, milliwatts
};

struct PowerSample {
  double dsp = 0;
  double lut = 0;
  double bram = 0;
  double measured_mw = 0;
};

/// Cuts the backbone after each boundary layer; a trailing remainder
/// closes the final block. Cuts inside a fused residual block are
/// rejected.
std::vector<LayerBlock> partition_blocks(const NetworkGraph& graph,
                                         const std::vector<std::string>& boundaries,
                                         int class_count);

/// Default cut points: after every pool layer (after every conv when the
/// backbone has no pools).
std::vector<std::string> default_boundaries(const NetworkGraph& graph);

MorphMode depth_mode(const NetworkGraph& graph,
                     const std::vector<LayerBlock>& blocks, int k,
                     const PEAllocation& alloc, const DeviceProfile& device,
                     const TermsOverrides& overrides = {});

MorphMode width_mode(const NetworkGraph& graph, double fraction,
                     const PEAllocation& alloc, const DeviceProfile& device,
                     const TermsOverrides& overrides = {});

PowerModel fit_power_model(std::span<const PowerSample> samples);
double predict_power(const PowerModel& model, const CostEstimate& est);
/// Convenience: predicts and attaches power to the estimate.
CostEstimate with_power(const PowerModel& model, CostEstimate est);

std::vector<PowerSample> load_power_csv(const std::string& path);
PowerModel load_power_model(const std::string& path);
std::string serialize_power_model(const PowerModel& model);

/// Runtime mode registry: read-mostly map from mode name to manifest
/// entry, safe for concurrent readers with exclusive writers.
class ModeRegistry {
 public:
  void put(const std::string& name, const MorphMode& mode);
  std::optional<MorphMode> get(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, MorphMode> modes_;
};

}  // namespace forgemorph::morph
