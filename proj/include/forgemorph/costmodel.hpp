#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forgemorph/netgraph.hpp"

namespace forgemorph::costmodel {

using netgraph::DeviceProfile;
using netgraph::LayerKind;
using netgraph::LayerSpec;
using netgraph::NetworkGraph;
using netgraph::Shape;

/// MAC core composition for a K x K window: K^2 multipliers feeding an
/// adder tree of K^2 - 1 adders across ceil(log2 K^2) + 1 pipeline stages.
struct MacCounts {
  int multipliers = 0;
  int adders = 0;
  int adder_stages = 0;
};
MacCounts mac_core_counts(int kernel);

/// Per-PE timing parameters, all in cycles except the two in seconds.
/// d_in applies to the first layer of a pipeline only.
struct LatencyTerms {
  double clk_period = 0;  // seconds
  double d_in = 4;
  double d_out = 4;
  double p_b = 0;  // back porch
  double p_f = 0;  // front porch
  double t_pad = 0;
  double t_tap = 0;
  double t_mul = 0;
  double t_add = 0;
  double t_relu = 1;
  double t_memory = 0;  // seconds

  /// Kernel-derived defaults: t_pad = K-1, t_tap = t_mul = K,
  /// t_add = ceil(log2 K^2) + 2, d_in = d_out = 4, t_relu = 1.
  static LatencyTerms defaults_for_kernel(int kernel, double clock_hz);

  void validate() const;  // throws IncompleteTerms
};

/// Optional user overrides layered on top of the per-kernel defaults.
struct TermsOverrides {
  std::optional<double> d_in, d_out, p_b, p_f, t_pad, t_tap, t_mul, t_add,
      t_relu, t_memory;

  LatencyTerms resolve(int kernel, double clock_hz) const;
  bool empty() const;
};
TermsOverrides load_terms_overrides(const std::string& path);

/// MOGA genome: one PE count per conv layer (topological order) plus the
/// fully connected parallelism.
struct PEAllocation {
  std::vector<int> conv_pe;
  int fc_pe = 1;

  bool operator==(const PEAllocation&) const = default;
};

struct CostEstimate {
  double latency_s = 0;
  long long dsp = 0;
  long long lut = 0;
  long long bram = 0;
  long long registers = 0;
  std::optional<double> power_mw;  // attached by the power model
};

/// Raw streaming-core cycle count including the fractional (P_b + 1) / 2
/// porch-settle term. The integer-cycle variants round that term up.
double conv_core_cycles_exact(const LayerSpec& layer, const LatencyTerms& terms,
                              bool is_first);

/// Whole-cycle latency of one conv PE processing one padded frame.
long long conv_pe_cycles(const LayerSpec& layer, const LatencyTerms& terms,
                         bool is_first);
double conv_pe_latency(const LayerSpec& layer, const LatencyTerms& terms,
                       bool is_first);

enum class PoolOp { Max, Avg };
long long pool_pe_cycles(const LayerSpec& layer, const LatencyTerms& terms,
                         PoolOp op, bool is_first);
double pool_pe_latency(const LayerSpec& layer, const LatencyTerms& terms,
                       PoolOp op, bool is_first);

/// FC stream-in latency; the parallelism coefficient ceil(Ch_D / fc_pe)
/// serializes channels over the available FC PEs.
double fc_latency(const LayerSpec& layer, const LatencyTerms& terms, int fc_pe,
                  const Shape& in_map);

struct FcResources {
  long long multipliers = 0;
  long long adders = 0;
  long long registers = 0;
};
FcResources fc_resources(int fc_out, int n_pe, int tree_adders);

/// 18 Kb block count for a K-row line buffer at the given width and word size.
long long bram_linebuffer(int fm_width, int kernel, int fp_rep);

enum class PeKind { Conv, Pool };
struct LutRegs {
  int lut = 0;
  int registers = 0;
};
/// Synthesis-calibrated per-PE logic cost; kernels outside {2, 3, 4, 5}
/// are rejected rather than extrapolated.
LutRegs lut_lookup(PeKind kind, int kernel);

/// L(i) = P(i) * P(i-1) with P(0) = input channel count of the first conv
/// layer; conv_ordinal indexes conv layers in topological order (0-based).
long long layer_pe_demand(const NetworkGraph& graph, const PEAllocation& alloc,
                          int conv_ordinal);

/// Y_DSP = sum_j L(j) * k(j)^2 + fc_pe * 10 per fully connected layer.
long long dsp_total(const NetworkGraph& graph, const PEAllocation& alloc);

/// T_total = m * clk + (n - 1) * II + t_memory where m is the number of
/// pipeline stages. Defaults to the fully pipelined interval II = clk.
double pipeline_latency(std::span<const double> stage_latencies,
                        long long n_elements, double clk_period,
                        double initiation_interval, double t_memory = 0);

/// Full objective assembly for one (graph, allocation, device) triple.
CostEstimate estimate(const NetworkGraph& graph, const PEAllocation& alloc,
                      const DeviceProfile& device,
                      const TermsOverrides& overrides = {});

/// Per-conv-layer genome upper bounds ub(i) = filter count.
std::vector<int> conv_upper_bounds(const NetworkGraph& graph);

/// Upper bound for the fc_pe gene: channel depth feeding the FC layer
/// (0 when the graph has no FC layer).
int fc_pe_upper_bound(const NetworkGraph& graph);

void validate_allocation(const NetworkGraph& graph, const PEAllocation& alloc);

}  // namespace forgemorph::costmodel
