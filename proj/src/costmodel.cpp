#include "forgemorph/costmodel.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace forgemorph::costmodel {

using nlohmann::json;

namespace {

int adder_tree_stages(int kernel) {
  const int taps = kernel * kernel;
  return taps > 1 ? static_cast<int>(std::ceil(std::log2(taps))) + 1 : 1;
}

long long ceil_div(long long a, long long b) { return (a + b - 1) / b; }

}  // namespace

MacCounts mac_core_counts(int kernel) {
  if (kernel < 1) raise(Errc::invalid_argument, "kernel must be >= 1");
  MacCounts counts;
  counts.multipliers = kernel * kernel;
  counts.adders = kernel * kernel - 1;
  counts.adder_stages = adder_tree_stages(kernel);
  return counts;
}

LatencyTerms LatencyTerms::defaults_for_kernel(int kernel, double clock_hz) {
  if (kernel < 1) raise(Errc::invalid_argument, "kernel must be >= 1");
  if (clock_hz <= 0) raise(Errc::incomplete_terms, "clock frequency must be positive");
  LatencyTerms terms;
  terms.clk_period = 1.0 / clock_hz;
  terms.d_in = 4;
  terms.d_out = 4;
  terms.p_b = 0;
  terms.p_f = 0;
  terms.t_pad = kernel - 1;
  terms.t_tap = kernel;
  terms.t_mul = kernel;
  const int taps = kernel * kernel;
  terms.t_add = (taps > 1 ? std::ceil(std::log2(taps)) : 0.0) + 2;
  terms.t_relu = 1;
  terms.t_memory = 0;
  return terms;
}

void LatencyTerms::validate() const {
  if (clk_period <= 0) raise(Errc::incomplete_terms, "clk_period must be positive");
  const double cycles[] = {d_in, d_out, p_b, p_f, t_pad, t_tap, t_mul, t_add, t_relu};
  for (double value : cycles) {
    if (value < 0 || !std::isfinite(value)) {
      raise(Errc::incomplete_terms, "cycle terms must be finite and non-negative");
    }
  }
  if (t_memory < 0 || !std::isfinite(t_memory)) {
    raise(Errc::incomplete_terms, "t_memory must be finite and non-negative");
  }
}

LatencyTerms TermsOverrides::resolve(int kernel, double clock_hz) const {
  LatencyTerms terms = LatencyTerms::defaults_for_kernel(kernel, clock_hz);
  if (d_in) terms.d_in = *d_in;
  if (d_out) terms.d_out = *d_out;
  if (p_b) terms.p_b = *p_b;
  if (p_f) terms.p_f = *p_f;
  if (t_pad) terms.t_pad = *t_pad;
  if (t_tap) terms.t_tap = *t_tap;
  if (t_mul) terms.t_mul = *t_mul;
  if (t_add) terms.t_add = *t_add;
  if (t_relu) terms.t_relu = *t_relu;
  if (t_memory) terms.t_memory = *t_memory;
  terms.validate();
  return terms;
}

bool TermsOverrides::empty() const {
  return !d_in && !d_out && !p_b && !p_f && !t_pad && !t_tap && !t_mul &&
         !t_add && !t_relu && !t_memory;
}

TermsOverrides load_terms_overrides(const std::string& path) {
  std::ifstream stream(path);
  if (!stream) raise(Errc::io_error, "cannot open terms config '" + path + "'");
  json doc;
  try {
    doc = json::parse(stream);
  } catch (const json::parse_error& err) {
    raise(Errc::malformed_document, err.what());
  }
  TermsOverrides overrides;
  const auto read = [&](const char* key, std::optional<double>& slot) {
    if (doc.contains(key)) slot = doc[key].get<double>();
  };
  read("d_in", overrides.d_in);
  read("d_out", overrides.d_out);
  read("p_b", overrides.p_b);
  read("p_f", overrides.p_f);
  read("t_pad", overrides.t_pad);
  read("t_tap", overrides.t_tap);
  read("t_mul", overrides.t_mul);
  read("t_add", overrides.t_add);
  read("t_relu", overrides.t_relu);
  read("t_memory", overrides.t_memory);
  return overrides;
}

namespace {

struct FrameDims {
  long long width = 0;   // padded
  long long height = 0;  // padded
};

FrameDims padded_frame(const LayerSpec& layer) {
  return FrameDims{layer.in.w + 2ll * layer.padding,
                   layer.in.h + 2ll * layer.padding};
}

/// Streaming core cycles with the porch-settle term rounded up to a whole
/// cycle, so the count is comparable with the cycle-walking simulator.
long long core_cycles(const LayerSpec& layer, const LatencyTerms& terms,
                      bool is_first) {
  const FrameDims frame = padded_frame(layer);
  const long long settle =
      static_cast<long long>(std::ceil((terms.p_b + 1) / 2.0));
  const long long row = frame.width + static_cast<long long>(terms.p_b) +
                        static_cast<long long>(terms.p_f);
  return (is_first ? static_cast<long long>(terms.d_in) : 0) + settle +
         row * frame.height;
}

}  // namespace

double conv_core_cycles_exact(const LayerSpec& layer, const LatencyTerms& terms,
                              bool is_first) {
  terms.validate();
  const FrameDims frame = padded_frame(layer);
  return (is_first ? terms.d_in : 0.0) + (terms.p_b + 1) / 2.0 +
         (frame.width + terms.p_b + terms.p_f) * static_cast<double>(frame.height);
}

long long conv_pe_cycles(const LayerSpec& layer, const LatencyTerms& terms,
                         bool is_first) {
  if (layer.kind != LayerKind::Conv) {
    raise(Errc::invalid_argument, "conv_pe_cycles expects a Conv layer");
  }
  terms.validate();
  netgraph::layer_output_shape(layer);  // rejects degenerate frames
  const double overhead = terms.t_pad + terms.t_tap + terms.t_mul +
                          terms.t_add + terms.d_out + terms.t_relu;
  return core_cycles(layer, terms, is_first) +
         static_cast<long long>(std::llround(overhead));
}

double conv_pe_latency(const LayerSpec& layer, const LatencyTerms& terms,
                       bool is_first) {
  return conv_pe_cycles(layer, terms, is_first) * terms.clk_period;
}

long long pool_pe_cycles(const LayerSpec& layer, const LatencyTerms& terms,
                         PoolOp op, bool is_first) {
  if (!layer.is_pool()) {
    raise(Errc::invalid_argument, "pool_pe_cycles expects a pool layer");
  }
  terms.validate();
  netgraph::layer_output_shape(layer);
  // Max pooling swaps the multiplier stage for a comparator tree of the
  // same depth; average pooling keeps the fixed-coefficient MAC.
  double overhead = terms.t_pad + terms.t_tap + terms.t_add + terms.d_out;
  if (op == PoolOp::Avg) overhead += terms.t_mul;
  return core_cycles(layer, terms, is_first) +
         static_cast<long long>(std::llround(overhead));
}

double pool_pe_latency(const LayerSpec& layer, const LatencyTerms& terms,
                       PoolOp op, bool is_first) {
  return pool_pe_cycles(layer, terms, op, is_first) * terms.clk_period;
}

double fc_latency(const LayerSpec& layer, const LatencyTerms& terms, int fc_pe,
                  const Shape& in_map) {
  if (layer.kind != LayerKind::FullyConnected) {
    raise(Errc::invalid_argument, "fc_latency expects a FullyConnected layer");
  }
  if (fc_pe < 1) raise(Errc::invalid_argument, "fc_pe must be >= 1");
  if (in_map.h < 1 || in_map.w < 1 || in_map.c < 1) {
    raise(Errc::invalid_argument, "FC input map dimensions must be >= 1");
  }
  terms.validate();
  const double stream_cycles =
      (in_map.w + terms.p_b + terms.p_f) * (in_map.h - 1.0) + in_map.h;
  const long long parallelism = ceil_div(in_map.c, fc_pe);
  return terms.clk_period * stream_cycles * static_cast<double>(parallelism);
}

FcResources fc_resources(int fc_out, int n_pe, int tree_adders) {
  if (fc_out < 1 || n_pe < 1 || tree_adders < 0) {
    raise(Errc::invalid_argument, "fc_resources arguments out of range");
  }
  FcResources res;
  res.multipliers = 1ll * fc_out * n_pe;
  res.adders = 1ll * fc_out * n_pe + 1ll * fc_out * tree_adders;
  res.registers = 1ll * fc_out * n_pe;
  return res;
}

long long bram_linebuffer(int fm_width, int kernel, int fp_rep) {
  if (fm_width < 1 || kernel < 1 || fp_rep < 1) {
    raise(Errc::invalid_argument, "bram_linebuffer arguments must be >= 1");
  }
  return ceil_div(1ll * fm_width * kernel * fp_rep, 18432);
}

LutRegs lut_lookup(PeKind kind, int kernel) {
  switch (kernel) {
    case 2: return kind == PeKind::Conv ? LutRegs{550, 1250} : LutRegs{300, 750};
    case 3: return kind == PeKind::Conv ? LutRegs{850, 2000} : LutRegs{420, 1000};
    case 4: return kind == PeKind::Conv ? LutRegs{1400, 3500} : LutRegs{700, 1400};
    case 5: return kind == PeKind::Conv ? LutRegs{2000, 5500} : LutRegs{900, 2200};
    default:
      raise(Errc::unsupported_kernel,
            "no synthesis data for kernel " + std::to_string(kernel) +
                "; supported sizes are 2..5");
  }
}

void validate_allocation(const NetworkGraph& graph, const PEAllocation& alloc) {
  const auto convs = graph.conv_indices();
  if (alloc.conv_pe.size() != convs.size()) {
    raise(Errc::length_mismatch,
          "allocation has " + std::to_string(alloc.conv_pe.size()) +
              " conv entries but the graph has " + std::to_string(convs.size()) +
              " conv layers");
  }
  for (size_t i = 0; i < convs.size(); ++i) {
    const int ub = graph.layers[convs[i]].filters;
    if (alloc.conv_pe[i] < 1 || alloc.conv_pe[i] > ub) {
      raise(Errc::invalid_argument,
            "conv_pe[" + std::to_string(i) + "] = " + std::to_string(alloc.conv_pe[i]) +
                " outside [1, " + std::to_string(ub) + "]");
    }
  }
  if (alloc.fc_pe < 1) raise(Errc::invalid_argument, "fc_pe must be >= 1");
  const int fc_ub = fc_pe_upper_bound(graph);
  if (fc_ub > 0 && alloc.fc_pe > fc_ub) {
    raise(Errc::invalid_argument,
          "fc_pe = " + std::to_string(alloc.fc_pe) + " exceeds channel depth " +
              std::to_string(fc_ub));
  }
}

long long layer_pe_demand(const NetworkGraph& graph, const PEAllocation& alloc,
                          int conv_ordinal) {
  const auto convs = graph.conv_indices();
  if (conv_ordinal < 0 || conv_ordinal >= static_cast<int>(convs.size())) {
    raise(Errc::invalid_argument, "conv ordinal out of range");
  }
  const long long upstream = conv_ordinal == 0
                                 ? graph.layers[convs[0]].in.c
                                 : alloc.conv_pe[conv_ordinal - 1];
  return alloc.conv_pe[conv_ordinal] * upstream;
}

long long dsp_total(const NetworkGraph& graph, const PEAllocation& alloc) {
  validate_allocation(graph, alloc);
  const auto convs = graph.conv_indices();
  long long total = 0;
  for (size_t i = 0; i < convs.size(); ++i) {
    const long long k = graph.layers[convs[i]].kernel;
    total += layer_pe_demand(graph, alloc, static_cast<int>(i)) * k * k;
  }
  total += 10ll * alloc.fc_pe * static_cast<long long>(graph.fc_indices().size());
  return total;
}

double pipeline_latency(std::span<const double> stage_latencies,
                        long long n_elements, double clk_period,
                        double initiation_interval, double t_memory) {
  if (n_elements < 1) raise(Errc::invalid_argument, "n_elements must be >= 1");
  if (clk_period <= 0) raise(Errc::incomplete_terms, "clk_period must be positive");
  if (initiation_interval < clk_period) {
    raise(Errc::invalid_argument, "initiation interval below one clock period");
  }
  const double stages = static_cast<double>(stage_latencies.size());
  return stages * clk_period + (n_elements - 1) * initiation_interval + t_memory;
}

std::vector<int> conv_upper_bounds(const NetworkGraph& graph) {
  std::vector<int> bounds;
  for (int idx : graph.conv_indices()) bounds.push_back(graph.layers[idx].filters);
  return bounds;
}

int fc_pe_upper_bound(const NetworkGraph& graph) {
  const auto fcs = graph.fc_indices();
  if (fcs.empty()) return 0;
  return graph.layers[fcs.front()].in.c;
}

CostEstimate estimate(const NetworkGraph& graph, const PEAllocation& alloc,
                      const DeviceProfile& device,
                      const TermsOverrides& overrides) {
  validate_allocation(graph, alloc);

  CostEstimate total;
  double latency_s = 0;
  int conv_ordinal = 0;
  bool first_costable = true;
  // Physical stream parallelism entering the current layer; the input
  // feeds one stream per channel.
  long long streams = 1;

  for (const LayerSpec& layer : graph.layers) {
    switch (layer.kind) {
      case LayerKind::Input:
        streams = layer.in.c;
        break;

      case LayerKind::Conv: {
        const int k = layer.kernel;
        const LatencyTerms terms = overrides.resolve(k, device.clock_hz);
        const int pe = alloc.conv_pe[conv_ordinal];
        const long long demand = layer_pe_demand(graph, alloc, conv_ordinal);
        const LutRegs logic = lut_lookup(PeKind::Conv, k);

        total.dsp += demand * k * k;
        total.lut += demand * logic.lut + 300 * streams;  // stream control
        total.registers += demand * logic.registers;
        // Each PE keeps K-1 row FIFOs at the padded input width; FIFOs do
        // not share blocks.
        const long long row_blocks = ceil_div(
            1ll * (layer.in.w + 2ll * layer.padding) * device.fp_rep, 18432);
        total.bram += demand * (k - 1) * row_blocks;

        const long long passes = ceil_div(layer.filters, pe);
        latency_s += conv_pe_latency(layer, terms, first_costable) *
                     static_cast<double>(passes);
        first_costable = false;
        streams = pe;
        ++conv_ordinal;
        break;
      }

      case LayerKind::MaxPool:
      case LayerKind::AvgPool: {
        const int k = layer.kernel;
        const LatencyTerms terms = overrides.resolve(k, device.clock_hz);
        const PoolOp op =
            layer.kind == LayerKind::MaxPool ? PoolOp::Max : PoolOp::Avg;
        const LutRegs logic = lut_lookup(PeKind::Pool, k);
        const long long pe_count = streams;

        total.lut += pe_count * logic.lut;
        total.registers += pe_count * logic.registers;
        total.bram += pe_count;  // one block per pool PE

        const long long passes = ceil_div(layer.in.c, pe_count);
        latency_s += pool_pe_latency(layer, terms, op, first_costable) *
                     static_cast<double>(passes);
        first_costable = false;
        break;
      }

      case LayerKind::FullyConnected: {
        const LatencyTerms terms = overrides.resolve(1, device.clock_hz);
        total.dsp += 10ll * alloc.fc_pe;
        total.lut += 360ll * alloc.fc_pe;
        const FcResources res =
            fc_resources(layer.fc_out, alloc.fc_pe, std::max(0, alloc.fc_pe - 1));
        total.registers += res.registers;
        latency_s += fc_latency(layer, terms, alloc.fc_pe, layer.in);
        first_costable = false;
        streams = alloc.fc_pe;
        break;
      }

      case LayerKind::ResidualAdd: {
        // One adder per active channel, one cycle of latency.
        total.lut += 1ll * layer.in.c * device.fp_rep;
        latency_s += 1.0 / device.clock_hz;
        break;
      }

      case LayerKind::Output:
        break;
    }
  }

  latency_s += overrides.t_memory.value_or(0.0);
  total.latency_s = latency_s;
  return total;
}

}  // namespace forgemorph::costmodel
