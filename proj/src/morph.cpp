#include "forgemorph/morph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

namespace forgemorph::morph {

using netgraph::LayerKind;
using netgraph::LayerSpec;
using nlohmann::json;

namespace {

bool is_backbone(const LayerSpec& layer) {
  return layer.kind == LayerKind::Conv || layer.is_pool() ||
         layer.kind == LayerKind::ResidualAdd;
}

std::vector<int> backbone_indices(const NetworkGraph& graph) {
  std::vector<int> indices;
  for (size_t i = 0; i < graph.layers.size(); ++i) {
    if (is_backbone(graph.layers[i])) indices.push_back(static_cast<int>(i));
  }
  return indices;
}

/// Head parallelism: one FC PE per input channel, capped by the base
/// allocation's fc_pe.
int head_fc_pe(const PEAllocation& alloc, const Shape& head_input) {
  return std::max(1, std::min(alloc.fc_pe, head_input.c));
}

struct HeadCost {
  long long dsp = 0;
  long long lut = 0;
  long long registers = 0;
};

HeadCost head_resources(const LayerBlock& block, const PEAllocation& alloc) {
  const int pe = head_fc_pe(alloc, block.head_input);
  HeadCost cost;
  cost.dsp = 10ll * pe;
  cost.lut = 360ll * pe;
  cost.registers =
      costmodel::fc_resources(block.head_fc_out, pe, std::max(0, pe - 1)).registers;
  return cost;
}

/// Assembles Input -> blocks[0..k) -> head FC -> Output and re-parses so
/// shape propagation and validation run on the result.
NetworkGraph prefix_graph(const NetworkGraph& graph,
                          const std::vector<LayerBlock>& blocks, int k) {
  std::set<std::string> active_ids;
  for (int b = 0; b < k; ++b) {
    active_ids.insert(blocks[b].layer_ids.begin(), blocks[b].layer_ids.end());
  }
  const int input_idx = graph.input_index();
  const std::string input_id = graph.layers[input_idx].id;
  const std::string& tail_id = blocks[k - 1].layer_ids.back();

  NetworkGraph sub;
  sub.name = graph.name + "#depth" + std::to_string(k);
  for (const LayerSpec& layer : graph.layers) {
    if (layer.kind == LayerKind::Input || active_ids.count(layer.id)) {
      LayerSpec copy = layer;
      copy.residual_block.clear();
      sub.layers.push_back(copy);
    }
  }
  LayerSpec head;
  head.id = "__head" + std::to_string(k);
  head.kind = LayerKind::FullyConnected;
  head.fc_out = blocks[k - 1].head_fc_out;
  sub.layers.push_back(head);
  LayerSpec out;
  out.id = "__out";
  out.kind = LayerKind::Output;
  sub.layers.push_back(out);

  for (const auto& [src, dst] : graph.connections) {
    const bool src_in = src == input_id || active_ids.count(src);
    const bool dst_in = active_ids.count(dst);
    if (src_in && dst_in) sub.connections.emplace_back(src, dst);
  }
  sub.connections.emplace_back(tail_id, head.id);
  sub.connections.emplace_back(head.id, out.id);
  return netgraph::parse_network(netgraph::serialize(sub));
}

}  // namespace

std::vector<LayerBlock> partition_blocks(const NetworkGraph& graph,
                                         const std::vector<std::string>& boundaries,
                                         int class_count) {
  if (class_count < 1) raise(Errc::invalid_argument, "class_count must be >= 1");
  if (boundaries.empty()) raise(Errc::invalid_cut, "no boundaries given");
  const auto backbone = backbone_indices(graph);
  if (backbone.empty()) raise(Errc::empty_block, "graph has no costable backbone");

  std::set<std::string> boundary_set;
  for (const std::string& id : boundaries) {
    const int idx = graph.index_of(id);
    if (idx < 0 || !is_backbone(graph.layers[idx])) {
      raise(Errc::invalid_cut, "boundary '" + id + "' is not a backbone layer");
    }
    const LayerSpec& layer = graph.layers[idx];
    if (layer.kind == LayerKind::ResidualAdd) {
      raise(Errc::invalid_cut, "boundary '" + id + "' must follow a conv or pool layer");
    }
    if (!layer.residual_block.empty()) {
      raise(Errc::invalid_cut,
            "boundary '" + id + "' cuts inside residual block '" +
                layer.residual_block + "'");
    }
    if (!boundary_set.insert(id).second) {
      raise(Errc::empty_block, "duplicate boundary '" + id + "'");
    }
  }

  std::vector<LayerBlock> blocks;
  LayerBlock current;
  for (int idx : backbone) {
    const LayerSpec& layer = graph.layers[idx];
    current.layer_ids.push_back(layer.id);
    if (boundary_set.count(layer.id)) {
      current.block_id = "block" + std::to_string(blocks.size());
      current.head_input = layer.out;
      current.head_fc_out = class_count;
      blocks.push_back(std::move(current));
      current = {};
    }
  }
  if (!current.layer_ids.empty()) {
    // Trailing remainder closes the final block.
    const LayerSpec& tail = graph.layers[graph.index_of(current.layer_ids.back())];
    current.block_id = "block" + std::to_string(blocks.size());
    current.head_input = tail.out;
    current.head_fc_out = class_count;
    blocks.push_back(std::move(current));
  }
  for (const LayerBlock& block : blocks) {
    if (block.layer_ids.empty()) raise(Errc::empty_block, "empty layer block");
  }
  return blocks;
}

std::vector<std::string> default_boundaries(const NetworkGraph& graph) {
  std::vector<std::string> pools;
  std::vector<std::string> convs;
  for (const LayerSpec& layer : graph.layers) {
    if (!layer.residual_block.empty()) continue;
    if (layer.is_pool()) pools.push_back(layer.id);
    if (layer.kind == LayerKind::Conv) convs.push_back(layer.id);
  }
  return pools.empty() ? convs : pools;
}

MorphMode depth_mode(const NetworkGraph& graph,
                     const std::vector<LayerBlock>& blocks, int k,
                     const PEAllocation& alloc, const DeviceProfile& device,
                     const TermsOverrides& overrides) {
  if (blocks.empty()) raise(Errc::empty_blocks, "no layer blocks");
  if (k < 1 || k > static_cast<int>(blocks.size())) {
    raise(Errc::invalid_argument,
          "depth prefix " + std::to_string(k) + " outside [1, " +
              std::to_string(blocks.size()) + "]");
  }
  costmodel::validate_allocation(graph, alloc);

  // Restrict the allocation to convs inside the active prefix.
  std::set<std::string> active_ids;
  for (int b = 0; b < k; ++b) {
    active_ids.insert(blocks[b].layer_ids.begin(), blocks[b].layer_ids.end());
  }
  const auto convs = graph.conv_indices();
  PEAllocation active_alloc;
  std::vector<int> active_filters;
  for (size_t i = 0; i < convs.size(); ++i) {
    const LayerSpec& layer = graph.layers[convs[i]];
    if (active_ids.count(layer.id)) {
      active_alloc.conv_pe.push_back(alloc.conv_pe[i]);
      active_filters.push_back(layer.filters);
    }
  }
  active_alloc.fc_pe = head_fc_pe(alloc, blocks[k - 1].head_input);

  const NetworkGraph active_graph = prefix_graph(graph, blocks, k);
  MorphMode mode;
  mode.kind = MorphKind::DepthPrefix;
  mode.name = "depth_" + std::to_string(k);
  mode.depth_k = k;
  mode.active_alloc = active_alloc;
  mode.active_filters = active_filters;
  mode.active = costmodel::estimate(active_graph, active_alloc, device, overrides);

  // Resident footprint: the full synthesized design plus every gated
  // head; it does not change with the selected mode.
  const int total = static_cast<int>(blocks.size());
  const NetworkGraph full_graph = prefix_graph(graph, blocks, total);
  PEAllocation full_alloc = alloc;
  full_alloc.fc_pe = head_fc_pe(alloc, blocks[total - 1].head_input);
  mode.resident = costmodel::estimate(full_graph, full_alloc, device, overrides);
  for (int b = 0; b + 1 < total; ++b) {
    const HeadCost head = head_resources(blocks[b], alloc);
    mode.resident.dsp += head.dsp;
    mode.resident.lut += head.lut;
    mode.resident.registers += head.registers;
  }
  mode.switch_latency_s = mode.active.latency_s;
  return mode;
}

MorphMode width_mode(const NetworkGraph& graph, double fraction,
                     const PEAllocation& alloc, const DeviceProfile& device,
                     const TermsOverrides& overrides) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    raise(Errc::invalid_argument, "width fraction must lie in (0, 1]");
  }
  costmodel::validate_allocation(graph, alloc);

  NetworkGraph narrowed = graph;
  PEAllocation active_alloc;
  std::vector<int> active_filters;
  size_t ordinal = 0;
  for (LayerSpec& layer : narrowed.layers) {
    if (layer.kind != LayerKind::Conv) continue;
    const int narrowed_filters =
        static_cast<int>(std::floor(fraction * layer.filters));
    if (narrowed_filters < 1) {
      raise(Errc::too_narrow,
            "layer '" + layer.id + "' collapses below one active filter");
    }
    layer.filters = narrowed_filters;
    active_filters.push_back(narrowed_filters);
    active_alloc.conv_pe.push_back(
        std::min(alloc.conv_pe[ordinal], narrowed_filters));
    ++ordinal;
  }
  // Re-propagate shapes through the narrowed graph.
  for (LayerSpec& layer : narrowed.layers) {
    if (layer.kind == LayerKind::FullyConnected) layer.fc_in = 0;
  }
  narrowed = netgraph::parse_network(netgraph::serialize(narrowed));
  const int fc_ub = costmodel::fc_pe_upper_bound(narrowed);
  active_alloc.fc_pe = fc_ub > 0 ? std::max(1, std::min(alloc.fc_pe, fc_ub)) : 1;

  MorphMode mode;
  mode.kind = MorphKind::WidthFraction;
  std::ostringstream name;
  name << "width_" << fraction;
  mode.name = name.str();
  mode.width_fraction = fraction;
  mode.active_alloc = active_alloc;
  mode.active_filters = active_filters;
  mode.active = costmodel::estimate(narrowed, active_alloc, device, overrides);
  mode.resident = costmodel::estimate(graph, alloc, device, overrides);
  mode.switch_latency_s = mode.active.latency_s;
  return mode;
}

PowerModel fit_power_model(std::span<const PowerSample> samples) {
  if (samples.size() < 4) {
    raise(Errc::invalid_argument, "power fit needs at least 4 samples");
  }
  const int n = static_cast<int>(samples.size());
  Eigen::MatrixXd design(n, 4);
  Eigen::VectorXd measured(n);
  for (int i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = samples[i].dsp;
    design(i, 2) = samples[i].lut;
    design(i, 3) = samples[i].bram;
    measured(i) = samples[i].measured_mw;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < 4) {
    raise(Errc::degenerate_fit, "design matrix is rank-deficient");
  }
  const Eigen::VectorXd beta = qr.solve(measured);

  PowerModel model;
  model.base_mw = beta(0);
  model.coef_dsp = beta(1);
  model.coef_lut = beta(2);
  model.coef_bram = beta(3);
  // Residuals follow the same arithmetic path as predict_power so the
  // reported RMS is consistent with later predictions.
  double squared_sum = 0;
  for (const PowerSample& sample : samples) {
    const double predicted = model.base_mw + model.coef_dsp * sample.dsp +
                             model.coef_lut * sample.lut +
                             model.coef_bram * sample.bram;
    squared_sum += (predicted - sample.measured_mw) * (predicted - sample.measured_mw);
  }
  model.fit_residual = std::sqrt(squared_sum / n);
  return model;
}

double predict_power(const PowerModel& model, const CostEstimate& est) {
  const double raw = model.base_mw + model.coef_dsp * static_cast<double>(est.dsp) +
                     model.coef_lut * static_cast<double>(est.lut) +
                     model.coef_bram * static_cast<double>(est.bram);
  return std::max(0.0, raw);
}

CostEstimate with_power(const PowerModel& model, CostEstimate est) {
  est.power_mw = predict_power(model, est);
  return est;
}

std::vector<PowerSample> load_power_csv(const std::string& path) {
  std::ifstream stream(path);
  if (!stream) raise(Errc::io_error, "cannot open power samples '" + path + "'");
  std::string line;
  if (!std::getline(stream, line) || line != "dsp,lut,bram,measured_mw") {
    raise(Errc::malformed_document,
          "power CSV must start with header 'dsp,lut,bram,measured_mw'");
  }
  std::vector<PowerSample> samples;
  while (std::getline(stream, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    PowerSample sample;
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(row >> sample.dsp >> c1 >> sample.lut >> c2 >> sample.bram >> c3 >>
          sample.measured_mw) ||
        c1 != ',' || c2 != ',' || c3 != ',') {
      raise(Errc::malformed_document, "bad power CSV row: " + line);
    }
    samples.push_back(sample);
  }
  return samples;
}

PowerModel load_power_model(const std::string& path) {
  std::ifstream stream(path);
  if (!stream) raise(Errc::io_error, "cannot open power model '" + path + "'");
  json doc;
  try {
    doc = json::parse(stream);
  } catch (const json::parse_error& err) {
    raise(Errc::malformed_document, err.what());
  }
  PowerModel model;
  try {
    model.base_mw = doc.at("base_mw").get<double>();
    model.coef_dsp = doc.at("coef_dsp").get<double>();
    model.coef_lut = doc.at("coef_lut").get<double>();
    model.coef_bram = doc.at("coef_bram").get<double>();
    model.fit_residual = doc.value("fit_residual", 0.0);
  } catch (const json::exception& err) {
    raise(Errc::malformed_document, std::string("power model: ") + err.what());
  }
  return model;
}

std::string serialize_power_model(const PowerModel& model) {
  json doc;
  doc["base_mw"] = model.base_mw;
  doc["coef_dsp"] = model.coef_dsp;
  doc["coef_lut"] = model.coef_lut;
  doc["coef_bram"] = model.coef_bram;
  doc["fit_residual"] = model.fit_residual;
  return doc.dump(2) + "\n";
}

void ModeRegistry::put(const std::string& name, const MorphMode& mode) {
  std::unique_lock lock(mutex_);
  modes_[name] = mode;
}

std::optional<MorphMode> ModeRegistry::get(const std::string& name) const {
  std::shared_lock lock(mutex_);
  auto it = modes_.find(name);
  if (it == modes_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> ModeRegistry::names() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> result;
  result.reserve(modes_.size());
  for (const auto& [name, mode] : modes_) result.push_back(name);
  return result;
}

}  // namespace forgemorph::morph
