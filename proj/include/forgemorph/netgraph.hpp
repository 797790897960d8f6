#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "forgemorph/errors.hpp"

namespace forgemorph::netgraph {

enum class LayerKind {
  Input,
  Conv,
  MaxPool,
  AvgPool,
  FullyConnected,
  ResidualAdd,
  Output,
};

const char* kind_name(LayerKind kind) noexcept;
std::optional<LayerKind> kind_from_name(const std::string& name) noexcept;

struct Shape {
  int h = 0;
  int w = 0;
  int c = 0;

  bool operator==(const Shape&) const = default;
  long long volume() const { return 1ll * h * w * c; }
};

/// One layer of a parsed network. Hyperparameters only; weights are never
/// stored. Conv/pool fields stay zero for FC layers and vice versa.
struct LayerSpec {
  std::string id;
  LayerKind kind = LayerKind::Input;

  // Conv / pool hyperparameters.
  int filters = 0;  // N, conv only
  int kernel = 0;   // K, square
  int stride = 1;   // S
  int padding = 0;  // P, pixels

  // Fully connected hyperparameters.
  int fc_in = 0;
  int fc_out = 0;

  // Filled by shape propagation (given explicitly on the Input layer).
  Shape in;
  Shape out;

  // Residual-fusion annotation; empty outside fused blocks.
  std::string residual_block;

  bool is_pool() const {
    return kind == LayerKind::MaxPool || kind == LayerKind::AvgPool;
  }
  bool is_costable() const {
    return kind == LayerKind::Conv || is_pool() ||
           kind == LayerKind::FullyConnected || kind == LayerKind::ResidualAdd;
  }
};

/// Validated CNN description: layers in topological order plus the
/// connection table. Value type; safe to share across threads.
struct NetworkGraph {
  std::string name;
  std::vector<LayerSpec> layers;
  std::vector<std::pair<std::string, std::string>> connections;

  int index_of(const std::string& id) const;          // -1 when absent
  const LayerSpec& layer(const std::string& id) const;
  std::vector<int> producers_of(int layer_index) const;
  std::vector<int> consumers_of(int layer_index) const;
  std::vector<int> conv_indices() const;
  std::vector<int> fc_indices() const;
  int input_index() const;
};

struct DeviceProfile {
  std::string name;
  long long dsp_max = 0;
  long long lut_max = 0;
  long long bram_blocks_max = 0;  // 18 Kb blocks
  double clock_hz = 0;
  int fp_rep = 16;  // bits, 8 or 16
};

/// Shape arithmetic for a single conv/pool layer:
///   out = floor((in + 2P - K) / S) + 1
/// Throws DegenerateShape when an output dimension collapses below 1.
Shape layer_output_shape(const LayerSpec& layer);

/// Parses a JSON network document, propagates shapes and returns a graph
/// with layers topologically ordered. Unknown JSON fields are rejected.
NetworkGraph parse_network(const std::string& json_text);
NetworkGraph parse_network_file(const std::string& path);

/// Canonical JSON form; parse(serialize(g)) == g.
std::string serialize(const NetworkGraph& graph);

/// Re-validates all structural invariants. parse_network calls this; it is
/// exposed for graphs assembled programmatically.
void validate(const NetworkGraph& graph);

/// Attaches residual block annotations at every two-input convergence
/// point. Convergence of more than two branches is rejected.
NetworkGraph fuse_residual_blocks(NetworkGraph graph);

DeviceProfile load_device_profile(const std::string& path);
std::string serialize_device_profile(const DeviceProfile& profile);

}  // namespace forgemorph::netgraph
