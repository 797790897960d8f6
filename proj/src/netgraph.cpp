#include "forgemorph/netgraph.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace forgemorph::netgraph {

using nlohmann::json;

const char* kind_name(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::Input: return "Input";
    case LayerKind::Conv: return "Conv";
    case LayerKind::MaxPool: return "MaxPool";
    case LayerKind::AvgPool: return "AvgPool";
    case LayerKind::FullyConnected: return "FullyConnected";
    case LayerKind::ResidualAdd: return "ResidualAdd";
    case LayerKind::Output: return "Output";
  }
  return "Unknown";
}

std::optional<LayerKind> kind_from_name(const std::string& name) noexcept {
  static const std::map<std::string, LayerKind> table = {
      {"Input", LayerKind::Input},
      {"Conv", LayerKind::Conv},
      {"MaxPool", LayerKind::MaxPool},
      {"AvgPool", LayerKind::AvgPool},
      {"FullyConnected", LayerKind::FullyConnected},
      {"ResidualAdd", LayerKind::ResidualAdd},
      {"Output", LayerKind::Output},
  };
  auto it = table.find(name);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

int NetworkGraph::index_of(const std::string& id) const {
  for (size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

const LayerSpec& NetworkGraph::layer(const std::string& id) const {
  int idx = index_of(id);
  if (idx < 0) raise(Errc::dangling_connection, "unknown layer id '" + id + "'");
  return layers[idx];
}

std::vector<int> NetworkGraph::producers_of(int layer_index) const {
  std::vector<int> result;
  const std::string& id = layers.at(layer_index).id;
  for (const auto& [src, dst] : connections) {
    if (dst == id) result.push_back(index_of(src));
  }
  return result;
}

std::vector<int> NetworkGraph::consumers_of(int layer_index) const {
  std::vector<int> result;
  const std::string& id = layers.at(layer_index).id;
  for (const auto& [src, dst] : connections) {
    if (src == id) result.push_back(index_of(dst));
  }
  return result;
}

std::vector<int> NetworkGraph::conv_indices() const {
  std::vector<int> result;
  for (size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].kind == LayerKind::Conv) result.push_back(static_cast<int>(i));
  }
  return result;
}

std::vector<int> NetworkGraph::fc_indices() const {
  std::vector<int> result;
  for (size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].kind == LayerKind::FullyConnected)
      result.push_back(static_cast<int>(i));
  }
  return result;
}

int NetworkGraph::input_index() const {
  for (size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].kind == LayerKind::Input) return static_cast<int>(i);
  }
  return -1;
}

Shape layer_output_shape(const LayerSpec& layer) {
  if (layer.kind != LayerKind::Conv && !layer.is_pool()) {
    raise(Errc::invalid_argument,
          "layer_output_shape expects a Conv or pool layer, got " +
              std::string(kind_name(layer.kind)));
  }
  if (layer.kernel < 1 || layer.stride < 1 || layer.padding < 0) {
    raise(Errc::invalid_argument, "incomplete conv/pool fields on '" + layer.id + "'");
  }
  const auto span = [&](int in) {
    return (in + 2 * layer.padding - layer.kernel) / layer.stride + 1;
  };
  const int out_h = span(layer.in.h);
  const int out_w = span(layer.in.w);
  if (layer.in.h + 2 * layer.padding < layer.kernel ||
      layer.in.w + 2 * layer.padding < layer.kernel || out_h < 1 || out_w < 1) {
    raise(Errc::degenerate_shape,
          "layer '" + layer.id + "' collapses to an empty output map");
  }
  const int out_c = layer.kind == LayerKind::Conv ? layer.filters : layer.in.c;
  return Shape{out_h, out_w, out_c};
}

namespace {

int require_int(const json& obj, const std::string& key, const std::string& id) {
  if (!obj.contains(key)) {
    raise(Errc::malformed_document, "layer '" + id + "' is missing '" + key + "'");
  }
  if (!obj[key].is_number_integer()) {
    raise(Errc::malformed_document, "layer '" + id + "': '" + key + "' must be an integer");
  }
  return obj[key].get<int>();
}

std::set<std::string> allowed_fields(LayerKind kind) {
  std::set<std::string> base = {"id", "kind"};
  switch (kind) {
    case LayerKind::Input:
      base.insert("in_shape");
      break;
    case LayerKind::Conv:
      base.insert({"filters", "kernel", "stride", "padding"});
      break;
    case LayerKind::MaxPool:
    case LayerKind::AvgPool:
      base.insert({"kernel", "stride", "padding"});
      break;
    case LayerKind::FullyConnected:
      base.insert({"fc_in", "fc_out"});
      break;
    case LayerKind::ResidualAdd:
    case LayerKind::Output:
      break;
  }
  return base;
}

LayerSpec parse_layer(const json& obj) {
  if (!obj.is_object()) raise(Errc::malformed_document, "layer entry must be an object");
  if (!obj.contains("id") || !obj["id"].is_string()) {
    raise(Errc::malformed_document, "layer entry is missing a string 'id'");
  }
  LayerSpec layer;
  layer.id = obj["id"].get<std::string>();
  if (!obj.contains("kind") || !obj["kind"].is_string()) {
    raise(Errc::malformed_document, "layer '" + layer.id + "' is missing 'kind'");
  }
  auto kind = kind_from_name(obj["kind"].get<std::string>());
  if (!kind) {
    raise(Errc::malformed_document,
          "layer '" + layer.id + "' has unknown kind '" +
              obj["kind"].get<std::string>() + "'");
  }
  layer.kind = *kind;

  const auto allowed = allowed_fields(layer.kind);
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) {
      raise(Errc::malformed_document,
            "layer '" + layer.id + "' (" + kind_name(layer.kind) +
                ") has unexpected field '" + it.key() + "'");
    }
  }

  switch (layer.kind) {
    case LayerKind::Input: {
      if (!obj.contains("in_shape") || !obj["in_shape"].is_array() ||
          obj["in_shape"].size() != 3) {
        raise(Errc::malformed_document,
              "Input layer '" + layer.id + "' needs in_shape [h, w, c]");
      }
      layer.in = Shape{obj["in_shape"][0].get<int>(), obj["in_shape"][1].get<int>(),
                       obj["in_shape"][2].get<int>()};
      if (layer.in.h < 1 || layer.in.w < 1 || layer.in.c < 1) {
        raise(Errc::malformed_document, "Input layer '" + layer.id + "' shape must be positive");
      }
      layer.out = layer.in;
      break;
    }
    case LayerKind::Conv: {
      layer.filters = require_int(obj, "filters", layer.id);
      layer.kernel = require_int(obj, "kernel", layer.id);
      layer.stride = obj.contains("stride") ? require_int(obj, "stride", layer.id) : 1;
      layer.padding = obj.contains("padding") ? require_int(obj, "padding", layer.id) : 0;
      if (layer.filters < 1 || layer.kernel < 1 || layer.stride < 1 || layer.padding < 0) {
        raise(Errc::malformed_document,
              "Conv layer '" + layer.id + "' has out-of-range hyperparameters");
      }
      break;
    }
    case LayerKind::MaxPool:
    case LayerKind::AvgPool: {
      layer.kernel = require_int(obj, "kernel", layer.id);
      layer.stride = obj.contains("stride") ? require_int(obj, "stride", layer.id) : layer.kernel;
      layer.padding = obj.contains("padding") ? require_int(obj, "padding", layer.id) : 0;
      if (layer.kernel < 1 || layer.stride < 1 || layer.padding < 0) {
        raise(Errc::malformed_document,
              "pool layer '" + layer.id + "' has out-of-range hyperparameters");
      }
      break;
    }
    case LayerKind::FullyConnected: {
      layer.fc_out = require_int(obj, "fc_out", layer.id);
      layer.fc_in = obj.contains("fc_in") ? require_int(obj, "fc_in", layer.id) : 0;
      if (layer.fc_out < 1) {
        raise(Errc::malformed_document, "FC layer '" + layer.id + "' needs fc_out >= 1");
      }
      break;
    }
    case LayerKind::ResidualAdd:
    case LayerKind::Output:
      break;
  }
  return layer;
}

/// Kahn topological sort, stable under document order so the canonical
/// serialization round-trips.
std::vector<int> topo_order(const NetworkGraph& graph) {
  const int n = static_cast<int>(graph.layers.size());
  std::vector<int> in_degree(n, 0);
  std::vector<std::vector<int>> adj(n);
  for (const auto& [src, dst] : graph.connections) {
    const int s = graph.index_of(src);
    const int d = graph.index_of(dst);
    adj[s].push_back(d);
    ++in_degree[d];
  }
  std::vector<int> ready;
  for (int i = 0; i < n; ++i) {
    if (in_degree[i] == 0) ready.push_back(i);
  }
  std::vector<int> order;
  order.reserve(n);
  while (!ready.empty()) {
    std::sort(ready.begin(), ready.end());
    const int node = ready.front();
    ready.erase(ready.begin());
    order.push_back(node);
    for (int next : adj[node]) {
      if (--in_degree[next] == 0) ready.push_back(next);
    }
  }
  if (static_cast<int>(order.size()) != n) {
    raise(Errc::cyclic_graph, "connection table contains a cycle");
  }
  return order;
}

void propagate_shapes(NetworkGraph& graph) {
  for (size_t i = 0; i < graph.layers.size(); ++i) {
    LayerSpec& layer = graph.layers[i];
    if (layer.kind == LayerKind::Input) continue;

    const auto producers = graph.producers_of(static_cast<int>(i));
    if (layer.kind == LayerKind::ResidualAdd) {
      const Shape a = graph.layers[producers[0]].out;
      const Shape b = graph.layers[producers[1]].out;
      if (!(a == b)) {
        std::ostringstream msg;
        msg << "ResidualAdd '" << layer.id << "' joins unequal shapes " << a.h
            << "x" << a.w << "x" << a.c << " vs " << b.h << "x" << b.w << "x"
            << b.c;
        raise(Errc::shape_mismatch, msg.str());
      }
      layer.in = a;
      layer.out = a;
      continue;
    }

    layer.in = graph.layers[producers[0]].out;
    switch (layer.kind) {
      case LayerKind::Conv:
      case LayerKind::MaxPool:
      case LayerKind::AvgPool:
        layer.out = layer_output_shape(layer);
        break;
      case LayerKind::FullyConnected: {
        const long long flat = layer.in.volume();
        if (layer.fc_in != 0 && layer.fc_in != flat) {
          raise(Errc::shape_mismatch,
                "FC layer '" + layer.id + "' declares fc_in " +
                    std::to_string(layer.fc_in) + " but receives " +
                    std::to_string(flat) + " values");
        }
        layer.fc_in = static_cast<int>(flat);
        layer.out = Shape{1, 1, layer.fc_out};
        break;
      }
      case LayerKind::Output:
        layer.out = layer.in;
        break;
      default:
        break;
    }
  }
}

}  // namespace

void validate(const NetworkGraph& graph) {
  std::set<std::string> seen_ids;
  for (const auto& layer : graph.layers) {
    if (!seen_ids.insert(layer.id).second) {
      raise(Errc::malformed_document, "duplicate layer id '" + layer.id + "'");
    }
  }
  for (const auto& [src, dst] : graph.connections) {
    if (graph.index_of(src) < 0) {
      raise(Errc::dangling_connection, "connection references unknown source '" + src + "'");
    }
    if (graph.index_of(dst) < 0) {
      raise(Errc::dangling_connection, "connection references unknown destination '" + dst + "'");
    }
  }

  // Diagnose cycles before degree problems; a back edge usually breaks
  // both and the cycle is the root cause.
  topo_order(graph);

  int inputs = 0;
  int outputs = 0;
  for (size_t i = 0; i < graph.layers.size(); ++i) {
    const LayerSpec& layer = graph.layers[i];
    const size_t in_count = graph.producers_of(static_cast<int>(i)).size();
    switch (layer.kind) {
      case LayerKind::Input:
        ++inputs;
        if (in_count != 0) {
          raise(Errc::malformed_document, "Input layer '" + layer.id + "' has incoming edges");
        }
        break;
      case LayerKind::ResidualAdd:
        if (in_count > 2) {
          raise(Errc::unsupported_topology,
                "ResidualAdd '" + layer.id + "' merges " + std::to_string(in_count) +
                    " branches; only two-path fusion is supported");
        }
        if (in_count != 2) {
          raise(Errc::dangling_connection,
                "ResidualAdd '" + layer.id + "' needs exactly two incoming edges");
        }
        break;
      default:
        if (layer.kind == LayerKind::Output) ++outputs;
        if (in_count != 1) {
          raise(Errc::dangling_connection,
                "layer '" + layer.id + "' must have exactly one incoming edge, found " +
                    std::to_string(in_count));
        }
        break;
    }
  }
  if (inputs != 1) {
    raise(Errc::malformed_document,
          "graph must have exactly one Input layer, found " + std::to_string(inputs));
  }
  if (outputs < 1) {
    raise(Errc::malformed_document, "graph needs at least one Output layer");
  }
}

NetworkGraph parse_network(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& err) {
    raise(Errc::malformed_document, err.what());
  }
  if (!doc.is_object()) raise(Errc::malformed_document, "document root must be an object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.key() != "name" && it.key() != "layers" && it.key() != "connections") {
      raise(Errc::malformed_document, "unexpected top-level field '" + it.key() + "'");
    }
  }
  if (!doc.contains("layers") || !doc["layers"].is_array()) {
    raise(Errc::malformed_document, "document needs a 'layers' array");
  }
  if (!doc.contains("connections") || !doc["connections"].is_array()) {
    raise(Errc::malformed_document, "document needs a 'connections' array");
  }

  NetworkGraph graph;
  graph.name = doc.value("name", std::string{});
  for (const auto& entry : doc["layers"]) {
    graph.layers.push_back(parse_layer(entry));
  }
  for (const auto& edge : doc["connections"]) {
    if (!edge.is_array() || edge.size() != 2 || !edge[0].is_string() || !edge[1].is_string()) {
      raise(Errc::malformed_document, "connections must be [src, dst] string pairs");
    }
    graph.connections.emplace_back(edge[0].get<std::string>(), edge[1].get<std::string>());
  }

  validate(graph);

  const auto order = topo_order(graph);
  std::vector<LayerSpec> sorted;
  sorted.reserve(graph.layers.size());
  for (int idx : order) sorted.push_back(graph.layers[idx]);
  graph.layers = std::move(sorted);

  propagate_shapes(graph);
  return graph;
}

NetworkGraph parse_network_file(const std::string& path) {
  std::ifstream stream(path);
  if (!stream) raise(Errc::io_error, "cannot open network file '" + path + "'");
  std::ostringstream buffer;
  buffer << stream.rdbuf();
  return parse_network(buffer.str());
}

std::string serialize(const NetworkGraph& graph) {
  json doc;
  doc["name"] = graph.name;
  doc["layers"] = json::array();
  for (const auto& layer : graph.layers) {
    json obj;
    obj["id"] = layer.id;
    obj["kind"] = kind_name(layer.kind);
    switch (layer.kind) {
      case LayerKind::Input:
        obj["in_shape"] = {layer.in.h, layer.in.w, layer.in.c};
        break;
      case LayerKind::Conv:
        obj["filters"] = layer.filters;
        obj["kernel"] = layer.kernel;
        obj["stride"] = layer.stride;
        obj["padding"] = layer.padding;
        break;
      case LayerKind::MaxPool:
      case LayerKind::AvgPool:
        obj["kernel"] = layer.kernel;
        obj["stride"] = layer.stride;
        obj["padding"] = layer.padding;
        break;
      case LayerKind::FullyConnected:
        obj["fc_in"] = layer.fc_in;
        obj["fc_out"] = layer.fc_out;
        break;
      default:
        break;
    }
    doc["layers"].push_back(obj);
  }
  doc["connections"] = json::array();
  for (const auto& [src, dst] : graph.connections) {
    doc["connections"].push_back({src, dst});
  }
  return doc.dump(2) + "\n";
}

NetworkGraph fuse_residual_blocks(NetworkGraph graph) {
  validate(graph);
  int block_counter = 0;
  for (size_t i = 0; i < graph.layers.size(); ++i) {
    if (graph.layers[i].kind != LayerKind::ResidualAdd) continue;
    const auto producers = graph.producers_of(static_cast<int>(i));
    if (producers.size() > 2) {
      raise(Errc::unsupported_topology,
            "convergence of more than two branches at '" + graph.layers[i].id + "'");
    }
    const std::string block_id = "res" + std::to_string(block_counter++);
    graph.layers[i].residual_block = block_id;

    // Walk both branches upstream until they meet at the fork layer; every
    // layer strictly between fork and merge joins the block.
    std::vector<std::set<int>> branch_members(2);
    for (int b = 0; b < 2; ++b) {
      int node = producers[b];
      while (node >= 0) {
        const auto up = graph.producers_of(node);
        branch_members[b].insert(node);
        if (up.empty()) break;
        node = up[0];
      }
    }
    for (int b = 0; b < 2; ++b) {
      int node = producers[b];
      while (node >= 0 && !branch_members[1 - b].count(node)) {
        graph.layers[node].residual_block = block_id;
        const auto up = graph.producers_of(node);
        if (up.empty()) break;
        node = up[0];
      }
    }
  }
  return graph;
}

DeviceProfile load_device_profile(const std::string& path) {
  std::ifstream stream(path);
  if (!stream) raise(Errc::io_error, "cannot open device profile '" + path + "'");
  json doc;
  try {
    doc = json::parse(stream);
  } catch (const json::parse_error& err) {
    raise(Errc::malformed_document, err.what());
  }
  DeviceProfile profile;
  try {
    profile.name = doc.value("name", std::string{});
    profile.dsp_max = doc.at("dsp_max").get<long long>();
    profile.lut_max = doc.at("lut_max").get<long long>();
    profile.bram_blocks_max = doc.at("bram_blocks_max").get<long long>();
    profile.clock_hz = doc.at("clock_hz").get<double>();
    profile.fp_rep = doc.value("fp_rep", 16);
  } catch (const json::exception& err) {
    raise(Errc::malformed_document, std::string("device profile: ") + err.what());
  }
  if (profile.dsp_max <= 0 || profile.lut_max <= 0 || profile.bram_blocks_max <= 0 ||
      profile.clock_hz <= 0) {
    raise(Errc::malformed_document, "device profile limits must be positive");
  }
  if (profile.fp_rep != 8 && profile.fp_rep != 16) {
    raise(Errc::malformed_document, "fp_rep must be 8 or 16");
  }
  return profile;
}

std::string serialize_device_profile(const DeviceProfile& profile) {
  json doc;
  doc["name"] = profile.name;
  doc["dsp_max"] = profile.dsp_max;
  doc["lut_max"] = profile.lut_max;
  doc["bram_blocks_max"] = profile.bram_blocks_max;
  doc["clock_hz"] = profile.clock_hz;
  doc["fp_rep"] = profile.fp_rep;
  return doc.dump(2) + "\n";
}

}  // namespace forgemorph::netgraph
