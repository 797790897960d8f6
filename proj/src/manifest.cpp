#include "forgemorph/manifest.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "forgemorph/errors.hpp"

namespace forgemorph::manifest {

using nlohmann::json;

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::string fnv1a64_hex(const std::string& bytes) {
  std::ostringstream out;
  out << std::hex << fnv1a64(bytes);
  return out.str();
}

std::string hash_file(const std::string& path) {
  std::ifstream stream(path, std::ios::binary);
  if (!stream) raise(Errc::io_error, "cannot hash missing file '" + path + "'");
  std::ostringstream buffer;
  buffer << stream.rdbuf();
  return fnv1a64_hex(buffer.str());
}

std::string iso8601_now() {
  std::time_t now = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    now = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  }
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buffer[32];
  std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buffer;
}

RunManifest make_manifest(const std::string& command,
                          const std::vector<std::string>& input_paths,
                          std::uint64_t seed) {
  RunManifest manifest;
  manifest.command = command;
  for (const std::string& path : input_paths) {
    manifest.inputs.push_back({path, hash_file(path)});
  }
  manifest.seed = seed;
  manifest.timestamp = iso8601_now();
  return manifest;
}

std::string serialize(const RunManifest& manifest) {
  json doc;
  doc["command"] = manifest.command;
  doc["inputs"] = json::array();
  for (const InputRef& input : manifest.inputs) {
    doc["inputs"].push_back({{"path", input.path}, {"fnv1a64", input.fnv1a64}});
  }
  doc["seed"] = manifest.seed;
  doc["tool_version"] = manifest.tool_version;
  doc["timestamp"] = manifest.timestamp;
  return doc.dump(2) + "\n";
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
  std::ofstream stream(path, std::ios::binary | std::ios::trunc);
  if (!stream) raise(Errc::io_error, "cannot write manifest '" + path + "'");
  stream << serialize(manifest);
}

}  // namespace forgemorph::manifest
