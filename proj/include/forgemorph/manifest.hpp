#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace forgemorph::manifest {

inline constexpr const char* kToolVersion = "forgemorph 0.1.0";

struct InputRef {
  std::string path;
  std::string fnv1a64;  // content hash, hex
};

/// Provenance record written beside every command output. Outputs are a
/// pure function of the hashed inputs and the seed; the timestamp honors
/// SOURCE_DATE_EPOCH for reproducible runs.
struct RunManifest {
  std::string command;
  std::vector<InputRef> inputs;
  std::uint64_t seed = 0;
  std::string tool_version = kToolVersion;
  std::string timestamp;  // ISO-8601 UTC
};

std::uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);
std::string hash_file(const std::string& path);

std::string iso8601_now();

RunManifest make_manifest(const std::string& command,
                          const std::vector<std::string>& input_paths,
                          std::uint64_t seed);

std::string serialize(const RunManifest& manifest);
void write_manifest(const RunManifest& manifest, const std::string& path);

}  // namespace forgemorph::manifest
