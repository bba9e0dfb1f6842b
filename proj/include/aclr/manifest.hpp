#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace aclr {

inline constexpr const char* kToolVersion = "aclr 0.1.0";

/// FNV-1a over a file's bytes, rendered as 16 hex digits.
std::string fnv1a64_file(const std::string& path);

/// Everything needed to reproduce a run: the resolved configuration, the
/// hashes of every input file, the seed, and where outputs went. Written
/// before the run does any real work. The timestamp is informational and
/// excluded from reproducibility comparisons.
struct RunManifest {
  std::string subcommand;
  std::uint64_t seed = 0;
  std::string config_json;  // serialized flat object of resolved fields
  std::vector<std::pair<std::string, std::string>> inputs;  // path, hash
  std::vector<std::string> outputs;
};

void write_manifest(const std::string& path, const RunManifest& manifest);

}  // namespace aclr
