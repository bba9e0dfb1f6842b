#include "aclr/manifest.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>

#include "json.hpp"

#include "aclr/errors.hpp"

namespace aclr {

std::string fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path + " for hashing");
  std::uint64_t h = 14695981039346656037ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!in) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(h));
  return hex;
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
  nlohmann::ordered_json j;
  j["tool"] = kToolVersion;
  j["subcommand"] = manifest.subcommand;
  {
    char stamp[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    j["timestamp"] = stamp;  // informational; everything else is stable
  }
  j["seed"] = manifest.seed;
  j["config"] = nlohmann::ordered_json::parse(manifest.config_json);
  j["inputs"] = nlohmann::ordered_json::object();
  for (const auto& [file, hash] : manifest.inputs) j["inputs"][file] = hash;
  j["outputs"] = manifest.outputs;

  std::ofstream out(path);
  if (!out) throw LoadError("cannot open " + path + " for writing");
  out << j.dump(1) << "\n";
  if (!out) throw LoadError("failed writing " + path);
}

}  // namespace aclr
