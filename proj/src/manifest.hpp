#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fpo {

// Per-run provenance record written next to the artifacts it describes.
struct RunManifest {
  std::string config_hash_hex;
  std::string code_version;
  std::vector<std::uint64_t> seeds;
  std::string started_at;                       // ISO 8601 UTC
  std::map<std::string, std::string> outputs;   // logical name -> file name
};

std::string iso8601_utc_now();
void write_manifest(const RunManifest& m, const std::string& path);
RunManifest read_manifest(const std::string& path);

}  // namespace fpo
