#include "manifest.hpp"

#include <ctime>
#include <fstream>

#include "json.hpp"

#include "common.hpp"

namespace fpo {

std::string iso8601_utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void write_manifest(const RunManifest& m, const std::string& path) {
  nlohmann::json j;
  j["config_hash"] = m.config_hash_hex;
  j["code_version"] = m.code_version;
  j["seeds"] = m.seeds;
  j["started_at"] = m.started_at;
  j["outputs"] = m.outputs;
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write manifest '" + path + "'");
  out << j.dump(2) << "\n";
  if (!out) fail("write failed for manifest '" + path + "'");
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open manifest '" + path + "'");
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) fail("manifest '" + path + "': invalid JSON");
  RunManifest m;
  m.config_hash_hex = j.at("config_hash").get<std::string>();
  m.code_version = j.at("code_version").get<std::string>();
  m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  m.started_at = j.at("started_at").get<std::string>();
  m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
  return m;
}

}  // namespace fpo
