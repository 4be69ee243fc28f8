#include "records.hpp"

#include <fstream>

#include "json.hpp"

#include "common.hpp"

namespace fpo {

using nlohmann::json;

namespace {

json read_line_json(const std::string& line, int lineno,
                    const std::string& path) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded())
    fail("record file '" + path + "' line " + std::to_string(lineno) +
         ": invalid JSON");
  return j;
}

}  // namespace

double DemoSet::success_rate() const {
  if (episodes.empty()) return 0.0;
  std::size_t n = 0;
  for (const auto& e : episodes) n += e.success ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(episodes.size());
}

std::size_t DemoSet::total_steps() const {
  std::size_t n = 0;
  for (const auto& e : episodes) n += e.steps.size();
  return n;
}

void save_demos(const DemoSet& demos, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write demo file '" + path + "'");
  json header;
  header["kind"] = "demo_set";
  header["env"] = env_kind_name(demos.env);
  header["state_dim"] = demos.state_dim;
  header["action_dim"] = demos.action_dim;
  header["chunk_len"] = demos.chunk_len;
  header["config_hash"] = hex64(demos.config_hash);
  header["episodes"] = demos.episodes.size();
  out << header.dump() << "\n";
  for (const auto& ep : demos.episodes) {
    json j;
    j["kind"] = "demo_episode";
    j["success"] = ep.success;
    j["ticks"] = ep.ticks;
    json steps = json::array();
    for (const auto& st : ep.steps) {
      json s;
      s["s"] = st.s;
      s["chunk"] = st.chunk;
      steps.push_back(std::move(s));
    }
    j["steps"] = std::move(steps);
    out << j.dump() << "\n";
  }
  if (!out) fail("write failed for demo file '" + path + "'");
}

DemoSet load_demos(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open demo file '" + path + "'");
  DemoSet demos;
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  std::size_t declared = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = read_line_json(line, lineno, path);
    if (!header_seen) {
      if (j.value("kind", "") != "demo_set")
        fail("demo file '" + path + "': first record must be a demo_set header");
      demos.env = parse_env_kind(j.at("env").get<std::string>());
      demos.state_dim = j.at("state_dim").get<int>();
      demos.action_dim = j.at("action_dim").get<int>();
      demos.chunk_len = j.at("chunk_len").get<int>();
      demos.config_hash =
          std::stoull(j.value("config_hash", "0"), nullptr, 16);
      declared = j.at("episodes").get<std::size_t>();
      header_seen = true;
      continue;
    }
    if (j.value("kind", "") != "demo_episode")
      fail("demo file '" + path + "' line " + std::to_string(lineno) +
           ": expected demo_episode record");
    DemoEpisode ep;
    ep.success = j.at("success").get<bool>();
    ep.ticks = j.at("ticks").get<int>();
    for (const auto& s : j.at("steps")) {
      DemoStep st;
      st.s = s.at("s").get<Vec>();
      st.chunk = s.at("chunk").get<Vec>();
      if (static_cast<int>(st.chunk.size()) !=
          demos.chunk_len * demos.action_dim)
        fail("demo file '" + path + "' line " + std::to_string(lineno) +
             ": chunk length mismatch");
      ep.steps.push_back(std::move(st));
    }
    demos.episodes.push_back(std::move(ep));
  }
  if (!header_seen) fail("demo file '" + path + "': empty file");
  if (declared != demos.episodes.size())
    fail("demo file '" + path + "': header declares " +
         std::to_string(declared) + " episodes, found " +
         std::to_string(demos.episodes.size()));
  return demos;
}

void save_latents(const std::vector<LatentRecord>& records,
                  const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write latent file '" + path + "'");
  json header;
  header["kind"] = "latent_set";
  header["records"] = records.size();
  out << header.dump() << "\n";
  for (const auto& r : records) {
    json j;
    j["kind"] = "latent";
    j["run"] = r.run_id;
    j["phase"] = r.phase;
    j["success"] = r.success;
    j["x"] = r.x;
    out << j.dump() << "\n";
  }
  if (!out) fail("write failed for latent file '" + path + "'");
}

std::vector<LatentRecord> load_latents(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open latent file '" + path + "'");
  std::vector<LatentRecord> records;
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = read_line_json(line, lineno, path);
    if (!header_seen) {
      if (j.value("kind", "") != "latent_set")
        fail("latent file '" + path + "': first record must be a latent_set header");
      header_seen = true;
      continue;
    }
    LatentRecord r;
    r.run_id = j.at("run").get<std::string>();
    r.phase = j.at("phase").get<std::string>();
    r.success = j.at("success").get<bool>();
    r.x = j.at("x").get<Vec>();
    records.push_back(std::move(r));
  }
  if (!header_seen) fail("latent file '" + path + "': empty file");
  return records;
}

void dump_buffer(const TrajectoryBuffer& buffer, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write buffer dump '" + path + "'");
  json header;
  header["kind"] = "buffer_dump";
  header["rollouts"] = buffer.rollout_count();
  header["transitions"] = buffer.size();
  out << header.dump() << "\n";
  for (const auto& rollout : buffer.rollouts()) {
    for (const auto& t : rollout) {
      json j;
      j["kind"] = "transition";
      j["rollout"] = t.rollout_id;
      j["step"] = t.step_index;
      j["s"] = t.s;
      j["x"] = t.x;
      j["a"] = t.a;
      j["r"] = t.r;
      j["s_next"] = t.s_next;
      j["done"] = t.done;
      j["truncated"] = t.truncated;
      j["l_init"] = t.cfm_loss_init;
      out << j.dump() << "\n";
    }
  }
  if (!out) fail("write failed for buffer dump '" + path + "'");
}

}  // namespace fpo
