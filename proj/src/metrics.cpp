#include "metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "common.hpp"

namespace fpo {

namespace {

constexpr const char* kHeader =
    "kind\tenv_ticks\tupdate_index\tsuccess_rate\tmean_return\tmean_ep_len\t"
    "actor_loss\tcritic_loss\tmean_rho\tclip_fraction\tmean_dloss\t"
    "policy_entropy\tadv_mean\tadv_std";
constexpr int kColumns = 14;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt_double(*v) : "-";
}

double parse_cell_double(const std::string& cell, int lineno) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument("junk");
    return d;
  } catch (const std::exception&) {
    fail("metrics line " + std::to_string(lineno) + ": bad number '" + cell + "'");
  }
}

std::int64_t parse_cell_i64(const std::string& cell, int lineno) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument("junk");
    return v;
  } catch (const std::exception&) {
    fail("metrics line " + std::to_string(lineno) + ": bad integer '" + cell + "'");
  }
}

std::optional<double> parse_cell_opt(const std::string& cell, int lineno) {
  if (cell == "-") return std::nullopt;
  return parse_cell_double(cell, lineno);
}

bool finite_opt(const std::optional<double>& v) {
  return !v || std::isfinite(*v);
}

}  // namespace

bool operator==(const EvalPoint& a, const EvalPoint& b) {
  return a.env_ticks == b.env_ticks && a.success_rate == b.success_rate &&
         a.mean_return == b.mean_return && a.mean_ep_len == b.mean_ep_len;
}

bool operator==(const UpdatePoint& a, const UpdatePoint& b) {
  return a.env_ticks == b.env_ticks && a.update_index == b.update_index &&
         a.actor_loss == b.actor_loss && a.critic_loss == b.critic_loss &&
         a.mean_rho == b.mean_rho && a.clip_fraction == b.clip_fraction &&
         a.mean_dloss == b.mean_dloss &&
         a.policy_entropy == b.policy_entropy && a.adv_mean == b.adv_mean &&
         a.adv_std == b.adv_std;
}

bool operator==(const RunMetrics& a, const RunMetrics& b) {
  return a.config_hash == b.config_hash && a.evals == b.evals &&
         a.updates == b.updates;
}

void check_metrics(const RunMetrics& m) {
  for (std::size_t i = 0; i < m.evals.size(); ++i) {
    const auto& e = m.evals[i];
    if (i > 0 && e.env_ticks <= m.evals[i - 1].env_ticks)
      fail("metrics: eval rows not strictly increasing in env_ticks");
    if (!std::isfinite(e.success_rate) || !std::isfinite(e.mean_return) ||
        !std::isfinite(e.mean_ep_len))
      fail("metrics: non-finite eval row");
  }
  for (std::size_t i = 0; i < m.updates.size(); ++i) {
    const auto& u = m.updates[i];
    if (i > 0 && u.env_ticks <= m.updates[i - 1].env_ticks)
      fail("metrics: update rows not strictly increasing in env_ticks");
    if (!std::isfinite(u.actor_loss) || !std::isfinite(u.critic_loss) ||
        !std::isfinite(u.adv_mean) || !std::isfinite(u.adv_std) ||
        !finite_opt(u.mean_rho) || !finite_opt(u.clip_fraction) ||
        !finite_opt(u.mean_dloss) || !finite_opt(u.policy_entropy))
      fail("metrics: non-finite update row");
  }
}

void write_metrics(const RunMetrics& m, const std::string& path) {
  check_metrics(m);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write metrics file '" + path + "'");
  out << "# fpo metrics v1\n";
  out << "# config_hash=" << hex64(m.config_hash) << "\n";
  out << kHeader << "\n";
  for (const auto& e : m.evals) {
    out << "eval\t" << e.env_ticks << "\t-\t" << fmt_double(e.success_rate)
        << "\t" << fmt_double(e.mean_return) << "\t"
        << fmt_double(e.mean_ep_len) << "\t-\t-\t-\t-\t-\t-\t-\t-\n";
  }
  for (const auto& u : m.updates) {
    out << "update\t" << u.env_ticks << "\t" << u.update_index
        << "\t-\t-\t-\t" << fmt_double(u.actor_loss) << "\t"
        << fmt_double(u.critic_loss) << "\t" << fmt_opt(u.mean_rho) << "\t"
        << fmt_opt(u.clip_fraction) << "\t" << fmt_opt(u.mean_dloss) << "\t"
        << fmt_opt(u.policy_entropy) << "\t" << fmt_double(u.adv_mean) << "\t"
        << fmt_double(u.adv_std) << "\n";
  }
  if (!out) fail("write failed for metrics file '" + path + "'");
}

RunMetrics read_metrics(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open metrics file '" + path + "'");
  RunMetrics m;
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string tag = "# config_hash=";
      if (line.rfind(tag, 0) == 0) {
        const std::string hexs = line.substr(tag.size());
        m.config_hash = std::stoull(hexs, nullptr, 16);
      }
      continue;
    }
    if (!header_seen) {
      if (line != kHeader)
        fail("metrics line " + std::to_string(lineno) + ": unexpected header");
      header_seen = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, '\t')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) != kColumns)
      fail("metrics line " + std::to_string(lineno) + ": expected " +
           std::to_string(kColumns) + " columns, got " +
           std::to_string(cells.size()));
    if (cells[0] == "eval") {
      EvalPoint e;
      e.env_ticks = parse_cell_i64(cells[1], lineno);
      e.success_rate = parse_cell_double(cells[3], lineno);
      e.mean_return = parse_cell_double(cells[4], lineno);
      e.mean_ep_len = parse_cell_double(cells[5], lineno);
      m.evals.push_back(e);
    } else if (cells[0] == "update") {
      UpdatePoint u;
      u.env_ticks = parse_cell_i64(cells[1], lineno);
      u.update_index = parse_cell_i64(cells[2], lineno);
      u.actor_loss = parse_cell_double(cells[6], lineno);
      u.critic_loss = parse_cell_double(cells[7], lineno);
      u.mean_rho = parse_cell_opt(cells[8], lineno);
      u.clip_fraction = parse_cell_opt(cells[9], lineno);
      u.mean_dloss = parse_cell_opt(cells[10], lineno);
      u.policy_entropy = parse_cell_opt(cells[11], lineno);
      u.adv_mean = parse_cell_double(cells[12], lineno);
      u.adv_std = parse_cell_double(cells[13], lineno);
      m.updates.push_back(u);
    } else {
      fail("metrics line " + std::to_string(lineno) + ": unknown kind '" +
           cells[0] + "'");
    }
  }
  if (!header_seen) fail("metrics file '" + path + "': missing header");
  check_metrics(m);
  return m;
}

}  // namespace fpo
