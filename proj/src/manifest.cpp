#include "crossfuzz/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iterator>
#include <sstream>

#include "crossfuzz/hash.hpp"

namespace crossfuzz {

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  Fnv1a h;
  char chunk[65536];
  while (in.read(chunk, sizeof chunk) || in.gcount() > 0) {
    h.update(std::string_view(chunk, static_cast<std::size_t>(in.gcount())));
  }
  return h.hex();
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest make_manifest(std::string command, const CampaignConfig& config,
                          const std::vector<std::filesystem::path>& inputs, const BackendSet& backends) {
  RunManifest m;
  m.command = std::move(command);
  std::ostringstream cfg;
  write_config(cfg, config);
  m.config = cfg.str();
  for (const auto& p : inputs) m.inputs.push_back({p.string(), file_digest(p)});
  for (const auto& b : backends) m.backends.push_back({b->id(), b->version()});
  m.master_seed = config.master_seed;
  m.started = utc_timestamp();
  return m;
}

nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& i : m.inputs) inputs.push_back({{"path", i.path}, {"digest", i.digest}});
  nlohmann::json backends = nlohmann::json::array();
  for (const auto& b : m.backends) backends.push_back({{"id", b.id}, {"version", b.version}});
  return {{"command", m.command}, {"config", m.config},       {"inputs", inputs},
          {"backends", backends}, {"master_seed", m.master_seed}, {"started", m.started},
          {"finished", m.finished}};
}

}  // namespace crossfuzz
