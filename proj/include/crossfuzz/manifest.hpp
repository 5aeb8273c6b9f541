#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "crossfuzz/backend_spec.hpp"
#include "crossfuzz/campaign.hpp"

namespace crossfuzz {

struct InputDigest {
  std::string path;
  std::string digest;  // FNV-1a 64 over the file bytes, hex
};

struct BackendVersion {
  std::string id;
  std::string version;
};

// Written next to every run's outputs; the only place timestamps appear.
struct RunManifest {
  std::string command;
  std::string config;  // snapshot in config-file syntax
  std::vector<InputDigest> inputs;
  std::vector<BackendVersion> backends;
  std::uint64_t master_seed = 0;
  std::string started;
  std::string finished;
};

// Throws std::runtime_error when the file cannot be read.
std::string file_digest(const std::filesystem::path& path);
std::string utc_timestamp();

RunManifest make_manifest(std::string command, const CampaignConfig& config,
                          const std::vector<std::filesystem::path>& inputs, const BackendSet& backends);

nlohmann::json to_json(const RunManifest& manifest);

}  // namespace crossfuzz
