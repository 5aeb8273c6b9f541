#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "crossfuzz/backend.hpp"
#include "crossfuzz/fuzz.hpp"
#include "crossfuzz/matcher.hpp"
#include "crossfuzz/seeds.hpp"

namespace crossfuzz {

enum class Strategy { VarianceGuided, Random };
std::string_view to_string(Strategy s);

struct CampaignConfig {
  std::size_t tests_per_group = 500;
  std::size_t stagnation_limit = 20;
  double min_improvement = 0.001;
  double inconsistency_threshold = 0.1;
  double initial_temperature = 0.1;
  double temperature_decay = 0.95;
  double temperature_floor = 1e-3;
  double noise_scale = 1.0;
  std::uint64_t master_seed = 0;
  std::chrono::milliseconds timeout = kDefaultCallTimeout;
  SeedOptions seeds{EdgeCasePolicy{0.05, 0.02, 0.05}, true};
  Strategy strategy = Strategy::VarianceGuided;
  // Cross-backend verification.
  std::size_t verify_seeds = 10;
  double verify_tolerance = 0.001;

  void validate() const;  // throws std::invalid_argument on non-positive thresholds
};

// Flat "key = value" text; '#' starts a comment. Keys mirror the field names
// (timeout in seconds, edge rates as edge_element_rate/edge_empty_rate/
// edge_repeat_rate, strategy as guided|random, seed as master_seed or seed).
CampaignConfig parse_config(std::istream& in, CampaignConfig base = {});
CampaignConfig load_config(const std::filesystem::path& path, CampaignConfig base = {});
void write_config(std::ostream& out, const CampaignConfig& config);

// One group member bound to the backend that executes it.
struct MemberBinding {
  std::size_t member = 0;  // index into ApiGroup::members
  Backend* backend = nullptr;
};

struct Finding {
  std::string group_id;
  OracleKind oracle = OracleKind::Inconsistency;
  SeedTuple trigger;
  std::vector<ExecutionOutcome> outcomes;
  std::optional<double> sigma2;  // Inconsistency only
  std::vector<std::string> diverging;
  std::string fingerprint;
  std::size_t evaluation = 0;  // 1-based index of the first triggering evaluation
  std::size_t occurrences = 1;
};

nlohmann::json to_json(const Finding& finding);
Finding finding_from_json(const nlohmann::json& j);

// (arg kinds, tensor dtypes, edge-case classes present), e.g. "tensor:f32,index_scalar|denormal,negzero".
std::string coarse_signature(const SeedTuple& seed);
std::string fingerprint(const std::string& group_id, OracleKind oracle, std::span<const std::string> diverging,
                        const SeedTuple& trigger);

// Everything observed for one input.
struct Evaluation {
  std::vector<ExecutionOutcome> outcomes;
  std::optional<VarianceResult> variance;  // over Ok outcomes, when >= 2
  std::optional<OracleHit> hit;            // Crash > NaN > Inconsistency
  double guidance_sigma2 = 0.0;            // what the search maximizes
};

Evaluation evaluate(const SeedTuple& seed, const ApiGroup& group, std::span<const MemberBinding> bindings,
                    const CampaignConfig& config);

struct CampaignResult {
  std::string group_id;
  std::vector<Finding> findings;  // deduplicated, in discovery order
  std::size_t evaluations = 0;
  std::optional<std::size_t> first_finding;  // evaluation index
  std::size_t restarts = 0;
  std::size_t accepted = 0;
  std::map<OracleKind, std::size_t> hits;  // every firing, before dedup
  bool aborted = false;
  std::string diagnostic;
};

// Seed stream for a group: independent of the order groups are processed in.
std::uint64_t group_seed(std::uint64_t master, const std::string& group_id);

// Stops after the first finding when `stop_at_first` is set (used to measure
// evaluations-to-first-finding).
CampaignResult run_campaign(const ApiGroup& group, const SeedPlan& plan, std::span<const MemberBinding> bindings,
                            const CampaignConfig& config, bool stop_at_first = false);

struct VerifyResult {
  std::string group_id;
  bool pass = false;
  double max_deviation = 0.0;
  std::size_t seeds_run = 0;
  std::vector<std::string> failures;
};

// Executes config.verify_seeds fresh inputs without edge cases; passes iff
// every backend returns Ok with equal structure and the largest element-wise
// absolute difference stays below config.verify_tolerance.
VerifyResult verify_group(const ApiGroup& group, const SeedPlan& plan, std::span<const MemberBinding> bindings,
                          const CampaignConfig& config);

double max_abs_deviation(std::span<const ExecutionOutcome> outcomes);

struct ReplayResult {
  Evaluation evaluation;
  bool reproduced = false;
};

// Validates the trigger against the plan (throws ValidationError) and
// re-executes it.
ReplayResult replay(const Finding& finding, const ApiGroup& group, const SeedPlan& plan,
                    std::span<const MemberBinding> bindings, const CampaignConfig& config);

nlohmann::json summary_json(const CampaignResult& result);

}  // namespace crossfuzz
