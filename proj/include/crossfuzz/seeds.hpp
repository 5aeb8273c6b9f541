#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "crossfuzz/align.hpp"
#include "crossfuzz/rng.hpp"
#include "crossfuzz/value.hpp"

namespace crossfuzz {

// How tensors in one tuple relate to each other.
enum class ShapeRule {
  Shared,       // every tensor takes the first tensor's shape
  Independent,  // each tensor sampled on its own
  Contract,     // rank 2; the second tensor is (k, n) for a first tensor (m, k)
};

std::string_view to_string(ShapeRule rule);
ShapeRule shape_rule_from_string(std::string_view text);

struct GenerationHints {
  int rank_min = 1;
  int rank_max = 4;
  int dim_max = 6;
  std::optional<DType> dtype;  // unset: f32 or f64 drawn per seed
  ShapeRule shape_rule = ShapeRule::Shared;
};

// Built-in hints for the reference op set (matmul contracts, angle is complex).
GenerationHints default_hints(std::string_view normalized_api);

struct ArgPlan {
  std::string name;
  AbstractType type = AbstractType::Unknown;
  ValueKind kind = ValueKind::Tensor;
  bool integral = false;  // Int parameters generated as rounded value scalars
};

struct SeedPlan {
  std::string group_id;
  std::vector<ArgPlan> args;
  GenerationHints hints;
  std::optional<std::size_t> anchor;  // first tensor argument, rank source for axes and shapes
};

class PlanError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Throws PlanError for canonical types that cannot be generated (String,
// Unknown) or for axis/shape parameters without a tensor to anchor them.
SeedPlan make_plan(std::string group_id, const AlignedSignature& signature, const GenerationHints& hints);

struct SeedTuple {
  std::string group_id;
  std::vector<ValueIR> args;
  std::uint64_t rng_seed = 0;
};

TensorValue gen_tensor(Rng& rng, int rank_min, int rank_max, DType dtype, int dim_max = 6);
ScalarValue gen_value_scalar(Rng& rng);
IndexValue gen_index_scalar(Rng& rng, int tensor_rank);  // throws std::invalid_argument for rank < 1
ShapeValue gen_shape(Rng& rng, int associated_rank, int dim_max = 6);
FlagValue gen_flag(Rng& rng);

// Value of flag number `position` in the `ordinal`-th enumerated combination,
// so consecutive ordinals walk every True/False assignment.
FlagValue enumerate_flag(std::uint64_t ordinal, std::size_t position);

struct EdgeCasePolicy {
  double element_rate = 0.0;  // per floating element
  double empty_rate = 0.0;    // chance the tuple's tensors become empty
  double repeat_rate = 0.0;   // chance a tensor gets repeated elements
};

// NaN, +Inf, -Inf, -0.0, smallest denormal, 1e38, -1e38 at the dtype's precision.
std::vector<double> edge_values(DType dtype);

SeedTuple inject_edge_cases(SeedTuple seed, Rng& rng, const EdgeCasePolicy& policy);

struct SeedOptions {
  EdgeCasePolicy edges;
  bool pairwise = true;  // enumerate flag/axis combinations when there are at most two
};

// Pure function of (plan, rng_seed, ordinal, options).
SeedTuple generate_seed(const SeedPlan& plan, std::uint64_t rng_seed, std::uint64_t ordinal,
                        const SeedOptions& options);

class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Kinds, dtypes, shapes and axis ranges against the plan.
void validate_seed(const SeedTuple& seed, const SeedPlan& plan);

nlohmann::json to_json(const SeedTuple& seed);
SeedTuple seed_from_json(const nlohmann::json& j);

}  // namespace crossfuzz
