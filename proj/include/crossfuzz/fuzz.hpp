#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crossfuzz/backend.hpp"
#include "crossfuzz/rng.hpp"
#include "crossfuzz/seeds.hpp"

namespace crossfuzz {

// Cross-backend spread of one evaluated input. Outputs are flattened (all
// outputs concatenated, complex as re/im pairs) before comparing.
struct VarianceResult {
  std::vector<double> mean;
  std::vector<double> variance;  // population variance per element
  // Numeric outputs: max per-element variance. Integer-valued outputs: the
  // fraction of positions where the backends do not all agree.
  double sigma2 = 0.0;
  bool comparable = true;   // same output count, kinds and shapes everywhere
  bool integral = false;    // every output is index/boolean valued
  std::size_t mismatches = 0;  // positions where not all backends agree
};

// Requires >= 2 outcomes, all Ok. Elements equal across backends (NaN equal to
// NaN) contribute zero; mixed NaN or unequal infinities contribute +inf. A
// non-identical finite element never reports exactly zero variance.
VarianceResult compute_variance(std::span<const ExecutionOutcome> outcomes);

std::vector<double> flatten_outputs(const ExecutionOutcome& outcome);

struct DeviationVector {
  std::vector<std::string> backend_ids;
  std::vector<std::vector<double>> deviations;  // A_i(x) - mu(x); zero where mu is not finite

  // Index of the backend with the largest deviation norm.
  std::size_t dominant() const;
};

DeviationVector deviation_vector(std::span<const ExecutionOutcome> outcomes, const VarianceResult& variance);

// True when new_sigma2 improves by at least min_improvement, otherwise with
// probability exp(-(old - new) / temperature). Never accepts a regression at
// temperature <= 0.
bool accept(double old_sigma2, double new_sigma2, double temperature, Rng& rng, double min_improvement = 0.001);

// Geometric cooling applied per accepted step.
class Annealer {
 public:
  Annealer(double initial = 0.1, double decay = 0.95, double floor = 1e-3)
      : temperature_(initial), decay_(decay), floor_(floor) {}
  double temperature() const { return temperature_; }
  void cool() { temperature_ = std::max(temperature_ * decay_, floor_); }

 private:
  double temperature_;
  double decay_;
  double floor_;
};

enum class MutationClass { TensorNoise, FlagToggle, ScalarNudge, EdgeInjection, None };
std::string_view to_string(MutationClass m);

struct MutationOptions {
  double noise_scale = 1.0;
  // Restrict to one class (testing); None means pick among applicable ones.
  MutationClass only = MutationClass::None;
};

struct Mutation {
  SeedTuple seed;
  MutationClass applied = MutationClass::None;
};

// Applies exactly one mutation class, drawn from those applicable to the
// tuple. Tensor noise is standard normal * noise_scale * temperature, weighted
// per element by the dominant backend's normalized |deviation| when the
// deviation has one entry per tensor element. The result stays valid for `plan`.
Mutation mutate(const SeedTuple& seed, const SeedPlan& plan, const DeviationVector* deviation, Rng& rng,
                double temperature, const MutationOptions& options = {});

enum class OracleKind { Crash, NaN, Inconsistency };
std::string_view to_string(OracleKind kind);
OracleKind oracle_kind_from_string(std::string_view text);

struct OracleHit {
  OracleKind kind;
  std::vector<std::string> diverging;  // sorted backend ids
};

// Any Crash or Timeout outcome.
std::optional<OracleHit> oracle_crash(std::span<const ExecutionOutcome> outcomes);
// Some but not all Ok outcomes contain NaN.
std::optional<OracleHit> oracle_nan(std::span<const ExecutionOutcome> outcomes);
// Structural mismatch, any mismatch on integer-valued outputs, or sigma2 >= threshold.
bool oracle_inconsistency(const VarianceResult& variance, double threshold = 0.1);

// Backends whose outputs differ from the largest group of identical outputs.
std::vector<std::string> inconsistent_backends(std::span<const ExecutionOutcome> ok_outcomes);

}  // namespace crossfuzz
