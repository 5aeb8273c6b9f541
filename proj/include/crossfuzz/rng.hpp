#pragma once

#include <cstdint>
#include <optional>
#include <random>

namespace crossfuzz {

// Deterministic random stream. The distributions are implemented here rather
// than through <random> distribution classes so generated inputs are identical
// across standard library implementations (golden files depend on it).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return p >= 1.0 || (p > 0.0 && uniform() < p); }

  // Standard normal via Box-Muller.
  double normal();

  // Independent child stream; the parent state is not advanced.
  Rng split(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
  std::uint64_t seed_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Seed for the stream-th child of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 0x9e3779b97f4a7c15ULL));
}

}  // namespace crossfuzz
