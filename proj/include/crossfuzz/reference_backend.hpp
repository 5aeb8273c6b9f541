#pragma once

#include <string>
#include <string_view>

#include "crossfuzz/backend.hpp"

namespace crossfuzz {

// Two in-process implementations of a small op set that agree everywhere
// except on two seeded semantics:
//   Stable           exact-comparison stable argsort; angle propagates NaN.
//   FlushTiesToZero  denormals flushed to zero before sort comparison, so they
//                    tie with zeros; angle(NaN + NaN i) returns 0.0.
enum class ReferenceVariant { Stable, FlushTiesToZero };

std::string_view to_string(ReferenceVariant variant);
ReferenceVariant reference_variant_from_string(std::string_view text);  // "stable" | "ftz"

// Ops: argsort(input, axis), add(input, other), mul(input, other),
// matmul(input, other), relu(input), softmax(input, axis), mean(input, axis),
// sum(input, axis), angle(input), clamp(input, min, max). Any qualified name
// whose last segment is one of these resolves to it. Arguments are picked up
// by kind (tensors, then axis, then value scalars, in order), so aligned
// member orders that permute kinds still bind correctly.
class ReferenceBackend final : public Backend {
 public:
  ReferenceBackend(std::string id, ReferenceVariant variant) : id_(std::move(id)), variant_(variant) {}

  const std::string& id() const override { return id_; }
  std::vector<std::string> manifest() const override;
  bool supports(std::string_view api) const override;
  std::string version() const override;
  ExecutionOutcome invoke(std::string_view api, std::span<const ValueIR> args,
                          std::chrono::milliseconds timeout) override;

  ReferenceVariant variant() const { return variant_; }

 private:
  std::string id_;
  ReferenceVariant variant_;
};

std::unique_ptr<Backend> reference_backend(ReferenceVariant variant, std::string id = "");

}  // namespace crossfuzz
