#pragma once

#include <chrono>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crossfuzz/value.hpp"

namespace crossfuzz {

enum class CallStatus { Ok, Error, Crash, Timeout };
std::string_view to_string(CallStatus status);
CallStatus call_status_from_string(std::string_view text);

struct ExecutionOutcome {
  std::string backend_id;
  CallStatus status = CallStatus::Error;
  std::vector<ValueIR> outputs;  // only for Ok
  std::string error_text;
  bool nan_present = false;  // only computed for Ok
  double duration_ms = 0.0;
};

// A library implementation reachable by qualified API name.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual const std::string& id() const = 0;
  virtual std::vector<std::string> manifest() const = 0;
  virtual bool supports(std::string_view api) const = 0;
  // Free-form version string (handshake data for workers).
  virtual std::string version() const = 0;

  // Implementations may throw; use crossfuzz::call() for the total wrapper.
  virtual ExecutionOutcome invoke(std::string_view api, std::span<const ValueIR> args,
                                  std::chrono::milliseconds timeout) = 0;
};

inline constexpr std::chrono::milliseconds kDefaultCallTimeout{10'000};
inline constexpr std::size_t kMaxOutputElements = 1'000'000;

// Total: returns exactly one outcome and never throws. Unsupported APIs and
// oversized outputs are Error; nan_present and duration are filled in here.
ExecutionOutcome call(Backend& backend, std::string_view api, std::span<const ValueIR> args,
                      std::chrono::milliseconds timeout = kDefaultCallTimeout);

nlohmann::json to_json(const ExecutionOutcome& outcome);  // duration omitted
ExecutionOutcome outcome_from_json(const nlohmann::json& j);

}  // namespace crossfuzz
