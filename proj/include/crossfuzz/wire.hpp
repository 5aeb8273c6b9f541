#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "crossfuzz/backend.hpp"

namespace crossfuzz::wire {

// Line-delimited JSON over a worker's stdin/stdout.
//   worker -> engine  {"type":"hello","protocol":1,"backend":..,"manifest":[..]}
//   engine -> worker  {"type":"call","id":N,"api":..,"args":[ValueIR..]}
//   worker -> engine  {"type":"result","id":N,"status":"ok"|"error","outputs"?:[..],"error"?:..}
inline constexpr int kProtocolVersion = 1;

nlohmann::json hello(const std::string& backend, const std::vector<std::string>& manifest,
                     const std::string& version = "");
nlohmann::json call_request(std::uint64_t id, std::string_view api, std::span<const ValueIR> args);
nlohmann::json result_ok(std::uint64_t id, std::span<const ValueIR> outputs);
nlohmann::json result_error(std::uint64_t id, std::string_view message);

struct Hello {
  int protocol = 0;
  std::string backend;
  std::string version;
  std::vector<std::string> manifest;
};
Hello parse_hello(const nlohmann::json& j);  // throws std::invalid_argument

struct CallRequest {
  std::uint64_t id = 0;
  std::string api;
  std::vector<ValueIR> args;
};
CallRequest parse_call(const nlohmann::json& j);

// Hook run before each call is served; the test worker uses it to simulate
// aborts, hangs and protocol violations.
using CallHook = std::function<void(const CallRequest&, std::ostream&)>;

// Serves `backend` until EOF on `in`. Any failure inside a call becomes an
// "error" result; malformed request lines get an error result with id 0.
void serve(Backend& backend, std::istream& in, std::ostream& out, const CallHook& hook = {});

}  // namespace crossfuzz::wire
