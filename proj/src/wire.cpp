#include "crossfuzz/wire.hpp"

#include <stdexcept>

namespace crossfuzz::wire {

using nlohmann::json;

json hello(const std::string& backend, const std::vector<std::string>& manifest, const std::string& version) {
  json j = {{"type", "hello"}, {"protocol", kProtocolVersion}, {"backend", backend}, {"manifest", manifest}};
  if (!version.empty()) j["version"] = version;
  return j;
}

json call_request(std::uint64_t id, std::string_view api, std::span<const ValueIR> args) {
  json a = json::array();
  for (const auto& v : args) a.push_back(to_json(v));
  return {{"type", "call"}, {"id", id}, {"api", api}, {"args", std::move(a)}};
}

json result_ok(std::uint64_t id, std::span<const ValueIR> outputs) {
  json o = json::array();
  for (const auto& v : outputs) o.push_back(to_json(v));
  return {{"type", "result"}, {"id", id}, {"status", "ok"}, {"outputs", std::move(o)}};
}

json result_error(std::uint64_t id, std::string_view message) {
  return {{"type", "result"}, {"id", id}, {"status", "error"}, {"error", message}};
}

Hello parse_hello(const json& j) {
  if (!j.is_object() || j.value("type", "") != "hello") throw std::invalid_argument("expected a hello message");
  Hello h;
  h.protocol = j.at("protocol").get<int>();
  h.backend = j.at("backend").get<std::string>();
  h.version = j.value("version", std::string());
  h.manifest = j.at("manifest").get<std::vector<std::string>>();
  return h;
}

CallRequest parse_call(const json& j) {
  if (!j.is_object() || j.value("type", "") != "call") throw std::invalid_argument("expected a call message");
  CallRequest r;
  r.id = j.at("id").get<std::uint64_t>();
  r.api = j.at("api").get<std::string>();
  for (const auto& a : j.at("args")) r.args.push_back(value_from_json(a));
  return r;
}

void serve(Backend& backend, std::istream& in, std::ostream& out, const CallHook& hook) {
  out << hello(backend.id(), backend.manifest(), backend.version()).dump() << '\n' << std::flush;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    CallRequest request;
    try {
      request = parse_call(json::parse(line));
    } catch (const std::exception& e) {
      std::uint64_t id = 0;
      try {
        id = json::parse(line).value("id", std::uint64_t{0});
      } catch (...) {
      }
      out << result_error(id, std::string("malformed request: ") + e.what()).dump() << '\n' << std::flush;
      continue;
    }
    if (hook) hook(request, out);
    const ExecutionOutcome outcome = call(backend, request.api, request.args);
    const json reply = outcome.status == CallStatus::Ok ? result_ok(request.id, outcome.outputs)
                                                         : result_error(request.id, outcome.error_text);
    out << reply.dump() << '\n' << std::flush;
  }
}

}  // namespace crossfuzz::wire
