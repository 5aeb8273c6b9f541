#include "crossfuzz/backend.hpp"

#include <stdexcept>

namespace crossfuzz {

std::string_view to_string(CallStatus status) {
  switch (status) {
    case CallStatus::Ok: return "ok";
    case CallStatus::Error: return "error";
    case CallStatus::Crash: return "crash";
    case CallStatus::Timeout: return "timeout";
  }
  return "error";
}

CallStatus call_status_from_string(std::string_view text) {
  for (auto s : {CallStatus::Ok, CallStatus::Error, CallStatus::Crash, CallStatus::Timeout}) {
    if (text == to_string(s)) return s;
  }
  throw std::invalid_argument("unknown call status '" + std::string(text) + "'");
}

ExecutionOutcome call(Backend& backend, std::string_view api, std::span<const ValueIR> args,
                      std::chrono::milliseconds timeout) {
  const auto start = std::chrono::steady_clock::now();
  ExecutionOutcome out;
  out.backend_id = backend.id();
  try {
    if (!backend.supports(api)) {
      out.status = CallStatus::Error;
      out.error_text = "api '" + std::string(api) + "' is not in the backend manifest";
    } else {
      out = backend.invoke(api, args, timeout);
      out.backend_id = backend.id();
    }
  } catch (const std::exception& e) {
    out = {};
    out.backend_id = backend.id();
    out.status = CallStatus::Error;
    out.error_text = e.what();
  } catch (...) {
    out = {};
    out.backend_id = backend.id();
    out.status = CallStatus::Error;
    out.error_text = "unknown exception";
  }

  if (out.status == CallStatus::Ok) {
    std::size_t elements = 0;
    for (const auto& v : out.outputs) {
      if (const auto* t = std::get_if<TensorValue>(&v)) elements += t->numel();
    }
    if (elements > kMaxOutputElements) {
      out.status = CallStatus::Error;
      out.outputs.clear();
      out.error_text = "output exceeds " + std::to_string(kMaxOutputElements) + " elements";
    }
  } else {
    out.outputs.clear();
  }
  out.nan_present = false;
  if (out.status == CallStatus::Ok) {
    for (const auto& v : out.outputs) out.nan_present |= contains_nan(v);
  }
  out.duration_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

nlohmann::json to_json(const ExecutionOutcome& o) {
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& v : o.outputs) outputs.push_back(to_json(v));
  nlohmann::json j = {{"backend", o.backend_id}, {"status", to_string(o.status)}, {"nan_present", o.nan_present}};
  if (o.status == CallStatus::Ok) {
    j["outputs"] = std::move(outputs);
  } else {
    j["error"] = o.error_text;
  }
  return j;
}

ExecutionOutcome outcome_from_json(const nlohmann::json& j) {
  ExecutionOutcome o;
  o.backend_id = j.at("backend").get<std::string>();
  o.status = call_status_from_string(j.at("status").get<std::string>());
  o.nan_present = j.value("nan_present", false);
  o.error_text = j.value("error", std::string());
  if (j.contains("outputs")) {
    for (const auto& v : j["outputs"]) o.outputs.push_back(value_from_json(v));
  }
  return o;
}

}  // namespace crossfuzz
