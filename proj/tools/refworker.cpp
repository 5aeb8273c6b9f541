// Serves a reference backend over the worker wire protocol. The fault flags
// make it misbehave on one API so the supervisor paths can be exercised.
#include <chrono>
#include <cstdlib>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "crossfuzz/reference_backend.hpp"
#include "crossfuzz/wire.hpp"

namespace {

// Advertises every op under a qualified prefix, e.g. "libb.ops.argsort".
class PrefixedBackend final : public crossfuzz::Backend {
 public:
  PrefixedBackend(crossfuzz::Backend& inner, std::string prefix) : inner_(inner), prefix_(std::move(prefix)) {}
  const std::string& id() const override { return inner_.id(); }
  std::vector<std::string> manifest() const override {
    std::vector<std::string> out;
    for (const auto& op : inner_.manifest()) out.push_back(prefix_ + op);
    return out;
  }
  bool supports(std::string_view api) const override {
    return api.substr(0, prefix_.size()) == prefix_ && inner_.supports(api.substr(prefix_.size()));
  }
  std::string version() const override { return inner_.version(); }
  crossfuzz::ExecutionOutcome invoke(std::string_view api, std::span<const crossfuzz::ValueIR> args,
                                     std::chrono::milliseconds timeout) override {
    return inner_.invoke(api.substr(prefix_.size()), args, timeout);
  }

 private:
  crossfuzz::Backend& inner_;
  std::string prefix_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reference backend worker"};
  std::string variant = "stable";
  std::string id;
  std::string prefix;
  std::string abort_on, hang_on, garbage_on, exit_on;
  app.add_option("--variant", variant, "stable or ftz");
  app.add_option("--id", id, "backend name reported in the handshake");
  app.add_option("--prefix", prefix, "qualified-name prefix for the advertised ops");
  app.add_option("--abort-on", abort_on, "call abort() when this API is requested");
  app.add_option("--hang-on", hang_on, "never answer this API");
  app.add_option("--garbage-on", garbage_on, "answer this API with a malformed line");
  app.add_option("--exit-on", exit_on, "exit cleanly without answering this API");
  CLI11_PARSE(app, argc, argv);

  std::ios::sync_with_stdio(false);
  try {
    crossfuzz::ReferenceBackend reference(id.empty() ? "reference-" + variant : id,
                                          crossfuzz::reference_variant_from_string(variant));
    PrefixedBackend backend(reference, prefix);
    crossfuzz::wire::serve(backend, std::cin, std::cout, [&](const crossfuzz::wire::CallRequest& r, std::ostream& out) {
      if (r.api == abort_on) std::abort();
      if (r.api == exit_on) std::exit(0);
      if (r.api == hang_on) {
        for (;;) std::this_thread::sleep_for(std::chrono::hours(1));
      }
      if (r.api == garbage_on) out << "{not json\n" << std::flush;
    });
  } catch (const std::exception& e) {
    std::cerr << "refworker: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
