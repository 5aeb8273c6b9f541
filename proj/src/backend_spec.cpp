#include "crossfuzz/backend_spec.hpp"

#include <sstream>

#include "crossfuzz/worker_backend.hpp"

namespace crossfuzz {

BackendSpec parse_backend_spec(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("backend spec '" + text + "': expected ID=ref:VARIANT or ID=exec:COMMAND");
  }
  BackendSpec spec;
  spec.id = text.substr(0, eq);
  const std::string rest = text.substr(eq + 1);
  if (rest.rfind("ref:", 0) == 0) {
    spec.kind = BackendSpec::Kind::Reference;
    spec.variant = reference_variant_from_string(rest.substr(4));
  } else if (rest.rfind("exec:", 0) == 0) {
    spec.kind = BackendSpec::Kind::Worker;
    std::istringstream words(rest.substr(5));
    for (std::string w; words >> w;) spec.argv.push_back(w);
    if (spec.argv.empty()) throw std::invalid_argument("backend spec '" + text + "': empty command");
  } else {
    throw std::invalid_argument("backend spec '" + text + "': unknown transport");
  }
  return spec;
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec) {
  if (spec.kind == BackendSpec::Kind::Reference) return reference_backend(spec.variant, spec.id);
  return std::make_unique<WorkerBackend>(spec.id, spec.argv);
}

BackendSet make_backends(const std::vector<BackendSpec>& specs) {
  BackendSet out;
  for (const auto& s : specs) out.push_back(make_backend(s));
  return out;
}

std::vector<MemberBinding> bind_members(const ApiGroup& group, const BackendSet& backends) {
  std::vector<MemberBinding> out;
  for (std::size_t m = 0; m < group.members.size(); ++m) {
    for (const auto& b : backends) {
      if (b->id() == group.members[m].source_id && b->supports(group.members[m].qualified_name)) {
        out.push_back({m, b.get()});
        break;
      }
    }
  }
  return out;
}

}  // namespace crossfuzz
