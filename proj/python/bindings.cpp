#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "crossfuzz/backend_spec.hpp"
#include "crossfuzz/campaign.hpp"
#include "crossfuzz/matcher.hpp"
#include "crossfuzz/reference_backend.hpp"
#include "crossfuzz/similarity.hpp"
#include "crossfuzz/wire.hpp"

namespace py = pybind11;
using namespace crossfuzz;
using nlohmann::json;

namespace {

std::vector<ValueIR> values_from(const std::string& text) {
  const json j = json::parse(text);
  if (!j.is_array()) throw std::invalid_argument("expected a JSON array of values");
  std::vector<ValueIR> out;
  for (const auto& v : j) out.push_back(value_from_json(v));
  return out;
}

std::vector<ExecutionOutcome> outcomes_from(const std::string& text) {
  std::vector<ExecutionOutcome> out;
  for (const auto& o : json::parse(text)) out.push_back(outcome_from_json(o));
  return out;
}

std::vector<AbstractType> types_from(const std::vector<std::string>& names) {
  std::vector<AbstractType> out;
  for (const auto& n : names) out.push_back(abstract_type_from_string(n));
  return out;
}

std::string match(const std::vector<std::string>& corpora_paths, const std::string& reference,
                  const std::string& aliases_path) {
  std::vector<Corpus> corpora;
  for (const auto& p : corpora_paths) corpora.push_back(load_corpus(p));
  if (corpora.size() < 2) throw std::invalid_argument("need at least two corpora");
  std::size_t ref = 0;
  if (!reference.empty()) {
    while (ref < corpora.size() && corpora[ref].source_id() != reference) ++ref;
    if (ref == corpora.size()) throw std::invalid_argument("no corpus with source '" + reference + "'");
  }
  std::vector<Corpus> targets;
  for (std::size_t i = 0; i < corpora.size(); ++i)
    if (i != ref) targets.push_back(corpora[i]);
  AliasMap aliases;
  if (!aliases_path.empty()) aliases.load(aliases_path);
  const auto provider = LexicalProvider::from_corpora(corpora);
  const auto result = build_groups(corpora[ref], targets, provider, aliases);
  std::ostringstream out;
  write_match_report(out, result.groups);
  return out.str();
}

std::string fuzz_group(const std::string& groups_path, const std::string& group_id,
                       const std::vector<std::string>& backend_specs, const std::string& config_text) {
  const auto groups = load_match_report(groups_path);
  const ApiGroup* group = nullptr;
  for (const auto& g : groups)
    if (g.group_id == group_id) group = &g;
  if (!group) throw std::invalid_argument("no group '" + group_id + "'");
  if (!group->aligned) throw std::invalid_argument("group '" + group_id + "' is not aligned");
  std::istringstream in(config_text);
  const auto config = parse_config(in);
  std::vector<BackendSpec> specs;
  for (const auto& s : backend_specs) specs.push_back(parse_backend_spec(s));
  const auto backends = make_backends(specs);
  const auto bindings = bind_members(*group, backends);
  const auto plan = make_plan(group->group_id, *group->aligned, default_hints(group->members[0].normalized_name));
  CampaignResult r;
  {
    py::gil_scoped_release release;
    r = run_campaign(*group, plan, bindings, config);
  }
  json findings = json::array();
  for (const auto& f : r.findings) findings.push_back(to_json(f));
  return json{{"summary", summary_json(r)}, {"findings", findings}}.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "crossfuzz core bindings; structured values travel as JSON text";

  m.def("levenshtein", [](const std::string& a, const std::string& b) { return levenshtein(a, b); });
  m.def("name_similarity", [](const std::string& a, const std::string& b) { return name_similarity(a, b); });
  m.def("normalize_api_name", [](const std::string& q) { return normalize_api_name(q); });
  m.def("count_similarity", &count_similarity);
  m.def("type_similarity", [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
    return type_similarity(types_from(a), types_from(b));
  });

  m.def("match", &match, py::arg("corpora"), py::arg("reference") = "", py::arg("aliases") = "");

  m.def("reference_call", [](const std::string& variant, const std::string& api, const std::string& args) {
    ReferenceBackend b("reference-" + variant, reference_variant_from_string(variant));
    return to_json(call(b, api, values_from(args))).dump();
  });
  m.def("compute_variance", [](const std::string& outcomes) {
    const auto v = compute_variance(outcomes_from(outcomes));
    return json{{"sigma2", real_to_json(v.sigma2)}, {"comparable", v.comparable}, {"integral", v.integral},
                {"mismatches", v.mismatches}}
        .dump();
  });
  m.def("normalize_value", [](const std::string& value) { return to_json(value_from_json(json::parse(value))).dump(); });

  m.def("fuzz_group", &fuzz_group, py::arg("groups"), py::arg("group_id"), py::arg("backends"),
        py::arg("config") = "");

  auto wire = m.def_submodule("wire", "worker protocol messages");
  wire.attr("PROTOCOL_VERSION") = wire::kProtocolVersion;
  wire.def("hello", [](const std::string& backend, const std::vector<std::string>& manifest, const std::string& version) {
    return wire::hello(backend, manifest, version).dump();
  }, py::arg("backend"), py::arg("manifest"), py::arg("version") = "");
  wire.def("call_request", [](std::uint64_t id, const std::string& api, const std::string& args) {
    return wire::call_request(id, api, values_from(args)).dump();
  });
  wire.def("result_ok", [](std::uint64_t id, const std::string& outputs) {
    return wire::result_ok(id, values_from(outputs)).dump();
  });
  wire.def("result_error", [](std::uint64_t id, const std::string& message) {
    return wire::result_error(id, message).dump();
  });
  wire.def("parse_call", [](const std::string& line) {
    const auto c = wire::parse_call(json::parse(line));
    json args = json::array();
    for (const auto& a : c.args) args.push_back(to_json(a));
    return json{{"id", c.id}, {"api", c.api}, {"args", args}}.dump();
  });
  wire.def("parse_hello", [](const std::string& line) {
    const auto h = wire::parse_hello(json::parse(line));
    return json{{"protocol", h.protocol}, {"backend", h.backend}, {"version", h.version}, {"manifest", h.manifest}}
        .dump();
  });

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
}
