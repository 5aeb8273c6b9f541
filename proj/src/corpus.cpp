#include "crossfuzz/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <json.hpp>

namespace crossfuzz {
namespace {

using nlohmann::json;

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string strip_overload_suffix(std::string_view name) {
  auto hash = name.rfind('#');
  if (hash == std::string_view::npos) return std::string(name);
  return std::string(name.substr(0, hash));
}

const json& require(const json& object, const char* field, std::size_t index) {
  auto it = object.find(field);
  if (it == object.end()) {
    throw CorpusError("record " + std::to_string(index) + ": missing field '" + field + "'");
  }
  return *it;
}

std::string require_string(const json& object, const char* field, std::size_t index) {
  const json& value = require(object, field, index);
  if (!value.is_string()) {
    throw CorpusError("record " + std::to_string(index) + ": field '" + field + "' must be a string");
  }
  return value.get<std::string>();
}

bool same_signature(const ApiRecord& a, const ApiRecord& b) {
  if (a.params.size() != b.params.size()) return false;
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    if (a.params[i].name != b.params[i].name || a.params[i].raw_type != b.params[i].raw_type) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(AbstractType type) {
  switch (type) {
    case AbstractType::Tensor: return "Tensor";
    case AbstractType::Int: return "Int";
    case AbstractType::Float: return "Float";
    case AbstractType::Bool: return "Bool";
    case AbstractType::Shape: return "Shape";
    case AbstractType::String: return "String";
    case AbstractType::Complex: return "Complex";
    case AbstractType::Unknown: return "Unknown";
  }
  return "Unknown";
}

AbstractType abstract_type_from_string(std::string_view text) {
  for (auto t : {AbstractType::Tensor, AbstractType::Int, AbstractType::Float, AbstractType::Bool,
                 AbstractType::Shape, AbstractType::String, AbstractType::Complex}) {
    if (text == to_string(t)) return t;
  }
  return AbstractType::Unknown;
}

std::string_view to_string(ParamRole role) {
  return role == ParamRole::Control ? "control" : "functional";
}

std::vector<ParamSpec> ApiRecord::functional_params() const {
  std::vector<ParamSpec> out;
  for (const auto& p : params) {
    if (p.role == ParamRole::Functional) out.push_back(p);
  }
  return out;
}

std::vector<AbstractType> ApiRecord::functional_types() const {
  std::vector<AbstractType> out;
  for (const auto& p : params) {
    if (p.role == ParamRole::Functional) out.push_back(p.abstract_type);
  }
  return out;
}

std::size_t ApiRecord::functional_count() const {
  return static_cast<std::size_t>(std::count_if(
      params.begin(), params.end(), [](const ParamSpec& p) { return p.role == ParamRole::Functional; }));
}

const ApiRecord* Corpus::find(std::string_view qualified_name) const {
  auto it = index_.find(qualified_name);
  return it == index_.end() ? nullptr : &records_[it->second];
}

void Corpus::add(ApiRecord record) {
  if (index_.count(record.qualified_name) != 0) {
    throw CorpusError("duplicate qualified_name '" + record.qualified_name + "'");
  }
  index_.emplace(record.qualified_name, records_.size());
  records_.push_back(std::move(record));
}

std::string normalize_api_name(std::string_view qualified) {
  auto dot = qualified.rfind('.');
  if (dot != std::string_view::npos) qualified.remove_prefix(dot + 1);
  return lowercase(qualified);
}

ControlKeywords::ControlKeywords()
    : keywords_{// naming
                "name", "layer_name", "op_name", "scope_name",
                // device and execution control
                "device", "jit", "compile", "layout", "autocast",
                // data type and shape configuration
                "dtype", "output_dtype", "input_shape", "output_shape", "validate_shape",
                // stability and reproducibility
                "seed", "stable", "deterministic",
                // logging and debugging
                "verbose", "debug", "log_level",
                // sorting and direction control
                "direction", "ascending", "descending"} {}

void ControlKeywords::add(std::string keyword) { keywords_.insert(lowercase(keyword)); }

bool ControlKeywords::matches(std::string_view param_name) const {
  const std::string name = lowercase(param_name);
  if (keywords_.count(name) != 0) return true;
  for (std::size_t pos = name.find('_'); pos != std::string::npos; pos = name.find('_', pos + 1)) {
    if (keywords_.count(name.substr(pos + 1)) != 0) return true;
  }
  return false;
}

ParamRole classify_param(const ParamSpec& param, const ControlKeywords& keywords) {
  return keywords.matches(param.name) ? ParamRole::Control : ParamRole::Functional;
}

ParamRole classify_param(const ParamSpec& param) {
  static const ControlKeywords kDefault;
  return classify_param(param, kDefault);
}

TypeMapping::TypeMapping() {
  // Per-framework rows of the equivalence table.
  add("pytorch", "Tensor", AbstractType::Tensor);
  add("tensorflow", "Tensor", AbstractType::Tensor);
  add("keras", "Tensor", AbstractType::Tensor);
  add("chainer", "Variable", AbstractType::Tensor);
  add("jax", "Array", AbstractType::Tensor);
  add("pytorch", "List", AbstractType::Shape);
  add("tensorflow", "Tuple", AbstractType::Shape);
  add("keras", "Tuple", AbstractType::Shape);
  add("chainer", "Sequence", AbstractType::Shape);
  add("jax", "List", AbstractType::Shape);

  add_generic("tensor", AbstractType::Tensor);
  add_generic("array", AbstractType::Tensor);
  add_generic("ndarray", AbstractType::Tensor);
  add_generic("variable", AbstractType::Tensor);
  add_generic("shape", AbstractType::Shape);
  add_generic("int", AbstractType::Int);
  add_generic("integer", AbstractType::Int);
  add_generic("float", AbstractType::Float);
  add_generic("double", AbstractType::Float);
  add_generic("number", AbstractType::Float);
  add_generic("scalar", AbstractType::Float);
  add_generic("bool", AbstractType::Bool);
  add_generic("boolean", AbstractType::Bool);
  add_generic("str", AbstractType::String);
  add_generic("string", AbstractType::String);
  add_generic("complex", AbstractType::Complex);
}

void TypeMapping::add(std::string source_id, std::string raw_type, AbstractType type) {
  per_source_[{lowercase(source_id), lowercase(raw_type)}] = type;
}

void TypeMapping::add_generic(std::string raw_type, AbstractType type) {
  generic_[lowercase(raw_type)] = type;
}

AbstractType TypeMapping::map(std::string_view source_id, std::string_view raw_type) const {
  const std::string type = lowercase(raw_type);
  auto it = per_source_.find({lowercase(source_id), type});
  if (it != per_source_.end()) return it->second;
  auto git = generic_.find(type);
  return git == generic_.end() ? AbstractType::Unknown : git->second;
}

AbstractType map_abstract_type(std::string_view source_id, std::string_view raw_type) {
  static const TypeMapping kDefault;
  return kDefault.map(source_id, raw_type);
}

Corpus parse_corpus(std::istream& in, const CorpusOptions& options) {
  std::vector<ApiRecord> records;
  std::map<std::string, int> overloads;
  std::string line;
  std::size_t index = 0;
  std::optional<std::string> source;

  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json object;
    try {
      object = json::parse(line);
    } catch (const json::parse_error& e) {
      throw CorpusError("record " + std::to_string(index) + ": invalid JSON: " + e.what());
    }
    if (!object.is_object()) {
      throw CorpusError("record " + std::to_string(index) + ": expected an object");
    }

    ApiRecord record;
    record.source_id = require_string(object, "source", index);
    record.qualified_name = require_string(object, "name", index);
    record.description = require_string(object, "description", index);
    if (record.qualified_name.empty()) {
      throw CorpusError("record " + std::to_string(index) + ": field 'name' is empty");
    }
    if (source && *source != record.source_id) {
      throw CorpusError("record " + std::to_string(index) + ": field 'source' is '" + record.source_id +
                        "' but the corpus source is '" + *source + "'");
    }
    source = record.source_id;

    const json& params = require(object, "params", index);
    if (!params.is_array()) {
      throw CorpusError("record " + std::to_string(index) + ": field 'params' must be an array");
    }
    for (std::size_t p = 0; p < params.size(); ++p) {
      const json& entry = params[p];
      const std::string where = "params[" + std::to_string(p) + "]";
      if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string()) {
        throw CorpusError("record " + std::to_string(index) + ": field '" + where + ".name' missing or not a string");
      }
      if (!entry.contains("type") || !entry["type"].is_string()) {
        throw CorpusError("record " + std::to_string(index) + ": field '" + where + ".type' missing or not a string");
      }
      ParamSpec spec;
      spec.name = entry["name"].get<std::string>();
      spec.raw_type = entry["type"].get<std::string>();
      spec.has_default = entry.contains("default");
      spec.abstract_type = options.types.map(record.source_id, spec.raw_type);
      spec.role = classify_param(spec, options.keywords);
      record.params.push_back(std::move(spec));
    }

    record.normalized_name = normalize_api_name(strip_overload_suffix(record.qualified_name));
    if (record.normalized_name.empty()) {
      throw CorpusError("record " + std::to_string(index) + ": field 'name' normalizes to an empty name");
    }

    auto existing = std::find_if(records.begin(), records.end(),
                                 [&](const ApiRecord& r) { return r.qualified_name == record.qualified_name; });
    if (existing != records.end()) {
      if (same_signature(*existing, record)) {
        throw CorpusError("record " + std::to_string(index) + ": duplicate qualified_name '" +
                          record.qualified_name + "'");
      }
      int& count = overloads[record.qualified_name];
      count = std::max(count, 1) + 1;
      record.qualified_name += "#" + std::to_string(count);
    }
    records.push_back(std::move(record));
    ++index;
  }

  Corpus corpus(source.value_or(""));
  for (auto& r : records) corpus.add(std::move(r));
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const CorpusOptions& options) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file '" + path.string() + "'");
  try {
    return parse_corpus(in, options);
  } catch (const CorpusError& e) {
    throw CorpusError(path.string() + ": " + e.what());
  }
}

}  // namespace crossfuzz
