#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace crossfuzz {

enum class AbstractType { Tensor, Int, Float, Bool, Shape, String, Complex, Unknown };
enum class ParamRole { Control, Functional };

std::string_view to_string(AbstractType type);
AbstractType abstract_type_from_string(std::string_view text);  // Unknown if unrecognised
std::string_view to_string(ParamRole role);

struct ParamSpec {
  std::string name;
  std::string raw_type;
  AbstractType abstract_type = AbstractType::Unknown;
  ParamRole role = ParamRole::Functional;
  bool has_default = false;
};

struct ApiRecord {
  std::string source_id;
  std::string qualified_name;
  std::string normalized_name;
  std::string description;
  std::vector<ParamSpec> params;

  std::vector<ParamSpec> functional_params() const;
  std::vector<AbstractType> functional_types() const;
  std::size_t functional_count() const;
};

class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::string source_id) : source_id_(std::move(source_id)) {}

  const std::string& source_id() const { return source_id_; }
  const std::vector<ApiRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  const ApiRecord* find(std::string_view qualified_name) const;

  // Throws CorpusError on a duplicate qualified_name.
  void add(ApiRecord record);

 private:
  std::string source_id_;
  std::vector<ApiRecord> records_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Lowercase, last dotted segment. Idempotent.
std::string normalize_api_name(std::string_view qualified);

// Keywords that mark a parameter as control-related (naming, device, dtype,
// logging, determinism, sort direction). Matching is case-insensitive against
// the whole name and against every '_'-delimited suffix of it.
class ControlKeywords {
 public:
  ControlKeywords();  // seeded with the default categories
  explicit ControlKeywords(std::set<std::string> keywords) : keywords_(std::move(keywords)) {}

  void add(std::string keyword);
  bool matches(std::string_view param_name) const;
  const std::set<std::string>& keywords() const { return keywords_; }

 private:
  std::set<std::string> keywords_;
};

ParamRole classify_param(const ParamSpec& param, const ControlKeywords& keywords);
ParamRole classify_param(const ParamSpec& param);

// Source-specific type names to the abstract type space. Lookups fall back
// from (source, type) to a generic table; anything unmapped is Unknown.
class TypeMapping {
 public:
  TypeMapping();

  void add(std::string source_id, std::string raw_type, AbstractType type);
  void add_generic(std::string raw_type, AbstractType type);
  AbstractType map(std::string_view source_id, std::string_view raw_type) const;

 private:
  std::map<std::pair<std::string, std::string>, AbstractType> per_source_;
  std::map<std::string, AbstractType, std::less<>> generic_;
};

AbstractType map_abstract_type(std::string_view source_id, std::string_view raw_type);

struct CorpusOptions {
  ControlKeywords keywords;
  TypeMapping types;
};

// One JSON object per line: {source, name, description, params:[{name, type, default?}]}.
// Blank lines are skipped. A repeated name with a different parameter list is
// an overload and is stored as "<name>#<k>" (k counting from 2). Errors name
// the 0-based record index and the offending field.
Corpus parse_corpus(std::istream& in, const CorpusOptions& options = {});
Corpus load_corpus(const std::filesystem::path& path, const CorpusOptions& options = {});

}  // namespace crossfuzz
