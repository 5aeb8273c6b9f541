#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "crossfuzz/corpus.hpp"

namespace crossfuzz {

// Parameter-name aliases, e.g. dim/axes -> axis, x/values/a -> input.
class AliasMap {
 public:
  AliasMap();  // built-in defaults

  // Lines of "alias -> canonical"; '#' starts a comment. Entries are added on
  // top of the current map.
  void load(std::istream& in);
  void load(const std::filesystem::path& path);
  void add(std::string alias, std::string canonical);

  // Lowercases, collapses tensorN/inputN to input_N, then applies aliases.
  std::string canonical(std::string_view raw) const;

 private:
  std::map<std::string, std::string, std::less<>> aliases_;
};

std::string normalize_param_name(std::string_view raw, const AliasMap& aliases);
std::string normalize_param_name(std::string_view raw);

struct CanonicalParam {
  std::string name;
  AbstractType type = AbstractType::Unknown;
};

struct AlignedSignature {
  std::vector<CanonicalParam> canonical_params;
  // per_member_order[m][c] is the position, among member m's functional
  // parameters, that receives canonical argument c.
  std::vector<std::vector<std::size_t>> per_member_order;

  // Member m's argument list from a canonical tuple.
  template <typename T>
  std::vector<T> to_member(std::size_t member, std::span<const T> canonical) const {
    std::vector<T> out(canonical.size());
    const auto& order = per_member_order.at(member);
    for (std::size_t c = 0; c < canonical.size(); ++c) out[order[c]] = canonical[c];
    return out;
  }
};

class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Canonical order is members[0]'s functional order. Every other member is
// matched by normalized name (types must agree), then by equal type with the
// nearest original position (lowest index on ties). Throws AlignmentError
// when no type-consistent bijection exists.
AlignedSignature align_signature(std::span<const ApiRecord> members, const AliasMap& aliases);
AlignedSignature align_signature(std::span<const ApiRecord> members);

}  // namespace crossfuzz
