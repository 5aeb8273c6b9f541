#include "crossfuzz/align.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>

namespace crossfuzz {
namespace {

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r");
  return std::string(text.substr(first, last - first + 1));
}

// "tensor2" / "input3" -> "input_2" / "input_3".
std::optional<std::string> indexed_name(std::string_view name) {
  for (std::string_view stem : {"tensor", "input"}) {
    if (name.size() > stem.size() && name.substr(0, stem.size()) == stem) {
      std::string_view digits = name.substr(stem.size());
      if (!digits.empty() && digits.front() == '_') digits.remove_prefix(1);
      if (!digits.empty() && std::all_of(digits.begin(), digits.end(),
                                         [](unsigned char c) { return std::isdigit(c) != 0; })) {
        return "input_" + std::string(digits);
      }
    }
  }
  return std::nullopt;
}

}  // namespace

AliasMap::AliasMap() {
  for (const char* a : {"dim", "axis", "axes"}) aliases_[a] = "axis";
  for (const char* a : {"x", "values", "input", "a"}) aliases_[a] = "input";
  for (const char* a : {"other", "b", "y"}) aliases_[a] = "other";
}

void AliasMap::add(std::string alias, std::string canonical) {
  aliases_[lowercase(alias)] = lowercase(canonical);
}

void AliasMap::load(std::istream& in) {
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto arrow = line.find("->");
    if (arrow == std::string::npos) {
      throw std::invalid_argument("alias map line " + std::to_string(number) + ": expected 'alias -> canonical'");
    }
    std::string alias = trim(std::string_view(line).substr(0, arrow));
    std::string canonical = trim(std::string_view(line).substr(arrow + 2));
    if (alias.empty() || canonical.empty()) {
      throw std::invalid_argument("alias map line " + std::to_string(number) + ": empty alias or canonical name");
    }
    add(std::move(alias), std::move(canonical));
  }
}

void AliasMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open alias map '" + path.string() + "'");
  load(in);
}

std::string AliasMap::canonical(std::string_view raw) const {
  std::string name = lowercase(raw);
  if (auto indexed = indexed_name(name)) return *indexed;
  auto it = aliases_.find(name);
  return it == aliases_.end() ? name : it->second;
}

std::string normalize_param_name(std::string_view raw, const AliasMap& aliases) { return aliases.canonical(raw); }

std::string normalize_param_name(std::string_view raw) {
  static const AliasMap kDefault;
  return kDefault.canonical(raw);
}

AlignedSignature align_signature(std::span<const ApiRecord> members, const AliasMap& aliases) {
  if (members.empty()) throw AlignmentError("cannot align an empty group");

  AlignedSignature sig;
  const auto reference = members[0].functional_params();
  for (const auto& p : reference) sig.canonical_params.push_back({aliases.canonical(p.name), p.abstract_type});
  const std::size_t n = reference.size();

  for (const auto& member : members) {
    const auto params = member.functional_params();
    if (params.size() != n) {
      throw AlignmentError(member.qualified_name + ": " + std::to_string(params.size()) +
                           " functional parameters, reference has " + std::to_string(n));
    }
    std::vector<std::string> names;
    for (const auto& p : params) names.push_back(aliases.canonical(p.name));

    constexpr std::size_t kUnassigned = SIZE_MAX;
    std::vector<std::size_t> order(n, kUnassigned);
    std::vector<bool> taken(n, false);

    // Exact normalized-name correspondence with agreeing types.
    for (std::size_t c = 0; c < n; ++c) {
      for (std::size_t j = 0; j < n; ++j) {
        if (!taken[j] && names[j] == sig.canonical_params[c].name &&
            params[j].abstract_type == sig.canonical_params[c].type &&
            params[j].abstract_type != AbstractType::Unknown) {
          order[c] = j;
          taken[j] = true;
          break;
        }
      }
    }
    // Leftovers: same type, nearest original position, lowest index first.
    for (std::size_t c = 0; c < n; ++c) {
      if (order[c] != kUnassigned) continue;
      std::size_t best = kUnassigned;
      std::size_t best_distance = SIZE_MAX;
      for (std::size_t j = 0; j < n; ++j) {
        if (taken[j] || params[j].abstract_type != sig.canonical_params[c].type ||
            params[j].abstract_type == AbstractType::Unknown) {
          continue;
        }
        const std::size_t distance = c > j ? c - j : j - c;
        if (distance < best_distance) {
          best = j;
          best_distance = distance;
        }
      }
      if (best == kUnassigned) {
        throw AlignmentError(member.qualified_name + ": no type-compatible parameter for canonical '" +
                             sig.canonical_params[c].name + "' (" +
                             std::string(to_string(sig.canonical_params[c].type)) + ")");
      }
      order[c] = best;
      taken[best] = true;
    }
    sig.per_member_order.push_back(std::move(order));
  }
  return sig;
}

AlignedSignature align_signature(std::span<const ApiRecord> members) {
  static const AliasMap kDefault;
  return align_signature(members, kDefault);
}

}  // namespace crossfuzz
