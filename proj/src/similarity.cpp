#include "crossfuzz/similarity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <set>

namespace crossfuzz {

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      row[j] = std::min({above + 1, row[j - 1] + 1, diagonal + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diagonal = above;
    }
  }
  return row[b.size()];
}

double name_similarity(std::string_view a, std::string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

std::vector<std::string> tokenize_description(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '_') {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

LexicalProvider::LexicalProvider(std::span<const std::string> texts) {
  std::set<std::string> words;
  for (const auto& text : texts) {
    for (auto& token : tokenize_description(text)) words.insert(std::move(token));
  }
  std::size_t next = 0;
  for (const auto& w : words) vocabulary_.emplace(w, next++);
}

LexicalProvider LexicalProvider::from_corpora(std::span<const Corpus> corpora) {
  std::vector<std::string> texts;
  for (const auto& corpus : corpora) {
    for (const auto& record : corpus.records()) texts.push_back(record.description);
  }
  return LexicalProvider(texts);
}

EmbeddingVector LexicalProvider::embed_text(std::string_view text) const {
  EmbeddingVector out{std::vector<double>(vocabulary_.size(), 0.0), id()};
  for (const auto& token : tokenize_description(text)) {
    auto it = vocabulary_.find(token);
    if (it != vocabulary_.end()) out.values[it->second] += 1.0;
  }
  double norm = 0.0;
  for (double v : out.values) norm += v * v;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& v : out.values) v /= norm;
  }
  return out;
}

PrecomputedProvider PrecomputedProvider::parse(std::istream& in, std::string provider_id) {
  using nlohmann::json;
  PrecomputedProvider provider;
  provider.id_ = std::move(provider_id);
  std::string line;
  std::size_t index = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "embedding record " + std::to_string(index);
    json object;
    try {
      object = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ProviderError(ProviderError::Kind::Configuration, where + ": invalid JSON: " + e.what());
    }
    if (!object.is_object() || !object.contains("source") || !object.contains("name") ||
        !object.contains("vector") || !object["vector"].is_array()) {
      throw ProviderError(ProviderError::Kind::Configuration, where + ": expected {source, name, vector}");
    }
    std::vector<double> values;
    for (const auto& v : object["vector"]) {
      if (!v.is_number()) throw ProviderError(ProviderError::Kind::Configuration, where + ": non-numeric component");
      values.push_back(v.get<double>());
    }
    if (first) {
      provider.dimension_ = values.size();
      first = false;
    } else if (values.size() != provider.dimension_) {
      throw ProviderError(ProviderError::Kind::Configuration,
                          where + ": vector length " + std::to_string(values.size()) + " differs from " +
                              std::to_string(provider.dimension_));
    }
    provider.vectors_[{object["source"].get<std::string>(), object["name"].get<std::string>()}] = std::move(values);
    ++index;
  }
  return provider;
}

PrecomputedProvider PrecomputedProvider::load(const std::filesystem::path& path, std::string provider_id) {
  std::ifstream in(path);
  if (!in) {
    throw ProviderError(ProviderError::Kind::Configuration, "cannot open embedding file '" + path.string() + "'");
  }
  return parse(in, std::move(provider_id));
}

EmbeddingVector PrecomputedProvider::embed(const ApiRecord& record) const {
  auto it = vectors_.find({record.source_id, record.qualified_name});
  if (it == vectors_.end()) {
    throw ProviderError(ProviderError::Kind::Runtime,
                        "no precomputed vector for " + record.source_id + ":" + record.qualified_name);
  }
  return {it->second, id_};
}

EmbeddingVector embed_description(const ApiRecord& record, const EmbeddingProvider& provider) {
  return provider.embed(record);
}

double description_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.provider_id != b.provider_id) {
    throw std::invalid_argument("embedding provider mismatch: '" + a.provider_id + "' vs '" + b.provider_id + "'");
  }
  if (a.values.size() != b.values.size()) throw std::invalid_argument("embedding length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double count_similarity(std::size_t n1, std::size_t n2) {
  const std::size_t largest = std::max(n1, n2);
  if (largest == 0) return 1.0;
  const std::size_t diff = n1 > n2 ? n1 - n2 : n2 - n1;
  return 1.0 - static_cast<double>(diff) / static_cast<double>(largest);
}

double type_similarity(std::span<const AbstractType> a, std::span<const AbstractType> b) {
  const std::size_t largest = std::max(a.size(), b.size());
  if (largest == 0) return 1.0;
  std::vector<bool> used(b.size(), false);
  std::size_t matched = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == AbstractType::Unknown) continue;
    std::size_t best = b.size();
    std::size_t best_distance = SIZE_MAX;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (used[j] || b[j] != a[i]) continue;
      const std::size_t distance = i > j ? i - j : j - i;
      if (distance < best_distance) {
        best = j;
        best_distance = distance;
      }
    }
    if (best < b.size()) {
      used[best] = true;
      ++matched;
    }
  }
  return static_cast<double>(matched) / static_cast<double>(largest);
}

SimilarityScores param_similarity(const ApiRecord& a, const ApiRecord& b) {
  const auto ta = a.functional_types();
  const auto tb = b.functional_types();
  SimilarityScores s;
  s.count_sim = count_similarity(ta.size(), tb.size());
  s.type_sim = type_similarity(ta, tb);
  s.param_sim = s.count_sim + s.type_sim;
  return s;
}

SimilarityScores score_pair(const ApiRecord& a, const ApiRecord& b, const EmbeddingProvider& provider) {
  SimilarityScores s = param_similarity(a, b);
  s.name_sim = name_similarity(a.normalized_name, b.normalized_name);
  s.desc_sim = description_similarity(provider.embed(a), provider.embed(b));
  return s;
}

}  // namespace crossfuzz
