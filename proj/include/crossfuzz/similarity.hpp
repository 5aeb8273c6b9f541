#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "crossfuzz/corpus.hpp"

namespace crossfuzz {

// Unit-cost insert/delete/substitute edit distance over bytes.
std::size_t levenshtein(std::string_view a, std::string_view b);

// 1 - d(a,b) / max(|a|,|b|); 1.0 when both are empty.
double name_similarity(std::string_view a, std::string_view b);

struct EmbeddingVector {
  std::vector<double> values;
  std::string provider_id;
};

class ProviderError : public std::runtime_error {
 public:
  enum class Kind { Configuration, Runtime };
  ProviderError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Maps an API description to a fixed-length vector. Implementations must be
// safe for concurrent embed() calls.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string id() const = 0;
  virtual EmbeddingVector embed(const ApiRecord& record) const = 0;
};

std::vector<std::string> tokenize_description(std::string_view text);

// Term-frequency vectors over a vocabulary fixed at construction, L2-normalized.
// Tokens outside the vocabulary are ignored.
class LexicalProvider final : public EmbeddingProvider {
 public:
  explicit LexicalProvider(std::span<const std::string> texts);
  // Vocabulary from every description in the given corpora.
  static LexicalProvider from_corpora(std::span<const Corpus> corpora);

  std::string id() const override { return "lexical-tf"; }
  EmbeddingVector embed(const ApiRecord& record) const override { return embed_text(record.description); }
  EmbeddingVector embed_text(std::string_view text) const;
  std::size_t dimension() const { return vocabulary_.size(); }

 private:
  std::map<std::string, std::size_t, std::less<>> vocabulary_;
};

// Vectors injected from a sidecar file: one JSON object per line,
// {source, name, vector:[reals]}. Keyed by (source, qualified name).
class PrecomputedProvider final : public EmbeddingProvider {
 public:
  static PrecomputedProvider load(const std::filesystem::path& path, std::string provider_id = "precomputed");
  static PrecomputedProvider parse(std::istream& in, std::string provider_id = "precomputed");

  std::string id() const override { return id_; }
  EmbeddingVector embed(const ApiRecord& record) const override;
  std::size_t dimension() const { return dimension_; }

 private:
  std::string id_;
  std::size_t dimension_ = 0;
  std::map<std::pair<std::string, std::string>, std::vector<double>> vectors_;
};

EmbeddingVector embed_description(const ApiRecord& record, const EmbeddingProvider& provider);

// Cosine similarity; 0 if either vector has zero norm. Throws
// std::invalid_argument on provider or length mismatch.
double description_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

double count_similarity(std::size_t n1, std::size_t n2);

// Pairs parameters of equal abstract type, preferring the same position and
// then the nearest one; Unknown never pairs. Returns pairs / max(n1, n2), or
// 1.0 when both lists are empty.
double type_similarity(std::span<const AbstractType> a, std::span<const AbstractType> b);

struct SimilarityScores {
  double name_sim = 0.0;
  double desc_sim = 0.0;
  double count_sim = 0.0;
  double type_sim = 0.0;
  double param_sim = 0.0;
};

// Fills count_sim, type_sim and param_sim = count_sim + type_sim from the
// functional parameters of both records.
SimilarityScores param_similarity(const ApiRecord& a, const ApiRecord& b);

// All five scores for a pair.
SimilarityScores score_pair(const ApiRecord& a, const ApiRecord& b, const EmbeddingProvider& provider);

}  // namespace crossfuzz
