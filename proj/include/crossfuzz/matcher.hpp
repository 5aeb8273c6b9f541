#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "crossfuzz/align.hpp"
#include "crossfuzz/corpus.hpp"
#include "crossfuzz/similarity.hpp"

namespace crossfuzz {

struct MatchOptions {
  double name_threshold = 0.5;
  double relative_margin = 0.3;
  std::size_t shortlist = 3;
  double param_tolerance = 1e-9;
  std::size_t jobs = 1;
};

// References point into corpora that must outlive the candidate.
struct MatchCandidate {
  const ApiRecord* reference = nullptr;
  const ApiRecord* candidate = nullptr;
  SimilarityScores scores;
  int stage_reached = 1;
  bool accepted = false;
};

struct PairScore {
  std::size_t first = 0;
  std::size_t second = 0;
  SimilarityScores scores;
};

struct ApiGroup {
  std::string group_id;
  std::vector<ApiRecord> members;  // members[0] is the reference API
  std::vector<PairScore> pairwise;
  std::optional<AlignedSignature> aligned;
  std::string diagnostic;  // set when alignment failed

  bool fuzzable() const { return aligned.has_value(); }
};

struct StageCounts {
  std::size_t references = 0;
  std::size_t stage1 = 0;  // candidates surviving the name filter
  std::size_t stage2 = 0;  // candidates surviving the semantic filter
  std::size_t stage3 = 0;  // accepted matches
  std::size_t groups = 0;
  std::size_t unaligned = 0;
};

struct MatchResult {
  std::vector<ApiGroup> groups;
  StageCounts counts;
};

std::vector<MatchCandidate> stage1_candidates(const ApiRecord& reference, const Corpus& target,
                                              const MatchOptions& options = {});

// Ranks by description similarity. Keeps the leader alone when its relative
// margin (s1 - s2) / s1 reaches the threshold, otherwise the shortlist plus any
// candidates tied with the leader. Empty when the best score is not positive.
std::vector<MatchCandidate> stage2_semantic_filter(std::vector<MatchCandidate> candidates,
                                                   const ApiRecord& reference, const EmbeddingProvider& provider,
                                                   const MatchOptions& options = {});

// Highest desc_sim among candidates with param_sim == 2, ties broken by
// name_sim then qualified name.
std::optional<MatchCandidate> stage3_structural_verify(std::vector<MatchCandidate> candidates,
                                                       const ApiRecord& reference,
                                                       const MatchOptions& options = {});

MatchResult build_groups(const Corpus& reference, std::span<const Corpus> targets,
                         const EmbeddingProvider& provider, const AliasMap& aliases,
                         const MatchOptions& options = {});
MatchResult build_groups(const Corpus& reference, std::span<const Corpus> targets,
                         const EmbeddingProvider& provider, const MatchOptions& options = {});

// One JSON object per line per group.
void write_match_report(std::ostream& out, std::span<const ApiGroup> groups);
std::vector<ApiGroup> read_match_report(std::istream& in);
std::vector<ApiGroup> load_match_report(const std::filesystem::path& path);

void write_stage_counts(std::ostream& out, const StageCounts& counts);

}  // namespace crossfuzz
