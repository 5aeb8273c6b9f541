#include "crossfuzz/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <thread>

namespace crossfuzz {
namespace {

using nlohmann::json;

bool param_exact(const SimilarityScores& s, const MatchOptions& options) {
  return std::fabs(s.param_sim - 2.0) <= options.param_tolerance;
}

struct ReferenceOutcome {
  std::vector<ApiRecord> accepted;
  StageCounts counts;
};

ReferenceOutcome match_reference(const ApiRecord& reference, std::span<const Corpus> targets,
                                 const EmbeddingProvider& provider, const MatchOptions& options) {
  ReferenceOutcome out;
  for (const auto& target : targets) {
    auto stage1 = stage1_candidates(reference, target, options);
    out.counts.stage1 += stage1.size();
    if (stage1.empty()) continue;
    auto stage2 = stage2_semantic_filter(std::move(stage1), reference, provider, options);
    out.counts.stage2 += stage2.size();
    if (stage2.empty()) continue;
    if (auto best = stage3_structural_verify(std::move(stage2), reference, options)) {
      ++out.counts.stage3;
      out.accepted.push_back(*best->candidate);
    }
  }
  return out;
}

json scores_json(const SimilarityScores& s) {
  return {{"name_sim", s.name_sim},
          {"desc_sim", s.desc_sim},
          {"count_sim", s.count_sim},
          {"type_sim", s.type_sim},
          {"param_sim", s.param_sim}};
}

SimilarityScores scores_from_json(const json& j) {
  SimilarityScores s;
  s.name_sim = j.at("name_sim").get<double>();
  s.desc_sim = j.at("desc_sim").get<double>();
  s.count_sim = j.at("count_sim").get<double>();
  s.type_sim = j.at("type_sim").get<double>();
  s.param_sim = j.at("param_sim").get<double>();
  return s;
}

json record_json(const ApiRecord& r) {
  json params = json::array();
  for (const auto& p : r.params) {
    params.push_back({{"name", p.name},
                      {"type", p.raw_type},
                      {"abstract", to_string(p.abstract_type)},
                      {"role", to_string(p.role)},
                      {"has_default", p.has_default}});
  }
  return {{"source", r.source_id},
          {"name", r.qualified_name},
          {"normalized", r.normalized_name},
          {"description", r.description},
          {"params", std::move(params)}};
}

ApiRecord record_from_json(const json& j) {
  ApiRecord r;
  r.source_id = j.at("source").get<std::string>();
  r.qualified_name = j.at("name").get<std::string>();
  r.normalized_name = j.at("normalized").get<std::string>();
  r.description = j.at("description").get<std::string>();
  for (const auto& p : j.at("params")) {
    ParamSpec spec;
    spec.name = p.at("name").get<std::string>();
    spec.raw_type = p.at("type").get<std::string>();
    spec.abstract_type = abstract_type_from_string(p.at("abstract").get<std::string>());
    spec.role = p.at("role").get<std::string>() == "control" ? ParamRole::Control : ParamRole::Functional;
    spec.has_default = p.value("has_default", false);
    r.params.push_back(std::move(spec));
  }
  return r;
}

}  // namespace

std::vector<MatchCandidate> stage1_candidates(const ApiRecord& reference, const Corpus& target,
                                              const MatchOptions& options) {
  std::vector<MatchCandidate> out;
  for (const auto& record : target.records()) {
    const double sim = name_similarity(reference.normalized_name, record.normalized_name);
    if (sim < options.name_threshold) continue;
    MatchCandidate c;
    c.reference = &reference;
    c.candidate = &record;
    c.scores.name_sim = sim;
    c.stage_reached = 1;
    out.push_back(c);
  }
  return out;
}

std::vector<MatchCandidate> stage2_semantic_filter(std::vector<MatchCandidate> candidates,
                                                   const ApiRecord& reference, const EmbeddingProvider& provider,
                                                   const MatchOptions& options) {
  if (candidates.empty()) return candidates;
  const EmbeddingVector ref_vec = provider.embed(reference);
  for (auto& c : candidates) {
    c.scores.desc_sim = description_similarity(ref_vec, provider.embed(*c.candidate));
    c.stage_reached = 2;
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const MatchCandidate& a, const MatchCandidate& b) {
    if (a.scores.desc_sim != b.scores.desc_sim) return a.scores.desc_sim > b.scores.desc_sim;
    if (a.scores.name_sim != b.scores.name_sim) return a.scores.name_sim > b.scores.name_sim;
    return a.candidate->qualified_name < b.candidate->qualified_name;
  });

  const double s1 = candidates[0].scores.desc_sim;
  if (s1 <= 0.0) return {};
  if (candidates.size() == 1) return candidates;
  const double s2 = candidates[1].scores.desc_sim;
  if ((s1 - s2) / s1 >= options.relative_margin) {
    candidates.resize(1);
    return candidates;
  }
  std::size_t keep = std::min(options.shortlist, candidates.size());
  while (keep < candidates.size() && candidates[keep].scores.desc_sim == s1) ++keep;
  candidates.resize(keep);
  return candidates;
}

std::optional<MatchCandidate> stage3_structural_verify(std::vector<MatchCandidate> candidates,
                                                       const ApiRecord& reference, const MatchOptions& options) {
  std::optional<MatchCandidate> best;
  for (auto& c : candidates) {
    const SimilarityScores p = param_similarity(reference, *c.candidate);
    c.scores.count_sim = p.count_sim;
    c.scores.type_sim = p.type_sim;
    c.scores.param_sim = p.param_sim;
    c.stage_reached = 3;
    if (!param_exact(c.scores, options)) continue;
    const bool better =
        !best || c.scores.desc_sim > best->scores.desc_sim ||
        (c.scores.desc_sim == best->scores.desc_sim &&
         (c.scores.name_sim > best->scores.name_sim ||
          (c.scores.name_sim == best->scores.name_sim &&
           c.candidate->qualified_name < best->candidate->qualified_name)));
    if (better) best = c;
  }
  if (best) best->accepted = true;
  return best;
}

MatchResult build_groups(const Corpus& reference, std::span<const Corpus> targets,
                         const EmbeddingProvider& provider, const AliasMap& aliases, const MatchOptions& options) {
  const auto& refs = reference.records();
  std::vector<ReferenceOutcome> outcomes(refs.size());

  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, refs.size()));
  if (jobs == 1) {
    for (std::size_t i = 0; i < refs.size(); ++i) outcomes[i] = match_reference(refs[i], targets, provider, options);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < refs.size(); i += jobs) {
          outcomes[i] = match_reference(refs[i], targets, provider, options);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  MatchResult result;
  result.counts.references = refs.size();
  for (std::size_t i = 0; i < refs.size(); ++i) {
    auto& outcome = outcomes[i];
    result.counts.stage1 += outcome.counts.stage1;
    result.counts.stage2 += outcome.counts.stage2;
    result.counts.stage3 += outcome.counts.stage3;
    if (outcome.accepted.empty()) continue;

    ApiGroup group;
    group.group_id = refs[i].qualified_name;
    group.members.push_back(refs[i]);
    for (auto& m : outcome.accepted) group.members.push_back(std::move(m));
    for (std::size_t a = 0; a < group.members.size(); ++a) {
      for (std::size_t b = a + 1; b < group.members.size(); ++b) {
        group.pairwise.push_back({a, b, score_pair(group.members[a], group.members[b], provider)});
      }
    }
    try {
      group.aligned = align_signature(group.members, aliases);
    } catch (const AlignmentError& e) {
      group.diagnostic = e.what();
      ++result.counts.unaligned;
    }
    result.groups.push_back(std::move(group));
  }
  result.counts.groups = result.groups.size();
  return result;
}

MatchResult build_groups(const Corpus& reference, std::span<const Corpus> targets,
                         const EmbeddingProvider& provider, const MatchOptions& options) {
  static const AliasMap kDefault;
  return build_groups(reference, targets, provider, kDefault, options);
}

void write_match_report(std::ostream& out, std::span<const ApiGroup> groups) {
  for (const auto& g : groups) {
    json members = json::array();
    for (const auto& m : g.members) members.push_back(record_json(m));
    json pairwise = json::array();
    for (const auto& p : g.pairwise) {
      json entry = scores_json(p.scores);
      entry["a"] = g.members[p.first].qualified_name;
      entry["b"] = g.members[p.second].qualified_name;
      pairwise.push_back(std::move(entry));
    }
    json line = {{"group_id", g.group_id}, {"members", std::move(members)}, {"pairwise", std::move(pairwise)}};
    if (g.aligned) {
      json canonical = json::array();
      for (const auto& c : g.aligned->canonical_params) {
        canonical.push_back({{"name", c.name}, {"type", to_string(c.type)}});
      }
      line["aligned"] = {{"canonical", std::move(canonical)}, {"orders", g.aligned->per_member_order}};
      line["fuzzable"] = true;
    } else {
      line["fuzzable"] = false;
      line["diagnostic"] = g.diagnostic;
    }
    out << line.dump() << '\n';
  }
}

std::vector<ApiGroup> read_match_report(std::istream& in) {
  std::vector<ApiGroup> groups;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      ApiGroup g;
      g.group_id = j.at("group_id").get<std::string>();
      for (const auto& m : j.at("members")) g.members.push_back(record_from_json(m));
      auto index_of = [&](const std::string& name) {
        for (std::size_t i = 0; i < g.members.size(); ++i) {
          if (g.members[i].qualified_name == name) return i;
        }
        throw std::invalid_argument("pairwise score names unknown member '" + name + "'");
      };
      for (const auto& p : j.value("pairwise", json::array())) {
        g.pairwise.push_back({index_of(p.at("a").get<std::string>()), index_of(p.at("b").get<std::string>()),
                              scores_from_json(p)});
      }
      if (j.contains("aligned")) {
        AlignedSignature sig;
        for (const auto& c : j["aligned"].at("canonical")) {
          sig.canonical_params.push_back(
              {c.at("name").get<std::string>(), abstract_type_from_string(c.at("type").get<std::string>())});
        }
        sig.per_member_order = j["aligned"].at("orders").get<std::vector<std::vector<std::size_t>>>();
        if (sig.per_member_order.size() != g.members.size()) {
          throw std::invalid_argument("aligned orders do not cover every member");
        }
        for (const auto& order : sig.per_member_order) {
          if (order.size() != sig.canonical_params.size()) throw std::invalid_argument("aligned order length mismatch");
        }
        g.aligned = std::move(sig);
      } else {
        g.diagnostic = j.value("diagnostic", std::string("not aligned"));
      }
      groups.push_back(std::move(g));
    } catch (const std::exception& e) {
      throw std::invalid_argument("group file line " + std::to_string(number) + ": " + e.what());
    }
  }
  return groups;
}

std::vector<ApiGroup> load_match_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open group file '" + path.string() + "'");
  return read_match_report(in);
}

void write_stage_counts(std::ostream& out, const StageCounts& c) {
  out << json{{"references", c.references}, {"stage1", c.stage1}, {"stage2", c.stage2}, {"stage3", c.stage3},
              {"groups", c.groups}, {"unaligned", c.unaligned}}
             .dump()
      << '\n';
}

}  // namespace crossfuzz
