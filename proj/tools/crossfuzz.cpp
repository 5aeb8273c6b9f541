// crossfuzz: match API groups across library corpora, then differentially
// fuzz them against executable backends.
//
// Exit codes: 0 ran (findings may exist), 2 usage/config/input error,
// 3 backend or environment failure.
#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "crossfuzz/backend_spec.hpp"
#include "crossfuzz/campaign.hpp"
#include "crossfuzz/manifest.hpp"
#include "crossfuzz/matcher.hpp"
#include "crossfuzz/worker_backend.hpp"

namespace fs = std::filesystem;
using namespace crossfuzz;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitBackend = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BackendFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string groups;
  std::vector<std::string> backends;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string out;
};

CampaignConfig read_config(const Common& c) {
  CampaignConfig config;
  try {
    if (!c.config.empty()) config = load_config(c.config);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (c.seed) config.master_seed = *c.seed;
  return config;
}

std::vector<BackendSpec> read_specs(const Common& c) {
  if (c.backends.size() < 2) throw UsageError("at least two --backends are required");
  std::vector<BackendSpec> specs;
  try {
    for (const auto& s : c.backends) specs.push_back(parse_backend_spec(s));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return specs;
}

BackendSet start_backends(const std::vector<BackendSpec>& specs) {
  try {
    return make_backends(specs);
  } catch (const std::exception& e) {
    throw BackendFailure(e.what());
  }
}

std::vector<ApiGroup> read_groups(const std::string& path) {
  try {
    return load_match_report(path);
  } catch (const std::exception& e) {
    throw UsageError("group file '" + path + "': " + e.what());
  }
}

// A group ready to run, or the reason it is skipped.
struct Prepared {
  std::optional<SeedPlan> plan;
  std::string skipped;
};

Prepared prepare(const ApiGroup& group, const BackendSet& backends) {
  Prepared p;
  if (!group.fuzzable()) {
    p.skipped = "not aligned: " + group.diagnostic;
    return p;
  }
  if (bind_members(group, backends).size() < 2) {
    p.skipped = "no backend pair exposes this group";
    return p;
  }
  try {
    p.plan = make_plan(group.group_id, *group.aligned, default_hints(group.members[0].normalized_name));
  } catch (const PlanError& e) {
    p.skipped = e.what();
  }
  return p;
}

void write_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw BackendFailure("cannot write '" + path.string() + "'");
  out << body;
}

// Runs `work(group index, backends)` over groups with up to `jobs` shards.
// Each shard owns its backends: workers serve one call at a time.
template <typename Work>
void for_each_group(std::size_t count, std::size_t jobs, const std::vector<BackendSpec>& specs,
                    const BackendSet& shared, Work work) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) work(i, shared);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t j = 0; j < jobs; ++j) {
    pool.emplace_back([&] {
      try {
        const BackendSet own = start_backends(specs);
        for (std::size_t i = next++; i < count; i = next++) work(i, own);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

int cmd_match(const std::vector<std::string>& corpora_paths, const std::string& reference_id,
              const std::string& embeddings, const std::string& aliases_path, std::size_t jobs,
              const std::string& out) {
  if (corpora_paths.size() < 2) throw UsageError("match needs at least two --corpus files");
  std::vector<Corpus> corpora;
  for (const auto& p : corpora_paths) {
    try {
      corpora.push_back(load_corpus(p));
    } catch (const std::exception& e) {
      throw UsageError("corpus '" + p + "': " + e.what());
    }
  }
  std::size_t ref = 0;
  if (!reference_id.empty()) {
    auto it = std::find_if(corpora.begin(), corpora.end(), [&](const Corpus& c) { return c.source_id() == reference_id; });
    if (it == corpora.end()) throw UsageError("no corpus has source '" + reference_id + "'");
    ref = static_cast<std::size_t>(it - corpora.begin());
  }
  std::vector<Corpus> targets;
  for (std::size_t i = 0; i < corpora.size(); ++i) {
    if (i != ref) targets.push_back(corpora[i]);
  }

  AliasMap aliases;
  if (!aliases_path.empty()) {
    try {
      aliases.load(fs::path(aliases_path));
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  }
  std::unique_ptr<EmbeddingProvider> provider;
  try {
    if (embeddings.empty()) {
      provider = std::make_unique<LexicalProvider>(LexicalProvider::from_corpora(corpora));
    } else {
      provider = std::make_unique<PrecomputedProvider>(PrecomputedProvider::load(embeddings));
    }
  } catch (const std::exception& e) {
    throw UsageError(std::string("embeddings: ") + e.what());
  }

  MatchOptions options;
  options.jobs = std::max<std::size_t>(1, jobs);
  MatchResult result;
  try {
    result = build_groups(corpora[ref], targets, *provider, aliases, options);
  } catch (const ProviderError& e) {
    throw BackendFailure(std::string("embedding provider: ") + e.what());
  }

  std::ostringstream groups, stats;
  write_match_report(groups, result.groups);
  write_stage_counts(stats, result.counts);
  if (out.empty()) {
    std::cout << groups.str();
  } else {
    write_file(out, groups.str());
    write_file(out + ".stats.json", stats.str());
  }
  const auto& c = result.counts;
  std::cerr << "references " << c.references << ", stage 1 " << c.stage1 << ", stage 2 " << c.stage2 << ", stage 3 "
            << c.stage3 << ", groups " << c.groups << " (" << c.unaligned << " unaligned)\n";
  return 0;
}

int cmd_fuzz(const Common& common) {
  if (common.out.empty()) throw UsageError("fuzz needs --out DIR");
  const CampaignConfig config = read_config(common);
  const auto specs = read_specs(common);
  const auto groups = read_groups(common.groups);
  BackendSet backends = start_backends(specs);
  std::vector<fs::path> inputs{common.groups};
  if (!common.config.empty()) inputs.push_back(common.config);
  RunManifest manifest = make_manifest("fuzz", config, inputs, backends);

  std::vector<Prepared> prepared;
  for (const auto& g : groups) prepared.push_back(prepare(g, backends));
  std::vector<std::optional<CampaignResult>> results(groups.size());
  for_each_group(groups.size(), common.jobs, specs, backends, [&](std::size_t i, const BackendSet& set) {
    if (!prepared[i].plan) return;
    const auto bindings = bind_members(groups[i], set);
    results[i] = run_campaign(groups[i], *prepared[i].plan, bindings, config);
  });

  std::ostringstream findings, summary, text;
  std::size_t total = 0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (!results[i]) {
      std::cerr << "warning: skipping group " << groups[i].group_id << ": " << prepared[i].skipped << '\n';
      summary << nlohmann::json{{"group_id", groups[i].group_id}, {"skipped", prepared[i].skipped}}.dump() << '\n';
      text << groups[i].group_id << ": skipped (" << prepared[i].skipped << ")\n";
      continue;
    }
    const auto& r = *results[i];
    for (const auto& f : r.findings) findings << to_json(f).dump() << '\n';
    summary << summary_json(r).dump() << '\n';
    std::size_t per[3] = {0, 0, 0};
    for (const auto& f : r.findings) ++per[static_cast<int>(f.oracle)];
    total += r.findings.size();
    text << r.group_id << ": " << r.evaluations << " evaluations, " << r.findings.size() << " findings (crash "
         << per[0] << ", nan " << per[1] << ", inconsistency " << per[2] << ")";
    if (r.aborted) text << ", aborted: " << r.diagnostic;
    text << '\n';
  }
  text << "total: " << total << " findings in " << groups.size() << " groups\n";

  const fs::path dir(common.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw BackendFailure("cannot create '" + dir.string() + "': " + ec.message());
  write_file(dir / "findings.jsonl", findings.str());
  write_file(dir / "summary.jsonl", summary.str());
  write_file(dir / "summary.txt", text.str());
  manifest.finished = utc_timestamp();
  write_file(dir / "manifest.json", to_json(manifest).dump(2) + '\n');
  std::cout << text.str();
  return 0;
}

int cmd_verify(const Common& common) {
  const CampaignConfig config = read_config(common);
  const auto specs = read_specs(common);
  const auto groups = read_groups(common.groups);
  BackendSet backends = start_backends(specs);

  std::vector<Prepared> prepared;
  for (const auto& g : groups) prepared.push_back(prepare(g, backends));
  std::vector<std::optional<VerifyResult>> results(groups.size());
  for_each_group(groups.size(), common.jobs, specs, backends, [&](std::size_t i, const BackendSet& set) {
    if (!prepared[i].plan) return;
    results[i] = verify_group(groups[i], *prepared[i].plan, bind_members(groups[i], set), config);
  });

  std::ostringstream report, text;
  std::size_t passed = 0, ran = 0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (!results[i]) {
      std::cerr << "warning: skipping group " << groups[i].group_id << ": " << prepared[i].skipped << '\n';
      report << nlohmann::json{{"group_id", groups[i].group_id}, {"skipped", prepared[i].skipped}}.dump() << '\n';
      continue;
    }
    const auto& r = *results[i];
    ++ran;
    passed += r.pass ? 1 : 0;
    report << nlohmann::json{{"group_id", r.group_id},
                             {"pass", r.pass},
                             {"seeds", r.seeds_run},
                             {"max_deviation", real_to_json(r.max_deviation)},
                             {"failures", r.failures}}
                  .dump()
           << '\n';
    text << (r.pass ? "PASS " : "FAIL ") << r.group_id << " max deviation " << r.max_deviation << " over "
         << r.seeds_run << " seeds\n";
    for (const auto& f : r.failures) text << "  " << f << '\n';
  }
  text << passed << "/" << ran << " groups passed\n";
  if (!common.out.empty()) write_file(common.out, report.str());
  std::cout << text.str();
  return 0;
}

int cmd_replay(const Common& common, const std::string& finding_path, std::size_t index) {
  const CampaignConfig config = read_config(common);
  const auto specs = read_specs(common);
  const auto groups = read_groups(common.groups);

  std::ifstream in(finding_path);
  if (!in) throw UsageError("cannot open finding file '" + finding_path + "'");
  std::optional<Finding> finding;
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (n++ != index) continue;
    try {
      finding = finding_from_json(nlohmann::json::parse(line));
    } catch (const std::exception& e) {
      throw UsageError("finding " + std::to_string(index) + ": " + e.what());
    }
    break;
  }
  if (!finding) throw UsageError("finding file has no record " + std::to_string(index));
  auto g = std::find_if(groups.begin(), groups.end(), [&](const ApiGroup& x) { return x.group_id == finding->group_id; });
  if (g == groups.end()) throw UsageError("group '" + finding->group_id + "' is not in the group file");

  BackendSet backends = start_backends(specs);
  const Prepared p = prepare(*g, backends);
  if (!p.plan) throw UsageError("group '" + g->group_id + "' cannot be replayed: " + p.skipped);
  ReplayResult r;
  try {
    r = replay(*finding, *g, *p.plan, bind_members(*g, backends), config);
  } catch (const ValidationError& e) {
    throw UsageError(std::string("trigger does not fit the group: ") + e.what());
  }
  for (const auto& o : r.evaluation.outcomes) {
    std::cout << o.backend_id << ": " << to_string(o.status);
    if (o.status == CallStatus::Ok) {
      for (const auto& v : o.outputs) std::cout << ' ' << to_json(v).dump();
    } else {
      std::cout << ' ' << o.error_text;
    }
    std::cout << '\n';
  }
  if (r.evaluation.hit) std::cout << "verdict: " << to_string(r.evaluation.hit->kind) << '\n';
  else std::cout << "verdict: none\n";
  std::cout << (r.reproduced ? "reproduced" : "not reproduced") << '\n';
  return 0;
}

void add_common(CLI::App* cmd, Common& c, bool needs_out) {
  cmd->add_option("--groups", c.groups, "group file written by 'match'")->required();
  cmd->add_option("--backends", c.backends, "ID=ref:stable|ftz or ID=exec:COMMAND (repeatable)")->required();
  cmd->add_option("--config", c.config, "campaign config file (key = value)");
  cmd->add_option("--seed", c.seed, "master seed, overrides the config file");
  cmd->add_option("--jobs", c.jobs, "groups processed in parallel")->check(CLI::PositiveNumber);
  auto* out = cmd->add_option("--out", c.out, needs_out ? "output directory" : "report file");
  if (needs_out) out->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cross-library differential fuzzer"};
  app.require_subcommand(1);

  std::vector<std::string> corpora;
  std::string reference, embeddings, aliases, match_out;
  std::size_t match_jobs = 1;
  auto* match = app.add_subcommand("match", "group equivalent APIs across corpora");
  match->add_option("--corpus", corpora, "JSONL corpus (repeatable)")->required();
  match->add_option("--reference", reference, "source id of the reference corpus (default: first)");
  match->add_option("--embeddings", embeddings, "precomputed description vectors (JSONL)");
  match->add_option("--aliases", aliases, "parameter alias file");
  match->add_option("--jobs", match_jobs, "reference APIs matched in parallel")->check(CLI::PositiveNumber);
  match->add_option("--out", match_out, "group file (default: stdout)");

  Common fuzz_opts, verify_opts, replay_opts;
  add_common(app.add_subcommand("fuzz", "run fuzz campaigns"), fuzz_opts, true);
  add_common(app.add_subcommand("verify", "check groups agree on clean inputs"), verify_opts, false);
  auto* replay_cmd = app.add_subcommand("replay", "re-execute a recorded finding");
  add_common(replay_cmd, replay_opts, false);
  std::string finding;
  std::size_t index = 0;
  replay_cmd->add_option("--finding", finding, "findings file")->required();
  replay_cmd->add_option("--index", index, "record number in the findings file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "match") return cmd_match(corpora, reference, embeddings, aliases, match_jobs, match_out);
    if (name == "fuzz") return cmd_fuzz(fuzz_opts);
    if (name == "verify") return cmd_verify(verify_opts);
    return cmd_replay(replay_opts, finding, index);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const BackendFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBackend;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBackend;
  }
}
