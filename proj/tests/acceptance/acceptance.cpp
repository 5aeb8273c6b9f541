// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "crossfuzz/backend_spec.hpp"
#include "crossfuzz/campaign.hpp"
#include "crossfuzz/fuzz.hpp"
#include "crossfuzz/matcher.hpp"
#include "crossfuzz/reference_backend.hpp"
#include "crossfuzz/similarity.hpp"

using namespace crossfuzz;
namespace fs = std::filesystem;

namespace {

const std::string kData = std::string(CROSSFUZZ_SOURCE_DIR) + "/data";
const double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Check {
  bool ok = true;
  std::string detail;
  void expect(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

int failures = 0;

void criterion(const std::string& name, double limit_s, const std::function<void(Check&)>& body) {
  Check c;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (c.ok && s >= limit_s) c.expect(false, "took " + std::to_string(s) + "s, limit " + std::to_string(limit_s) + "s");
  std::printf("%s %-28s %8.3fs%s%s\n", c.ok ? "PASS" : "FAIL", name.c_str(), s, c.ok ? "" : "  ", c.detail.c_str());
  std::fflush(stdout);
  failures += !c.ok;
}

std::vector<std::int64_t> indices(const ExecutionOutcome& o) {
  if (o.status != CallStatus::Ok || o.outputs.size() != 1) return {};
  return std::get<TensorValue>(o.outputs[0]).ints;
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(CROSSFUZZ_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Independent reference for edit distance: plain recursion.
std::size_t brute_levenshtein(const std::string& a, const std::string& b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  const std::string ta = a.substr(1), tb = b.substr(1);
  if (a[0] == b[0]) return brute_levenshtein(ta, tb);
  return 1 + std::min({brute_levenshtein(ta, b), brute_levenshtein(a, tb), brute_levenshtein(ta, tb)});
}

// Sorts ascending and agrees with a stable sort, except that while the scalar
// sits in [0.9, 1.0] equal elements come out in reverse order.
class GatedSortBackend final : public Backend {
 public:
  GatedSortBackend(std::string id, bool faulty) : id_(std::move(id)), faulty_(faulty) {}
  const std::string& id() const override { return id_; }
  std::vector<std::string> manifest() const override { return {"gated.sort"}; }
  bool supports(std::string_view api) const override { return api == "gated.sort"; }
  std::string version() const override { return faulty_ ? "gated-faulty" : "gated-clean"; }

  ExecutionOutcome invoke(std::string_view, std::span<const ValueIR> args, std::chrono::milliseconds) override {
    const auto& t = std::get<TensorValue>(args[0]);
    const double alpha = std::get<ScalarValue>(args[1]).value;
    std::vector<std::int64_t> idx(t.data.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::int64_t>(i);
    const bool gate = faulty_ && alpha >= 0.9 && alpha <= 1.0;
    std::stable_sort(idx.begin(), idx.end(), [&](std::int64_t a, std::int64_t b) {
      const double x = t.data[static_cast<std::size_t>(a)], y = t.data[static_cast<std::size_t>(b)];
      if (x == y) return gate && a > b;
      if (std::isnan(x) || std::isnan(y)) return !std::isnan(x) && std::isnan(y);
      return x < y;
    });
    ExecutionOutcome o;
    o.status = CallStatus::Ok;
    const auto n = static_cast<std::int64_t>(idx.size());
    o.outputs = {make_index_tensor({n}, std::move(idx))};
    return o;
  }

 private:
  std::string id_;
  bool faulty_;
};

ApiGroup gated_group() {
  ApiGroup g;
  g.group_id = "gated.sort";
  for (const char* src : {"clean", "faulty"}) {
    ApiRecord r;
    r.source_id = src;
    r.qualified_name = "gated.sort";
    r.normalized_name = "sort";
    r.params = {{"x", "Tensor", AbstractType::Tensor}, {"alpha", "float", AbstractType::Float}};
    g.members.push_back(r);
  }
  g.aligned = AlignedSignature{{{"x", AbstractType::Tensor}, {"alpha", AbstractType::Float}}, {{0, 1}, {0, 1}}};
  return g;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace

int main() {
  criterion("argsort_signed_zero", 1.0, [](Check& c) {
    const std::vector<double> x = {-0.0, 1.401298464324817e-45, 1.100000023841858, -0.0, 5.960464477539063e-08,
                                   -2.0000000135803223, 1000000.0, 722801.375, 0.0, -1.100000023841858};
    const std::vector<ValueIR> args = {make_tensor(DType::F32, {10}, x), IndexValue{0}};
    ReferenceBackend stable("stable", ReferenceVariant::Stable);
    ReferenceBackend ftz("ftz", ReferenceVariant::FlushTiesToZero);
    const std::vector<ExecutionOutcome> o = {call(stable, "torch.argsort", args), call(ftz, "tf.argsort", args)};
    c.expect(indices(o[0]) == std::vector<std::int64_t>{5, 9, 0, 3, 8, 1, 4, 2, 7, 6}, "stable row");
    c.expect(indices(o[1]) == std::vector<std::int64_t>{5, 9, 0, 1, 3, 8, 4, 2, 7, 6}, "ftz row");
    c.expect(oracle_inconsistency(compute_variance(o), 0.1), "inconsistency oracle silent");
  });

  criterion("angle_complex_nan", 1.0, [](Check& c) {
    const std::vector<ValueIR> args = {make_tensor(DType::C64, {1}, {kNaN, kNaN})};
    ReferenceBackend stable("stable", ReferenceVariant::Stable);
    ReferenceBackend ftz("ftz", ReferenceVariant::FlushTiesToZero);
    const std::vector<ExecutionOutcome> o = {call(stable, "tf.math.angle", args), call(ftz, "torch.angle", args)};
    c.expect(o[0].status == CallStatus::Ok && o[1].status == CallStatus::Ok, "call failed");
    c.expect(std::isnan(std::get<TensorValue>(o[0].outputs[0]).data[0]), "propagating backend not NaN");
    c.expect(std::get<TensorValue>(o[1].outputs[0]).data[0] == 0.0, "masking backend not 0.0");
    const auto hit = oracle_nan(o);
    c.expect(hit && hit->diverging == std::vector<std::string>{"stable"}, "nan oracle");
  });

  criterion("matching_lookalikes", 5.0, [](Check& c) {
    std::vector<Corpus> corpora;
    for (const char* lib : {"pytorch", "tensorflow", "keras", "chainer", "jax"})
      corpora.push_back(load_corpus(kData + "/lookalikes/" + lib + ".jsonl"));
    for (const auto& k : corpora) c.expect(k.size() >= 11, k.source_id() + " has fewer than 11 APIs");
    const std::vector<Corpus> targets(corpora.begin() + 1, corpora.end());
    const auto provider = LexicalProvider::from_corpora(corpora);
    const auto result = build_groups(corpora[0], targets, provider);
    c.expect(result.groups.size() == 1, std::to_string(result.groups.size()) + " groups");
    if (result.groups.size() != 1) return;
    const auto& g = result.groups[0];
    c.expect(g.members.size() == 5, "group size");
    std::set<std::string> sources;
    for (const auto& m : g.members) {
      sources.insert(m.source_id);
      c.expect(m.normalized_name == "argsort", m.qualified_name);
    }
    c.expect(sources.size() == 5, "sources");
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < g.members.size(); ++i)
      for (std::size_t j = i + 1; j < g.members.size(); ++j, ++pairs) {
        const auto s = score_pair(g.members[i], g.members[j], provider);
        c.expect(s.name_sim == 1.0, "name_sim " + g.members[i].qualified_name + " " + g.members[j].qualified_name);
        c.expect(s.param_sim == 2.0, "param_sim " + g.members[i].qualified_name + " " + g.members[j].qualified_name);
      }
    c.expect(pairs == 10, "pairs");
  });

  criterion("verify_arithmetic", 30.0, [](Check& c) {
    const fs::path report = fs::temp_directory_path() / ("crossfuzz_accept_verify_" + std::to_string(::getpid()));
    const int rc = run_cli("verify --groups " + kData + "/refops/groups.jsonl --backends liba=ref:stable "
                           "--backends libb=ref:ftz --out " + report.string());
    c.expect(rc == 0, "exit " + std::to_string(rc));
    std::map<std::string, nlohmann::json> rows;
    std::istringstream in(slurp(report));
    for (std::string line; std::getline(in, line);) {
      if (line.empty()) continue;
      auto j = nlohmann::json::parse(line);
      rows[j["group_id"].get<std::string>()] = j;
    }
    fs::remove(report);
    for (const char* op : {"add", "mul", "matmul", "relu", "softmax", "mean", "sum"}) {
      const auto it = rows.find(std::string("liba.") + op);
      c.expect(it != rows.end(), std::string("missing ") + op);
      if (it == rows.end()) continue;
      c.expect(it->second["pass"] == true, std::string(op) + " failed");
      c.expect(it->second["seeds"] == 10, std::string(op) + " seeds");
      c.expect(it->second["max_deviation"].get<double>() < 0.001, std::string(op) + " deviation");
    }
  });

  criterion("guided_vs_random", 300.0, [](Check& c) {
    const ApiGroup g = gated_group();
    const SeedPlan plan = make_plan(g.group_id, *g.aligned, GenerationHints{1, 1, 6, DType::F32});
    GatedSortBackend clean("clean", false), faulty("faulty", true);
    const std::vector<MemberBinding> bindings = {{0, &clean}, {1, &faulty}};
    std::map<Strategy, std::vector<double>> firsts;
    std::map<Strategy, std::size_t> found;
    for (Strategy s : {Strategy::VarianceGuided, Strategy::Random}) {
      for (std::uint64_t trial = 0; trial < 20; ++trial) {
        CampaignConfig config;
        config.tests_per_group = 5000;
        config.master_seed = 1000 + trial;
        config.strategy = s;
        const auto r = run_campaign(g, plan, bindings, config, true);
        found[s] += r.first_finding.has_value();
        firsts[s].push_back(r.first_finding ? static_cast<double>(*r.first_finding)
                                            : std::numeric_limits<double>::infinity());
      }
    }
    const double guided = median(firsts[Strategy::VarianceGuided]);
    const double random = median(firsts[Strategy::Random]);
    std::printf("     guided median %.1f (%zu/20 found), random median %.1f (%zu/20 found)\n", guided,
                found[Strategy::VarianceGuided], random, found[Strategy::Random]);
    c.expect(std::isfinite(guided), "guided never found the divergence");
    c.expect(guided <= random, "guided median above random");
  });

  criterion("formula_properties", 120.0, [](Check& c) {
    constexpr int N = 10000;
    Rng rng(2024);
    auto word = [&](std::size_t max_len, const char* alphabet) {
      std::string s(rng.below(max_len + 1), ' ');
      const std::size_t n = std::char_traits<char>::length(alphabet);
      for (auto& ch : s) ch = alphabet[rng.below(n)];
      return s;
    };
    for (int i = 0; i < N && c.ok; ++i) {
      const std::string a = word(6, "abc"), b = word(6, "abc");
      c.expect(levenshtein(a, b) == brute_levenshtein(a, b), "levenshtein('" + a + "','" + b + "')");
    }
    for (int i = 0; i < N && c.ok; ++i) {
      const std::string a = word(12, "abcdefg_"), b = word(12, "abcdefg_");
      const double s = name_similarity(a, b);
      c.expect(s >= 0.0 && s <= 1.0, "name_sim bounds");
      c.expect(s == name_similarity(b, a), "name_sim symmetry");
      c.expect(name_similarity(a, a) == 1.0, "name_sim identity");
    }
    const std::vector<AbstractType> pool = {AbstractType::Tensor, AbstractType::Int, AbstractType::Float,
                                            AbstractType::Bool, AbstractType::Unknown};
    for (int i = 0; i < N && c.ok; ++i) {
      std::vector<AbstractType> x(rng.below(6)), y(rng.below(6));
      for (auto& t : x) t = pool[rng.below(pool.size())];
      for (auto& t : y) t = pool[rng.below(pool.size())];
      const double cs = count_similarity(x.size(), y.size());
      const double ts = type_similarity(x, y);
      c.expect(cs >= 0.0 && cs <= 1.0 && ts >= 0.0 && ts <= 1.0, "param bounds");
      c.expect(cs == count_similarity(y.size(), x.size()), "count_sim symmetry");
      c.expect(std::abs(ts - type_similarity(y, x)) < 1e-12, "type_sim symmetry");
      c.expect(cs + ts >= 0.0 && cs + ts <= 2.0, "param_sim bounds");
    }
    for (int i = 0; i < N && c.ok; ++i) {
      const std::size_t k = 2 + rng.below(4), n = 1 + rng.below(8);
      const bool same = rng.bernoulli(0.3);
      std::vector<double> base(n);
      for (auto& v : base) v = rng.normal() * std::pow(10.0, static_cast<double>(rng.below(7)) - 3.0);
      std::vector<ExecutionOutcome> outs;
      for (std::size_t b = 0; b < k; ++b) {
        std::vector<double> d = base;
        if (!same)
          for (auto& v : d) v += rng.normal();
        ExecutionOutcome o;
        o.backend_id = "b" + std::to_string(b);
        o.status = CallStatus::Ok;
        o.outputs = {make_tensor(DType::F64, {static_cast<std::int64_t>(n)}, d)};
        outs.push_back(o);
      }
      bool identical_all = true;
      for (std::size_t b = 1; b < k; ++b) identical_all = identical_all && identical(outs[b].outputs[0], outs[0].outputs[0]);
      const auto v = compute_variance(outs);
      c.expect(v.sigma2 >= 0.0, "variance negative");
      c.expect((v.sigma2 == 0.0) == identical_all, "zero iff identical");
      const auto dev = deviation_vector(outs, v);
      for (std::size_t e = 0; e < n; ++e) {
        double sum = 0.0, scale = 0.0;
        for (const auto& row : dev.deviations) {
          sum += row[e];
          scale = std::max(scale, std::abs(row[e]));
        }
        c.expect(std::abs(sum) <= 1e-9 * static_cast<double>(k) * std::max(1.0, scale), "deviations do not sum to zero");
      }
    }
    for (int i = 0; i < N && c.ok; ++i) {
      const double old_s = rng.uniform(0.0, 1.0), new_s = old_s - rng.uniform(1e-3, 1.0);
      c.expect(!accept(old_s, new_s, 0.0, rng), "regression accepted at T=0");
      c.expect(!accept(old_s, new_s, 1e-12, rng), "regression accepted as T->0");
      c.expect(accept(old_s, old_s + 0.001 + rng.uniform(0.0, 1.0), 1e-12, rng), "improvement rejected");
    }
    int hot = 0;
    for (int i = 0; i < N; ++i) hot += accept(1.0, 0.5, 1e9, rng);
    c.expect(hot > N * 99 / 100, "T->inf should accept nearly always");
  });

  criterion("determinism", 60.0, [](Check& c) {
    const fs::path dir = fs::temp_directory_path() / ("crossfuzz_accept_det_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    const std::string common = "fuzz --groups " + kData + "/refops/groups.jsonl --backends liba=ref:stable "
                               "--backends libb=ref:ftz --config " + kData + "/refops/demo.conf --out ";
    c.expect(run_cli(common + (dir / "a").string()) == 0, "first run");
    c.expect(run_cli(common + (dir / "b").string()) == 0, "second run");
    const auto a = slurp(dir / "a" / "findings.jsonl");
    c.expect(!a.empty(), "no findings");
    c.expect(a == slurp(dir / "b" / "findings.jsonl"), "findings differ");
    fs::remove_all(dir);
  });

  std::printf("%s\n", failures == 0 ? "ALL PASS" : (std::to_string(failures) + " FAILED").c_str());
  return failures == 0 ? 0 : 1;
}
