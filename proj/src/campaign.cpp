#include "crossfuzz/campaign.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "crossfuzz/hash.hpp"

namespace crossfuzz {
namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

double parse_real(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size()) throw std::invalid_argument("config key '" + key + "': expected a number, got '" + value + "'");
  return v;
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
  if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos) {
    throw std::invalid_argument("config key '" + key + "': expected a non-negative integer, got '" + value + "'");
  }
  try {
    return std::stoull(value);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': integer out of range");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw std::invalid_argument("config key '" + key + "': expected a boolean, got '" + value + "'");
}

std::vector<ValueIR> member_args(const ApiGroup& group, std::size_t member, const SeedTuple& seed) {
  return group.aligned->to_member<ValueIR>(member, seed.args);
}

}  // namespace

std::string_view to_string(Strategy s) { return s == Strategy::VarianceGuided ? "guided" : "random"; }

void CampaignConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string("config: ") + name + " must be > 0");
  };
  auto rate = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string("config: ") + name + " must lie in [0, 1]");
  };
  positive(static_cast<double>(tests_per_group), "tests_per_group");
  positive(static_cast<double>(stagnation_limit), "stagnation_limit");
  positive(min_improvement, "min_improvement");
  positive(inconsistency_threshold, "inconsistency_threshold");
  positive(initial_temperature, "initial_temperature");
  positive(temperature_decay, "temperature_decay");
  if (temperature_decay > 1.0) throw std::invalid_argument("config: temperature_decay must be <= 1");
  positive(temperature_floor, "temperature_floor");
  positive(noise_scale, "noise_scale");
  positive(static_cast<double>(timeout.count()), "timeout");
  rate(seeds.edges.element_rate, "edge_element_rate");
  rate(seeds.edges.empty_rate, "edge_empty_rate");
  rate(seeds.edges.repeat_rate, "edge_repeat_rate");
  positive(static_cast<double>(verify_seeds), "verify_seeds");
  positive(verify_tolerance, "verify_tolerance");
}

CampaignConfig parse_config(std::istream& in, CampaignConfig c) {
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key == "tests_per_group") c.tests_per_group = parse_count(key, value);
    else if (key == "stagnation_limit") c.stagnation_limit = parse_count(key, value);
    else if (key == "min_improvement") c.min_improvement = parse_real(key, value);
    else if (key == "inconsistency_threshold") c.inconsistency_threshold = parse_real(key, value);
    else if (key == "initial_temperature") c.initial_temperature = parse_real(key, value);
    else if (key == "temperature_decay") c.temperature_decay = parse_real(key, value);
    else if (key == "temperature_floor") c.temperature_floor = parse_real(key, value);
    else if (key == "noise_scale") c.noise_scale = parse_real(key, value);
    else if (key == "master_seed" || key == "seed") c.master_seed = parse_count(key, value);
    else if (key == "timeout") {
      c.timeout = std::chrono::milliseconds(static_cast<long long>(std::llround(parse_real(key, value) * 1000.0)));
    } else if (key == "edge_element_rate") c.seeds.edges.element_rate = parse_real(key, value);
    else if (key == "edge_empty_rate") c.seeds.edges.empty_rate = parse_real(key, value);
    else if (key == "edge_repeat_rate") c.seeds.edges.repeat_rate = parse_real(key, value);
    else if (key == "pairwise") c.seeds.pairwise = parse_bool(key, value);
    else if (key == "strategy") {
      if (value == "guided") c.strategy = Strategy::VarianceGuided;
      else if (value == "random") c.strategy = Strategy::Random;
      else throw std::invalid_argument("config key 'strategy': expected guided or random");
    } else if (key == "verify_seeds") c.verify_seeds = parse_count(key, value);
    else if (key == "verify_tolerance") c.verify_tolerance = parse_real(key, value);
    else throw std::invalid_argument("config line " + std::to_string(number) + ": unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

CampaignConfig load_config(const std::filesystem::path& path, CampaignConfig base) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file '" + path.string() + "'");
  return parse_config(in, std::move(base));
}

void write_config(std::ostream& out, const CampaignConfig& c) {
  out << "tests_per_group = " << c.tests_per_group << '\n'
      << "stagnation_limit = " << c.stagnation_limit << '\n'
      << "min_improvement = " << c.min_improvement << '\n'
      << "inconsistency_threshold = " << c.inconsistency_threshold << '\n'
      << "initial_temperature = " << c.initial_temperature << '\n'
      << "temperature_decay = " << c.temperature_decay << '\n'
      << "temperature_floor = " << c.temperature_floor << '\n'
      << "noise_scale = " << c.noise_scale << '\n'
      << "master_seed = " << c.master_seed << '\n'
      << "timeout = " << static_cast<double>(c.timeout.count()) / 1000.0 << '\n'
      << "edge_element_rate = " << c.seeds.edges.element_rate << '\n'
      << "edge_empty_rate = " << c.seeds.edges.empty_rate << '\n'
      << "edge_repeat_rate = " << c.seeds.edges.repeat_rate << '\n'
      << "pairwise = " << (c.seeds.pairwise ? "true" : "false") << '\n'
      << "strategy = " << to_string(c.strategy) << '\n'
      << "verify_seeds = " << c.verify_seeds << '\n'
      << "verify_tolerance = " << c.verify_tolerance << '\n';
}

std::string coarse_signature(const SeedTuple& seed) {
  std::string kinds;
  std::set<std::string> edges;
  for (const auto& a : seed.args) {
    if (!kinds.empty()) kinds += ',';
    kinds += to_string(kind_of(a));
    const auto* t = std::get_if<TensorValue>(&a);
    if (t == nullptr) continue;
    kinds += ':';
    kinds += to_string(t->dtype);
    if (t->numel() == 0) edges.insert("empty");
    const double smallest_normal = t->dtype == DType::F64 ? std::numeric_limits<double>::min()
                                                          : static_cast<double>(std::numeric_limits<float>::min());
    for (double v : t->data) {
      if (std::isnan(v)) edges.insert("nan");
      else if (std::isinf(v)) edges.insert("inf");
      else if (v == 0.0 && std::signbit(v)) edges.insert("negzero");
      else if (v != 0.0 && std::fabs(v) < smallest_normal) edges.insert("denormal");
      else if (std::fabs(v) >= 1e30) edges.insert("huge");
    }
  }
  std::string out = kinds + '|';
  bool first = true;
  for (const auto& e : edges) {
    if (!first) out += ',';
    out += e;
    first = false;
  }
  return out;
}

std::string fingerprint(const std::string& group_id, OracleKind oracle, std::span<const std::string> diverging,
                        const SeedTuple& trigger) {
  std::vector<std::string> sorted(diverging.begin(), diverging.end());
  std::sort(sorted.begin(), sorted.end());
  Fnv1a h;
  h.field(group_id).field(to_string(oracle));
  for (const auto& d : sorted) h.field(d);
  h.field(coarse_signature(trigger));
  return h.hex();
}

json to_json(const Finding& f) {
  json outcomes = json::array();
  for (const auto& o : f.outcomes) outcomes.push_back(to_json(o));
  json j = {{"group_id", f.group_id},
            {"oracle", to_string(f.oracle)},
            {"fingerprint", f.fingerprint},
            {"evaluation", f.evaluation},
            {"occurrences", f.occurrences},
            {"diverging", f.diverging},
            {"trigger", to_json(f.trigger)},
            {"outcomes", std::move(outcomes)}};
  if (f.sigma2) j["sigma2"] = real_to_json(*f.sigma2);
  return j;
}

Finding finding_from_json(const json& j) {
  Finding f;
  f.group_id = j.at("group_id").get<std::string>();
  f.oracle = oracle_kind_from_string(j.at("oracle").get<std::string>());
  f.fingerprint = j.value("fingerprint", std::string());
  f.evaluation = j.value("evaluation", std::size_t{0});
  f.occurrences = j.value("occurrences", std::size_t{1});
  f.diverging = j.value("diverging", std::vector<std::string>{});
  f.trigger = seed_from_json(j.at("trigger"));
  for (const auto& o : j.value("outcomes", json::array())) f.outcomes.push_back(outcome_from_json(o));
  if (j.contains("sigma2")) f.sigma2 = real_from_json(j["sigma2"]);
  return f;
}

Evaluation evaluate(const SeedTuple& seed, const ApiGroup& group, std::span<const MemberBinding> bindings,
                    const CampaignConfig& config) {
  if (!group.aligned) throw std::invalid_argument("group '" + group.group_id + "' is not aligned");
  Evaluation ev;
  for (const auto& b : bindings) {
    const auto args = member_args(group, b.member, seed);
    ev.outcomes.push_back(call(*b.backend, group.members[b.member].qualified_name, args, config.timeout));
  }

  std::vector<ExecutionOutcome> ok;
  for (const auto& o : ev.outcomes) {
    if (o.status == CallStatus::Ok) ok.push_back(o);
  }
  if (ok.size() >= 2) {
    ev.variance = compute_variance(ok);
    ev.guidance_sigma2 = ev.variance->sigma2;
  }

  ev.hit = oracle_crash(ev.outcomes);
  if (!ev.hit) ev.hit = oracle_nan(ok);
  if (!ev.hit && ev.variance && oracle_inconsistency(*ev.variance, config.inconsistency_threshold)) {
    ev.hit = OracleHit{OracleKind::Inconsistency, inconsistent_backends(ok)};
  }
  return ev;
}

std::uint64_t group_seed(std::uint64_t master, const std::string& group_id) {
  return derive_seed(master, fnv1a(group_id));
}

CampaignResult run_campaign(const ApiGroup& group, const SeedPlan& plan, std::span<const MemberBinding> bindings,
                            const CampaignConfig& config, bool stop_at_first) {
  config.validate();
  CampaignResult result;
  result.group_id = group.group_id;
  if (bindings.size() < 2) {
    result.aborted = true;
    result.diagnostic = "fewer than two backends expose this group";
    return result;
  }

  const std::uint64_t base = group_seed(config.master_seed, group.group_id);
  Rng rng(derive_seed(base, ~std::uint64_t{0}));
  Annealer annealer(config.initial_temperature, config.temperature_decay, config.temperature_floor);
  std::uint64_t ordinal = 0;
  std::map<std::string, std::size_t> seen;
  bool any_answer = false;

  auto fresh = [&] {
    SeedTuple s = generate_seed(plan, derive_seed(base, ordinal), ordinal, config.seeds);
    ++ordinal;
    return s;
  };

  auto record = [&](const SeedTuple& seed) -> Evaluation {
    Evaluation ev = evaluate(seed, group, bindings, config);
    ++result.evaluations;
    for (const auto& o : ev.outcomes) any_answer |= o.status != CallStatus::Error;
    if (ev.hit) {
      ++result.hits[ev.hit->kind];
      if (!result.first_finding) result.first_finding = result.evaluations;
      const std::string fp = fingerprint(group.group_id, ev.hit->kind, ev.hit->diverging, seed);
      if (auto it = seen.find(fp); it != seen.end()) {
        ++result.findings[it->second].occurrences;
      } else {
        Finding f;
        f.group_id = group.group_id;
        f.oracle = ev.hit->kind;
        f.trigger = seed;
        f.outcomes = ev.outcomes;
        if (ev.hit->kind == OracleKind::Inconsistency) f.sigma2 = ev.variance->sigma2;
        f.diverging = ev.hit->diverging;
        f.fingerprint = fp;
        f.evaluation = result.evaluations;
        seen.emplace(fp, result.findings.size());
        result.findings.push_back(std::move(f));
      }
    }
    return ev;
  };

  auto done = [&] {
    if (stop_at_first && result.first_finding) return true;
    if (!any_answer && result.evaluations >= std::min(config.tests_per_group, config.stagnation_limit)) {
      result.aborted = true;
      result.diagnostic = "every backend returned an error on every input";
      return true;
    }
    return result.evaluations >= config.tests_per_group;
  };

  SeedTuple current = fresh();
  Evaluation current_eval = record(current);
  std::optional<DeviationVector> deviation;
  auto deviation_of = [&](const Evaluation& ev) -> std::optional<DeviationVector> {
    if (!ev.variance || !ev.variance->comparable) return std::nullopt;
    std::vector<ExecutionOutcome> ok;
    for (const auto& o : ev.outcomes) {
      if (o.status == CallStatus::Ok) ok.push_back(o);
    }
    return deviation_vector(ok, *ev.variance);
  };
  deviation = deviation_of(current_eval);
  double current_sigma2 = current_eval.guidance_sigma2;
  std::size_t stagnation = 0;

  while (!done()) {
    if (config.strategy == Strategy::Random) {
      record(fresh());
      continue;
    }
    Mutation m = mutate(current, plan, deviation ? &*deviation : nullptr, rng, annealer.temperature(),
                        MutationOptions{config.noise_scale, MutationClass::None});
    Evaluation ev = record(m.seed);
    const bool improved = ev.guidance_sigma2 >= current_sigma2 + config.min_improvement;
    if (accept(current_sigma2, ev.guidance_sigma2, annealer.temperature(), rng, config.min_improvement)) {
      current = std::move(m.seed);
      current_sigma2 = ev.guidance_sigma2;
      deviation = deviation_of(ev);
      annealer.cool();
      ++result.accepted;
    }
    stagnation = improved ? 0 : stagnation + 1;
    if (stagnation >= config.stagnation_limit && !done()) {
      current = fresh();
      current_eval = record(current);
      current_sigma2 = current_eval.guidance_sigma2;
      deviation = deviation_of(current_eval);
      stagnation = 0;
      ++result.restarts;
    }
  }
  return result;
}

double max_abs_deviation(std::span<const ExecutionOutcome> outcomes) {
  double worst = 0.0;
  std::vector<std::vector<double>> flat;
  for (const auto& o : outcomes) flat.push_back(flatten_outputs(o));
  for (std::size_t a = 0; a < flat.size(); ++a) {
    for (std::size_t b = a + 1; b < flat.size(); ++b) {
      if (flat[a].size() != flat[b].size()) return std::numeric_limits<double>::infinity();
      for (std::size_t e = 0; e < flat[a].size(); ++e) {
        const double x = flat[a][e], y = flat[b][e];
        if (x == y || (std::isnan(x) && std::isnan(y))) continue;
        const double d = std::fabs(x - y);
        worst = std::max(worst, std::isnan(d) ? std::numeric_limits<double>::infinity() : d);
      }
    }
  }
  return worst;
}

VerifyResult verify_group(const ApiGroup& group, const SeedPlan& plan, std::span<const MemberBinding> bindings,
                          const CampaignConfig& config) {
  VerifyResult r;
  r.group_id = group.group_id;
  if (bindings.size() < 2) {
    r.failures.push_back("fewer than two backends expose this group");
    return r;
  }
  SeedOptions clean = config.seeds;
  clean.edges = {};
  const std::uint64_t base = group_seed(config.master_seed, group.group_id);
  for (std::size_t s = 0; s < config.verify_seeds; ++s) {
    const SeedTuple seed = generate_seed(plan, derive_seed(base, s), s, clean);
    const Evaluation ev = evaluate(seed, group, bindings, config);
    ++r.seeds_run;
    std::vector<ExecutionOutcome> ok;
    for (const auto& o : ev.outcomes) {
      if (o.status == CallStatus::Ok) {
        ok.push_back(o);
      } else {
        r.failures.push_back("seed " + std::to_string(s) + ": " + o.backend_id + " " +
                             std::string(to_string(o.status)) + ": " + o.error_text);
      }
    }
    if (ok.size() != ev.outcomes.size()) continue;
    if (ev.variance && !ev.variance->comparable) {
      r.failures.push_back("seed " + std::to_string(s) + ": output structure differs");
      r.max_deviation = std::numeric_limits<double>::infinity();
      continue;
    }
    const double d = max_abs_deviation(ok);
    r.max_deviation = std::max(r.max_deviation, d);
    if (!(d < config.verify_tolerance)) {
      std::ostringstream msg;
      msg << "seed " << s << ": max deviation " << d;
      r.failures.push_back(msg.str());
    }
  }
  r.pass = r.failures.empty();
  return r;
}

ReplayResult replay(const Finding& finding, const ApiGroup& group, const SeedPlan& plan,
                    std::span<const MemberBinding> bindings, const CampaignConfig& config) {
  validate_seed(finding.trigger, plan);
  ReplayResult r;
  r.evaluation = evaluate(finding.trigger, group, bindings, config);
  r.reproduced = r.evaluation.hit && r.evaluation.hit->kind == finding.oracle;
  return r;
}

json summary_json(const CampaignResult& r) {
  auto count = [&](OracleKind k) {
    auto it = r.hits.find(k);
    return it == r.hits.end() ? std::size_t{0} : it->second;
  };
  std::size_t unique_crash = 0, unique_nan = 0, unique_inconsistency = 0;
  for (const auto& f : r.findings) {
    if (f.oracle == OracleKind::Crash) ++unique_crash;
    else if (f.oracle == OracleKind::NaN) ++unique_nan;
    else ++unique_inconsistency;
  }
  json j = {{"group_id", r.group_id},
            {"evaluations", r.evaluations},
            {"restarts", r.restarts},
            {"accepted", r.accepted},
            {"findings", {{"crash", unique_crash}, {"nan", unique_nan}, {"inconsistency", unique_inconsistency}}},
            {"hits", {{"crash", count(OracleKind::Crash)}, {"nan", count(OracleKind::NaN)},
                      {"inconsistency", count(OracleKind::Inconsistency)}}},
            {"aborted", r.aborted}};
  if (r.first_finding) j["first_finding"] = *r.first_finding;
  if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
  return j;
}

}  // namespace crossfuzz
