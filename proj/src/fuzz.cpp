#include "crossfuzz/fuzz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace crossfuzz {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Output structure used for comparability: kind, shape, and whether the
// values are integral.
struct Layout {
  std::vector<std::pair<ValueKind, std::vector<std::int64_t>>> parts;
  bool integral = true;
};

Layout layout_of(const ExecutionOutcome& o) {
  Layout l;
  for (const auto& v : o.outputs) {
    if (const auto* t = std::get_if<TensorValue>(&v)) {
      auto shape = t->shape;
      if (t->dtype == DType::C64) shape.push_back(-2);  // complex differs from real of the same shape
      l.parts.emplace_back(ValueKind::Tensor, std::move(shape));
      l.integral &= is_integral(t->dtype);
    } else if (const auto* s = std::get_if<ShapeValue>(&v)) {
      l.parts.emplace_back(ValueKind::Shape, std::vector<std::int64_t>{static_cast<std::int64_t>(s->dims.size())});
    } else {
      l.parts.emplace_back(kind_of(v), std::vector<std::int64_t>{});
      l.integral &= !std::holds_alternative<ScalarValue>(v);
    }
  }
  return l;
}

bool equal_or_both_nan(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

bool floating_tensor(const ValueIR& v) {
  const auto* t = std::get_if<TensorValue>(&v);
  return t != nullptr && !is_integral(t->dtype) && t->numel() > 0;
}

double narrow(DType dtype, double v) {
  return dtype == DType::F32 || dtype == DType::C64 ? static_cast<double>(static_cast<float>(v)) : v;
}

}  // namespace

std::vector<double> flatten_outputs(const ExecutionOutcome& outcome) {
  std::vector<double> flat;
  for (const auto& v : outcome.outputs) {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, TensorValue>) {
            if (x.dtype == DType::I64) {
              for (auto i : x.ints) flat.push_back(static_cast<double>(i));
            } else {
              flat.insert(flat.end(), x.data.begin(), x.data.end());
            }
          } else if constexpr (std::is_same_v<T, ScalarValue>) {
            flat.push_back(x.value);
          } else if constexpr (std::is_same_v<T, IndexValue>) {
            flat.push_back(static_cast<double>(x.value));
          } else if constexpr (std::is_same_v<T, ShapeValue>) {
            for (auto d : x.dims) flat.push_back(static_cast<double>(d));
          } else {
            flat.push_back(x.value ? 1.0 : 0.0);
          }
        },
        v);
  }
  return flat;
}

VarianceResult compute_variance(std::span<const ExecutionOutcome> outcomes) {
  if (outcomes.size() < 2) throw std::invalid_argument("compute_variance needs at least two outcomes");
  for (const auto& o : outcomes) {
    if (o.status != CallStatus::Ok) throw std::invalid_argument("compute_variance needs Ok outcomes");
  }
  VarianceResult r;
  const Layout first = layout_of(outcomes[0]);
  r.integral = first.integral;
  for (std::size_t i = 1; i < outcomes.size(); ++i) {
    const Layout other = layout_of(outcomes[i]);
    if (other.parts != first.parts) {
      r.comparable = false;
      r.sigma2 = kInf;
      return r;
    }
    r.integral &= other.integral;
  }

  std::vector<std::vector<double>> flat;
  for (const auto& o : outcomes) flat.push_back(flatten_outputs(o));
  const std::size_t elements = flat[0].size();
  const double n = static_cast<double>(outcomes.size());
  r.mean.assign(elements, 0.0);
  r.variance.assign(elements, 0.0);

  double max_variance = 0.0;
  for (std::size_t e = 0; e < elements; ++e) {
    bool all_equal = true;
    bool any_nan = false, any_inf = false;
    for (const auto& f : flat) {
      all_equal &= equal_or_both_nan(f[e], flat[0][e]);
      any_nan |= std::isnan(f[e]);
      any_inf |= std::isinf(f[e]);
    }
    if (all_equal) {
      r.mean[e] = flat[0][e];
      continue;
    }
    ++r.mismatches;
    if (any_nan || any_inf) {
      r.mean[e] = std::numeric_limits<double>::quiet_NaN();
      r.variance[e] = kInf;
      max_variance = kInf;
      continue;
    }
    double sum = 0.0;
    for (const auto& f : flat) sum += f[e];
    const double mu = sum / n;
    double sq = 0.0;
    for (const auto& f : flat) sq += (f[e] - mu) * (f[e] - mu);
    r.mean[e] = mu;
    r.variance[e] = std::max(sq / n, std::numeric_limits<double>::denorm_min());
    max_variance = std::max(max_variance, r.variance[e]);
  }

  if (r.integral) {
    r.sigma2 = elements == 0 ? 0.0 : static_cast<double>(r.mismatches) / static_cast<double>(elements);
  } else {
    r.sigma2 = max_variance;
  }
  return r;
}

std::size_t DeviationVector::dominant() const {
  std::size_t best = 0;
  double best_norm = -1.0;
  for (std::size_t i = 0; i < deviations.size(); ++i) {
    double norm = 0.0;
    for (double d : deviations[i]) norm += d * d;
    if (norm > best_norm) {
      best_norm = norm;
      best = i;
    }
  }
  return best;
}

DeviationVector deviation_vector(std::span<const ExecutionOutcome> outcomes, const VarianceResult& variance) {
  DeviationVector dev;
  if (!variance.comparable) return dev;
  for (const auto& o : outcomes) {
    std::vector<double> flat = flatten_outputs(o);
    if (flat.size() != variance.mean.size()) throw std::invalid_argument("deviation: output length mismatch");
    for (std::size_t e = 0; e < flat.size(); ++e) {
      const double d = flat[e] - variance.mean[e];
      flat[e] = std::isfinite(variance.mean[e]) && std::isfinite(d) ? d : 0.0;
    }
    dev.backend_ids.push_back(o.backend_id);
    dev.deviations.push_back(std::move(flat));
  }
  return dev;
}

bool accept(double old_sigma2, double new_sigma2, double temperature, Rng& rng, double min_improvement) {
  if (new_sigma2 >= old_sigma2 + min_improvement) return true;
  if (temperature <= 0.0) return false;
  const double drop = old_sigma2 - new_sigma2;
  if (std::isnan(drop)) return false;
  const double probability = drop <= 0.0 ? 1.0 : std::exp(-drop / temperature);
  return rng.bernoulli(probability);
}

std::string_view to_string(MutationClass m) {
  switch (m) {
    case MutationClass::TensorNoise: return "tensor_noise";
    case MutationClass::FlagToggle: return "flag_toggle";
    case MutationClass::ScalarNudge: return "scalar_nudge";
    case MutationClass::EdgeInjection: return "edge_injection";
    case MutationClass::None: return "none";
  }
  return "none";
}

namespace {

// Injected edge values survive noise; only ordinary elements are perturbed.
bool edge_element(DType dtype, double v) {
  if (!std::isfinite(v) || v == 0.0 || std::fabs(v) >= 1e30) return true;
  const double smallest_normal =
      dtype == DType::F64 ? std::numeric_limits<double>::min() : static_cast<double>(std::numeric_limits<float>::min());
  return std::fabs(v) < smallest_normal;
}

}  // namespace

Mutation mutate(const SeedTuple& seed, const SeedPlan& plan, const DeviationVector* deviation, Rng& rng,
                double temperature, const MutationOptions& options) {
  std::vector<std::size_t> tensors, flags, scalars;
  for (std::size_t i = 0; i < seed.args.size(); ++i) {
    if (floating_tensor(seed.args[i])) tensors.push_back(i);
    if (std::holds_alternative<FlagValue>(seed.args[i])) flags.push_back(i);
    if (std::holds_alternative<ScalarValue>(seed.args[i]) || std::holds_alternative<IndexValue>(seed.args[i])) {
      scalars.push_back(i);
    }
  }
  std::vector<MutationClass> applicable;
  if (!tensors.empty()) applicable.push_back(MutationClass::TensorNoise);
  if (!flags.empty()) applicable.push_back(MutationClass::FlagToggle);
  if (!scalars.empty()) applicable.push_back(MutationClass::ScalarNudge);
  if (!tensors.empty()) applicable.push_back(MutationClass::EdgeInjection);

  Mutation m{seed, MutationClass::None};
  if (options.only != MutationClass::None) {
    if (std::find(applicable.begin(), applicable.end(), options.only) == applicable.end()) return m;
    m.applied = options.only;
  } else {
    if (applicable.empty()) return m;
    m.applied = applicable[rng.below(applicable.size())];
  }

  auto pick = [&](const std::vector<std::size_t>& from) { return from[rng.below(from.size())]; };

  switch (m.applied) {
    case MutationClass::TensorNoise: {
      auto& t = std::get<TensorValue>(m.seed.args[pick(tensors)]);
      const std::size_t width = t.dtype == DType::C64 ? 2 : 1;
      std::vector<double> weights;
      if (deviation != nullptr && !deviation->deviations.empty()) {
        const auto& d = deviation->deviations[deviation->dominant()];
        if (d.size() == t.numel()) {
          double peak = 0.0;
          for (double v : d) peak = std::max(peak, std::fabs(v));
          if (peak > 0.0) {
            for (double v : d) weights.push_back(std::fabs(v) / peak);
          }
        }
      }
      const double scale = options.noise_scale * temperature;
      for (std::size_t i = 0; i < t.data.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i / width];
        const double g = rng.normal();
        if (scale == 0.0 || w == 0.0 || edge_element(t.dtype, t.data[i])) continue;
        t.data[i] = narrow(t.dtype, t.data[i] + scale * w * g);
      }
      break;
    }
    case MutationClass::FlagToggle: {
      auto& f = std::get<FlagValue>(m.seed.args[pick(flags)]);
      f.value = !f.value;
      break;
    }
    case MutationClass::ScalarNudge: {
      const std::size_t i = pick(scalars);
      if (auto* s = std::get_if<ScalarValue>(&m.seed.args[i])) {
        // A zero would never move under a multiplicative nudge; resample it.
        double v = s->value == 0.0 || !std::isfinite(s->value) ? rng.uniform() : s->value * rng.uniform(0.5, 2.0);
        v = std::clamp(v, 0.0, 1.0);
        if (i < plan.args.size() && plan.args[i].integral) v = std::round(v);
        s->value = v;
      } else {
        int rank = 1;
        if (plan.anchor) rank = std::max(1, std::get<TensorValue>(m.seed.args[*plan.anchor]).rank());
        std::get<IndexValue>(m.seed.args[i]).value = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(rank)));
      }
      break;
    }
    case MutationClass::EdgeInjection: {
      auto& t = std::get<TensorValue>(m.seed.args[pick(tensors)]);
      const auto edges = edge_values(t.dtype);
      const std::size_t element = rng.below(t.numel());
      const double e = edges[rng.below(edges.size())];
      if (t.dtype == DType::C64) {
        switch (rng.below(3)) {
          case 0: t.data[2 * element] = e; break;
          case 1: t.data[2 * element + 1] = e; break;
          default: t.data[2 * element] = t.data[2 * element + 1] = e;
        }
      } else {
        t.data[element] = e;
      }
      break;
    }
    case MutationClass::None: break;
  }
  return m;
}

std::string_view to_string(OracleKind kind) {
  switch (kind) {
    case OracleKind::Crash: return "crash";
    case OracleKind::NaN: return "nan";
    case OracleKind::Inconsistency: return "inconsistency";
  }
  return "crash";
}

OracleKind oracle_kind_from_string(std::string_view text) {
  for (auto k : {OracleKind::Crash, OracleKind::NaN, OracleKind::Inconsistency}) {
    if (text == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown oracle '" + std::string(text) + "'");
}

std::optional<OracleHit> oracle_crash(std::span<const ExecutionOutcome> outcomes) {
  OracleHit hit{OracleKind::Crash, {}};
  for (const auto& o : outcomes) {
    if (o.status == CallStatus::Crash || o.status == CallStatus::Timeout) hit.diverging.push_back(o.backend_id);
  }
  if (hit.diverging.empty()) return std::nullopt;
  std::sort(hit.diverging.begin(), hit.diverging.end());
  return hit;
}

std::optional<OracleHit> oracle_nan(std::span<const ExecutionOutcome> outcomes) {
  OracleHit hit{OracleKind::NaN, {}};
  std::size_t clean = 0;
  for (const auto& o : outcomes) {
    if (o.status != CallStatus::Ok) continue;
    if (o.nan_present) hit.diverging.push_back(o.backend_id);
    else ++clean;
  }
  if (hit.diverging.empty() || clean == 0) return std::nullopt;
  std::sort(hit.diverging.begin(), hit.diverging.end());
  return hit;
}

bool oracle_inconsistency(const VarianceResult& v, double threshold) {
  if (!v.comparable) return true;
  if (v.integral) return v.mismatches >= 1;
  return v.sigma2 >= threshold;
}

std::vector<std::string> inconsistent_backends(std::span<const ExecutionOutcome> ok) {
  // Partition into classes of identical outputs; the largest class (earliest
  // on ties) is the majority. With no class larger than one, every backend
  // is reported.
  std::vector<std::size_t> class_of(ok.size());
  std::vector<std::size_t> class_size;
  std::vector<std::size_t> representative;
  for (std::size_t i = 0; i < ok.size(); ++i) {
    std::size_t c = 0;
    for (; c < representative.size(); ++c) {
      const auto& a = ok[representative[c]].outputs;
      const auto& b = ok[i].outputs;
      if (a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](const ValueIR& x, const ValueIR& y) {
            return identical(x, y);
          })) {
        break;
      }
    }
    if (c == representative.size()) {
      representative.push_back(i);
      class_size.push_back(0);
    }
    class_of[i] = c;
    ++class_size[c];
  }
  std::vector<std::string> out;
  if (class_size.size() <= 1) return out;
  const std::size_t majority =
      static_cast<std::size_t>(std::max_element(class_size.begin(), class_size.end()) - class_size.begin());
  const bool no_majority = class_size[majority] == 1;
  for (std::size_t i = 0; i < ok.size(); ++i) {
    if (no_majority || class_of[i] != majority) out.push_back(ok[i].backend_id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace crossfuzz
