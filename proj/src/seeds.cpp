#include "crossfuzz/seeds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace crossfuzz {
namespace {

bool axis_like(std::string_view name) {
  return name == "axis" || name.find("axis") != std::string_view::npos || name.find("dim") != std::string_view::npos;
}

double round_to(DType dtype, double v) { return dtype == DType::F32 ? static_cast<double>(static_cast<float>(v)) : v; }

int anchor_rank(const SeedTuple& seed, const SeedPlan& plan) {
  if (!plan.anchor) return 0;
  return std::get<TensorValue>(seed.args[*plan.anchor]).rank();
}

std::vector<std::int64_t> draw_shape(Rng& rng, int rank, int dim_max) {
  std::vector<std::int64_t> shape(static_cast<std::size_t>(rank));
  for (auto& d : shape) d = 1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(dim_max)));
  return shape;
}

void fill_tensor(Rng& rng, TensorValue& t) {
  const std::size_t n = t.numel() * (t.dtype == DType::C64 ? 2 : 1);
  t.data.resize(n);
  for (auto& v : t.data) v = round_to(t.dtype, rng.normal());
}

bool floating(DType d) { return d == DType::F32 || d == DType::F64 || d == DType::C64; }

}  // namespace

std::string_view to_string(ShapeRule rule) {
  switch (rule) {
    case ShapeRule::Shared: return "shared";
    case ShapeRule::Independent: return "independent";
    case ShapeRule::Contract: return "contract";
  }
  return "shared";
}

ShapeRule shape_rule_from_string(std::string_view text) {
  for (auto r : {ShapeRule::Shared, ShapeRule::Independent, ShapeRule::Contract}) {
    if (text == to_string(r)) return r;
  }
  throw std::invalid_argument("unknown shape rule '" + std::string(text) + "'");
}

GenerationHints default_hints(std::string_view normalized_api) {
  GenerationHints h;
  if (normalized_api == "matmul") {
    h.rank_min = h.rank_max = 2;
    h.shape_rule = ShapeRule::Contract;
  } else if (normalized_api == "angle") {
    h.dtype = DType::C64;
  }
  return h;
}

SeedPlan make_plan(std::string group_id, const AlignedSignature& signature, const GenerationHints& hints) {
  SeedPlan plan;
  plan.group_id = std::move(group_id);
  plan.hints = hints;
  if (hints.rank_min < 0 || hints.rank_max < hints.rank_min || hints.dim_max < 1) {
    throw PlanError("invalid rank/dimension bounds in generation hints");
  }
  bool needs_anchor = false;
  for (std::size_t i = 0; i < signature.canonical_params.size(); ++i) {
    const auto& p = signature.canonical_params[i];
    ArgPlan arg{p.name, p.type, ValueKind::Tensor, false};
    switch (p.type) {
      case AbstractType::Tensor:
      case AbstractType::Complex:
        if (!plan.anchor) plan.anchor = i;
        break;
      case AbstractType::Int:
        if (axis_like(p.name)) {
          arg.kind = ValueKind::IndexScalar;
          needs_anchor = true;
        } else {
          arg.kind = ValueKind::ValueScalar;
          arg.integral = true;
        }
        break;
      case AbstractType::Float: arg.kind = ValueKind::ValueScalar; break;
      case AbstractType::Bool: arg.kind = ValueKind::Flag; break;
      case AbstractType::Shape:
        arg.kind = ValueKind::Shape;
        needs_anchor = true;
        break;
      case AbstractType::String:
      case AbstractType::Unknown:
        throw PlanError("parameter '" + p.name + "' has type " + std::string(to_string(p.type)) +
                        ", which cannot be generated");
    }
    plan.args.push_back(std::move(arg));
  }
  if (needs_anchor && !plan.anchor) throw PlanError("axis or shape parameter without a tensor to anchor it");
  if (plan.anchor && hints.rank_min < 1 && needs_anchor) {
    throw PlanError("axis/shape parameters need tensors of rank >= 1");
  }
  return plan;
}

TensorValue gen_tensor(Rng& rng, int rank_min, int rank_max, DType dtype, int dim_max) {
  TensorValue t;
  t.dtype = dtype;
  const int rank = rank_min + static_cast<int>(rng.below(static_cast<std::uint64_t>(rank_max - rank_min + 1)));
  t.shape = draw_shape(rng, rank, dim_max);
  fill_tensor(rng, t);
  return t;
}

ScalarValue gen_value_scalar(Rng& rng) { return {rng.uniform()}; }

IndexValue gen_index_scalar(Rng& rng, int tensor_rank) {
  if (tensor_rank < 1) throw std::invalid_argument("index scalar needs a tensor of rank >= 1");
  return {static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(tensor_rank)))};
}

ShapeValue gen_shape(Rng& rng, int associated_rank, int dim_max) {
  return {draw_shape(rng, std::max(associated_rank, 0), dim_max)};
}

FlagValue gen_flag(Rng& rng) { return {rng.bernoulli(0.5)}; }

FlagValue enumerate_flag(std::uint64_t ordinal, std::size_t position) {
  return {position < 64 && ((ordinal >> position) & 1U) != 0};
}

std::vector<double> edge_values(DType dtype) {
  const double inf = std::numeric_limits<double>::infinity();
  const double denormal = dtype == DType::F32 ? static_cast<double>(std::numeric_limits<float>::denorm_min())
                                              : std::numeric_limits<double>::denorm_min();
  return {std::numeric_limits<double>::quiet_NaN(), inf, -inf, -0.0, denormal, round_to(dtype, 1e38),
          round_to(dtype, -1e38)};
}

SeedTuple inject_edge_cases(SeedTuple seed, Rng& rng, const EdgeCasePolicy& policy) {
  std::optional<std::vector<std::int64_t>> anchor_shape;
  for (auto& arg : seed.args) {
    if (auto* t = std::get_if<TensorValue>(&arg)) {
      if (!anchor_shape) anchor_shape = t->shape;
    }
  }
  if (!anchor_shape) return seed;

  for (auto& arg : seed.args) {
    auto* t = std::get_if<TensorValue>(&arg);
    if (t == nullptr || !floating(t->dtype) || policy.element_rate <= 0.0) continue;
    const auto edges = edge_values(t->dtype);
    if (t->dtype == DType::C64) {
      for (std::size_t i = 0; i + 1 < t->data.size(); i += 2) {
        if (!rng.bernoulli(policy.element_rate)) continue;
        const double e = edges[rng.below(edges.size())];
        switch (rng.below(3)) {
          case 0: t->data[i] = e; break;
          case 1: t->data[i + 1] = e; break;
          default: t->data[i] = t->data[i + 1] = e;
        }
      }
    } else {
      for (double& v : t->data) {
        if (rng.bernoulli(policy.element_rate)) v = edges[rng.below(edges.size())];
      }
    }
  }

  if (rng.bernoulli(policy.empty_rate) && !anchor_shape->empty()) {
    // With differently shaped tensors (contracting rules) only the leading
    // axis can be emptied without breaking the pairing.
    bool mixed_shapes = false;
    for (const auto& arg : seed.args) {
      if (const auto* t = std::get_if<TensorValue>(&arg)) mixed_shapes |= t->shape != *anchor_shape;
    }
    const std::size_t axis = mixed_shapes ? 0 : rng.below(anchor_shape->size());
    for (auto& arg : seed.args) {
      auto* t = std::get_if<TensorValue>(&arg);
      if (t == nullptr || t->shape != *anchor_shape) continue;
      t->shape[axis] = 0;
      t->data.clear();
      t->ints.clear();
    }
  } else if (rng.bernoulli(policy.repeat_rate)) {
    for (auto& arg : seed.args) {
      auto* t = std::get_if<TensorValue>(&arg);
      if (t == nullptr || !floating(t->dtype) || t->numel() < 2) continue;
      const std::size_t width = t->dtype == DType::C64 ? 2 : 1;
      const std::size_t source = rng.below(t->numel());
      for (std::size_t i = 0; i < t->numel(); ++i) {
        if (i == source || !rng.bernoulli(0.5)) continue;
        for (std::size_t k = 0; k < width; ++k) t->data[i * width + k] = t->data[source * width + k];
      }
    }
  }
  return seed;
}

SeedTuple generate_seed(const SeedPlan& plan, std::uint64_t rng_seed, std::uint64_t ordinal,
                        const SeedOptions& options) {
  Rng rng(rng_seed);
  SeedTuple seed;
  seed.group_id = plan.group_id;
  seed.rng_seed = rng_seed;
  seed.args.resize(plan.args.size());

  const auto& h = plan.hints;
  DType dtype = h.dtype.value_or(rng.bernoulli(0.5) ? DType::F64 : DType::F32);
  bool has_complex = false;
  for (const auto& a : plan.args) has_complex |= a.type == AbstractType::Complex;
  if (has_complex && !h.dtype) dtype = DType::C64;

  std::optional<TensorValue> anchor;
  int tensors_seen = 0;
  for (std::size_t i = 0; i < plan.args.size(); ++i) {
    if (plan.args[i].kind != ValueKind::Tensor) continue;
    TensorValue t;
    if (!anchor) {
      t = gen_tensor(rng, h.rank_min, h.rank_max, dtype, h.dim_max);
      anchor = t;
    } else {
      t.dtype = dtype;
      switch (h.shape_rule) {
        case ShapeRule::Shared: t.shape = anchor->shape; break;
        case ShapeRule::Independent: t.shape = draw_shape(rng, anchor->rank(), h.dim_max); break;
        case ShapeRule::Contract:
          if (tensors_seen == 1 && anchor->rank() == 2) {
            t.shape = {anchor->shape[1], 1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(h.dim_max)))};
          } else {
            t.shape = anchor->shape;
          }
          break;
      }
      fill_tensor(rng, t);
    }
    ++tensors_seen;
    seed.args[i] = std::move(t);
  }
  const int rank = anchor ? anchor->rank() : 0;

  // Discrete parameters: flags always enumerate; axes join the enumeration
  // when there are at most two discrete parameters and pairwise is enabled.
  std::vector<std::size_t> discrete;
  for (std::size_t i = 0; i < plan.args.size(); ++i) {
    if (plan.args[i].kind == ValueKind::Flag || plan.args[i].kind == ValueKind::IndexScalar) discrete.push_back(i);
  }
  const bool mixed_radix = options.pairwise && discrete.size() <= 2;
  std::uint64_t remaining = ordinal;
  std::size_t flag_position = 0;

  for (std::size_t i = 0; i < plan.args.size(); ++i) {
    const auto& a = plan.args[i];
    switch (a.kind) {
      case ValueKind::Tensor: break;
      case ValueKind::ValueScalar: {
        ScalarValue s = gen_value_scalar(rng);
        if (a.integral) s.value = std::round(s.value);
        seed.args[i] = s;
        break;
      }
      case ValueKind::IndexScalar:
        if (mixed_radix) {
          seed.args[i] = IndexValue{static_cast<std::int64_t>(remaining % static_cast<std::uint64_t>(rank))};
          remaining /= static_cast<std::uint64_t>(rank);
          rng.next();  // keep the stream aligned with the sampled path
        } else {
          seed.args[i] = gen_index_scalar(rng, rank);
        }
        break;
      case ValueKind::Shape: seed.args[i] = gen_shape(rng, rank, h.dim_max); break;
      case ValueKind::Flag:
        if (mixed_radix) {
          seed.args[i] = FlagValue{(remaining & 1U) != 0};
          remaining >>= 1;
        } else {
          seed.args[i] = enumerate_flag(ordinal, flag_position++);
        }
        break;
    }
  }
  return inject_edge_cases(std::move(seed), rng, options.edges);
}

void validate_seed(const SeedTuple& seed, const SeedPlan& plan) {
  if (seed.args.size() != plan.args.size()) {
    throw ValidationError("expected " + std::to_string(plan.args.size()) + " arguments, got " +
                          std::to_string(seed.args.size()));
  }
  for (std::size_t i = 0; i < plan.args.size(); ++i) {
    const auto& a = plan.args[i];
    const std::string where = "argument " + std::to_string(i) + " ('" + a.name + "')";
    if (kind_of(seed.args[i]) != a.kind) {
      throw ValidationError(where + ": expected " + std::string(to_string(a.kind)) + ", got " +
                            std::string(to_string(kind_of(seed.args[i]))));
    }
    if (const auto* t = std::get_if<TensorValue>(&seed.args[i])) {
      if (!t->consistent()) throw ValidationError(where + ": data length does not match shape");
      if (!floating(t->dtype)) throw ValidationError(where + ": tensor inputs must be floating point");
      if (plan.hints.dtype && t->dtype != *plan.hints.dtype) {
        throw ValidationError(where + ": dtype " + std::string(to_string(t->dtype)) + " not allowed");
      }
      if (t->rank() > 8) throw ValidationError(where + ": rank too large");
    }
  }
  if (!plan.anchor) return;
  const auto& anchor = std::get<TensorValue>(seed.args[*plan.anchor]);
  const int rank = anchor_rank(seed, plan);
  int tensors_seen = 0;
  for (std::size_t i = 0; i < plan.args.size(); ++i) {
    const std::string where = "argument " + std::to_string(i) + " ('" + plan.args[i].name + "')";
    if (const auto* idx = std::get_if<IndexValue>(&seed.args[i])) {
      if (idx->value < 0 || idx->value >= rank) {
        throw ValidationError(where + ": axis " + std::to_string(idx->value) + " outside [0, " + std::to_string(rank) + ")");
      }
    } else if (const auto* s = std::get_if<ShapeValue>(&seed.args[i])) {
      if (static_cast<int>(s->dims.size()) != rank) throw ValidationError(where + ": shape length differs from tensor rank");
      for (auto d : s->dims) {
        if (d < 0) throw ValidationError(where + ": negative dimension");
      }
    } else if (const auto* t = std::get_if<TensorValue>(&seed.args[i])) {
      if (tensors_seen++ == 0) continue;
      if (t->dtype != anchor.dtype) throw ValidationError(where + ": dtype differs from the first tensor");
      if (plan.hints.shape_rule == ShapeRule::Shared && t->shape != anchor.shape) {
        throw ValidationError(where + ": shape differs from the first tensor");
      }
      if (plan.hints.shape_rule == ShapeRule::Contract && tensors_seen == 2 &&
          (t->rank() != 2 || anchor.rank() != 2 || t->shape[0] != anchor.shape[1])) {
        throw ValidationError(where + ": inner dimensions do not contract");
      }
    }
  }
}

nlohmann::json to_json(const SeedTuple& seed) {
  nlohmann::json args = nlohmann::json::array();
  for (const auto& a : seed.args) args.push_back(to_json(a));
  return {{"group_id", seed.group_id}, {"rng_seed", seed.rng_seed}, {"args", std::move(args)}};
}

SeedTuple seed_from_json(const nlohmann::json& j) {
  SeedTuple seed;
  seed.group_id = j.at("group_id").get<std::string>();
  seed.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  for (const auto& a : j.at("args")) seed.args.push_back(value_from_json(a));
  return seed;
}

}  // namespace crossfuzz
