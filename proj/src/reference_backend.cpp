#include "crossfuzz/reference_backend.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "crossfuzz/corpus.hpp"

namespace crossfuzz {
namespace {

constexpr std::array<std::string_view, 10> kOps = {"argsort", "add",  "mul", "matmul", "relu",
                                                   "softmax", "mean", "sum", "angle",  "clamp"};

struct Bound {
  std::vector<const TensorValue*> tensors;
  std::vector<std::int64_t> axes;
  std::vector<double> scalars;
};

Bound bind(std::span<const ValueIR> args) {
  Bound b;
  for (const auto& a : args) {
    if (const auto* t = std::get_if<TensorValue>(&a)) {
      b.tensors.push_back(t);
    } else if (const auto* i = std::get_if<IndexValue>(&a)) {
      b.axes.push_back(i->value);
    } else if (const auto* s = std::get_if<ScalarValue>(&a)) {
      b.scalars.push_back(s->value);
    } else {
      throw std::invalid_argument("unsupported argument kind " + std::string(to_string(kind_of(a))));
    }
  }
  return b;
}

void expect(const Bound& b, std::size_t tensors, std::size_t axes, std::size_t scalars, std::string_view op) {
  if (b.tensors.size() != tensors || b.axes.size() != axes || b.scalars.size() != scalars) {
    throw std::invalid_argument(std::string(op) + ": expected " + std::to_string(tensors) + " tensor(s), " +
                                std::to_string(axes) + " axis and " + std::to_string(scalars) + " scalar argument(s)");
  }
}

void require_real(const TensorValue& t, std::string_view op) {
  if (t.dtype != DType::F32 && t.dtype != DType::F64) {
    throw std::invalid_argument(std::string(op) + ": unsupported dtype " + std::string(to_string(t.dtype)));
  }
}

// Stores v at the tensor's precision.
double narrow(DType dtype, double v) {
  return dtype == DType::F32 || dtype == DType::C64 ? static_cast<double>(static_cast<float>(v)) : v;
}

struct AxisSlices {
  std::size_t outer = 1, length = 1, inner = 1;
  std::size_t at(std::size_t o, std::size_t k, std::size_t i) const { return (o * length + k) * inner + i; }
};

AxisSlices slices(const TensorValue& t, std::int64_t axis, std::string_view op) {
  if (axis < 0 || axis >= t.rank()) {
    throw std::invalid_argument(std::string(op) + ": axis " + std::to_string(axis) + " out of range for rank " +
                                std::to_string(t.rank()));
  }
  AxisSlices s;
  for (int d = 0; d < t.rank(); ++d) {
    const auto dim = static_cast<std::size_t>(t.shape[static_cast<std::size_t>(d)]);
    if (d < axis) s.outer *= dim;
    else if (d == axis) s.length = dim;
    else s.inner *= dim;
  }
  return s;
}

double flush_denormal(DType dtype, double v) {
  const double smallest_normal = dtype == DType::F32 ? static_cast<double>(std::numeric_limits<float>::min())
                                                     : std::numeric_limits<double>::min();
  return (v != 0.0 && std::fabs(v) < smallest_normal) ? 0.0 : v;
}

// NaN orders after every number; otherwise exact comparison (-0.0 == 0.0).
bool sort_less(double a, double b) {
  if (std::isnan(a)) return false;
  if (std::isnan(b)) return true;
  return a < b;
}

TensorValue argsort(const TensorValue& t, std::int64_t axis, ReferenceVariant variant) {
  require_real(t, "argsort");
  const AxisSlices s = slices(t, axis, "argsort");
  TensorValue out = make_index_tensor(t.shape, std::vector<std::int64_t>(t.numel()));
  std::vector<std::size_t> order(s.length);
  std::vector<double> keys(s.length);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      for (std::size_t k = 0; k < s.length; ++k) {
        const double v = t.data[s.at(o, k, i)];
        keys[k] = variant == ReferenceVariant::FlushTiesToZero ? flush_denormal(t.dtype, v) : v;
      }
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return sort_less(keys[a], keys[b]); });
      for (std::size_t k = 0; k < s.length; ++k) out.ints[s.at(o, k, i)] = static_cast<std::int64_t>(order[k]);
    }
  }
  return out;
}

TensorValue elementwise(const TensorValue& a, const TensorValue& b, bool multiply) {
  const std::string_view op = multiply ? "mul" : "add";
  if (a.dtype != b.dtype) throw std::invalid_argument(std::string(op) + ": dtype mismatch");
  if (a.shape != b.shape) throw std::invalid_argument(std::string(op) + ": shape mismatch");
  if (is_integral(a.dtype)) throw std::invalid_argument(std::string(op) + ": integral tensors unsupported");
  TensorValue out{a.dtype, a.shape, std::vector<double>(a.data.size()), {}};
  if (a.dtype == DType::C64) {
    for (std::size_t i = 0; i + 1 < a.data.size(); i += 2) {
      const double ar = a.data[i], ai = a.data[i + 1], br = b.data[i], bi = b.data[i + 1];
      if (multiply) {
        out.data[i] = narrow(a.dtype, ar * br - ai * bi);
        out.data[i + 1] = narrow(a.dtype, ar * bi + ai * br);
      } else {
        out.data[i] = narrow(a.dtype, ar + br);
        out.data[i + 1] = narrow(a.dtype, ai + bi);
      }
    }
    return out;
  }
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    if (a.dtype == DType::F32) {
      const float x = static_cast<float>(a.data[i]), y = static_cast<float>(b.data[i]);
      out.data[i] = multiply ? x * y : x + y;
    } else {
      out.data[i] = multiply ? a.data[i] * b.data[i] : a.data[i] + b.data[i];
    }
  }
  return out;
}

template <typename Real>
std::vector<double> matmul_kernel(const TensorValue& a, const TensorValue& b, std::size_t m, std::size_t k,
                                  std::size_t n) {
  std::vector<double> out(m * n);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      Real acc = 0;
      for (std::size_t j = 0; j < k; ++j) {
        acc += static_cast<Real>(a.data[r * k + j]) * static_cast<Real>(b.data[j * n + c]);
      }
      out[r * n + c] = static_cast<double>(acc);
    }
  }
  return out;
}

TensorValue matmul(const TensorValue& a, const TensorValue& b) {
  require_real(a, "matmul");
  if (a.dtype != b.dtype) throw std::invalid_argument("matmul: dtype mismatch");
  if (a.rank() < 1 || a.rank() > 2 || b.rank() < 1 || b.rank() > 2) {
    throw std::invalid_argument("matmul: operands must have rank 1 or 2");
  }
  // Promote vectors to matrices (row for the left operand, column for the right).
  const std::size_t m = a.rank() == 2 ? static_cast<std::size_t>(a.shape[0]) : 1;
  const std::size_t k = static_cast<std::size_t>(a.shape.back());
  const std::size_t kb = static_cast<std::size_t>(b.shape[0]);
  const std::size_t n = b.rank() == 2 ? static_cast<std::size_t>(b.shape[1]) : 1;
  if (k != kb) throw std::invalid_argument("matmul: inner dimensions differ");

  std::vector<std::int64_t> shape;
  if (a.rank() == 2) shape.push_back(static_cast<std::int64_t>(m));
  if (b.rank() == 2) shape.push_back(static_cast<std::int64_t>(n));
  auto data = a.dtype == DType::F32 ? matmul_kernel<float>(a, b, m, k, n) : matmul_kernel<double>(a, b, m, k, n);
  return make_tensor(a.dtype, std::move(shape), std::move(data));
}

TensorValue relu(const TensorValue& t) {
  require_real(t, "relu");
  TensorValue out = t;
  for (double& v : out.data) v = v < 0.0 ? 0.0 : v;
  return out;
}

template <typename Real>
void softmax_slice(const TensorValue& t, TensorValue& out, const AxisSlices& s, std::size_t o, std::size_t i) {
  Real peak = -std::numeric_limits<Real>::infinity();
  bool any_nan = false;
  for (std::size_t k = 0; k < s.length; ++k) {
    const Real v = static_cast<Real>(t.data[s.at(o, k, i)]);
    any_nan |= std::isnan(v);
    peak = std::max(peak, v);
  }
  if (any_nan || std::isinf(peak)) {
    // Undefined slices (NaN or +Inf inputs) become NaN.
    if (any_nan || peak > 0) {
      for (std::size_t k = 0; k < s.length; ++k) out.data[s.at(o, k, i)] = std::numeric_limits<double>::quiet_NaN();
      return;
    }
  }
  Real total = 0;
  for (std::size_t k = 0; k < s.length; ++k) {
    const Real e = std::exp(static_cast<Real>(t.data[s.at(o, k, i)]) - peak);
    out.data[s.at(o, k, i)] = static_cast<double>(e);
    total += e;
  }
  for (std::size_t k = 0; k < s.length; ++k) {
    out.data[s.at(o, k, i)] = static_cast<double>(static_cast<Real>(out.data[s.at(o, k, i)]) / total);
  }
}

TensorValue softmax(const TensorValue& t, std::int64_t axis) {
  require_real(t, "softmax");
  const AxisSlices s = slices(t, axis, "softmax");
  TensorValue out = t;
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      if (t.dtype == DType::F32) softmax_slice<float>(t, out, s, o, i);
      else softmax_slice<double>(t, out, s, o, i);
    }
  }
  return out;
}

template <typename Real>
TensorValue reduce(const TensorValue& t, std::int64_t axis, bool average) {
  const AxisSlices s = slices(t, axis, average ? "mean" : "sum");
  std::vector<std::int64_t> shape = t.shape;
  shape.erase(shape.begin() + axis);
  std::vector<double> data(s.outer * s.inner);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      Real acc = 0;
      for (std::size_t k = 0; k < s.length; ++k) acc += static_cast<Real>(t.data[s.at(o, k, i)]);
      if (average) acc = s.length == 0 ? std::numeric_limits<Real>::quiet_NaN() : acc / static_cast<Real>(s.length);
      data[o * s.inner + i] = static_cast<double>(acc);
    }
  }
  return make_tensor(t.dtype, std::move(shape), std::move(data));
}

TensorValue angle(const TensorValue& t, ReferenceVariant variant) {
  if (t.dtype == DType::C64) {
    TensorValue out{DType::F32, t.shape, std::vector<double>(t.numel()), {}};
    for (std::size_t i = 0; i < out.data.size(); ++i) {
      const double re = t.data[2 * i], im = t.data[2 * i + 1];
      if (variant == ReferenceVariant::FlushTiesToZero && std::isnan(re) && std::isnan(im)) {
        out.data[i] = 0.0;
      } else {
        out.data[i] = narrow(DType::F32, std::atan2(im, re));
      }
    }
    return out;
  }
  require_real(t, "angle");
  TensorValue out = t;
  for (double& v : out.data) v = std::isnan(v) ? v : narrow(t.dtype, std::atan2(0.0, v));
  return out;
}

TensorValue clamp(const TensorValue& t, double lo, double hi) {
  require_real(t, "clamp");
  TensorValue out = t;
  const double low = narrow(t.dtype, lo), high = narrow(t.dtype, hi);
  for (double& v : out.data) v = std::min(std::max(v, low), high);
  return out;
}

}  // namespace

std::string_view to_string(ReferenceVariant variant) {
  return variant == ReferenceVariant::Stable ? "stable" : "ftz";
}

ReferenceVariant reference_variant_from_string(std::string_view text) {
  if (text == "stable") return ReferenceVariant::Stable;
  if (text == "ftz" || text == "flush") return ReferenceVariant::FlushTiesToZero;
  throw std::invalid_argument("unknown reference variant '" + std::string(text) + "' (expected stable or ftz)");
}

std::vector<std::string> ReferenceBackend::manifest() const { return {kOps.begin(), kOps.end()}; }

bool ReferenceBackend::supports(std::string_view api) const {
  const std::string op = normalize_api_name(api);
  return std::find(kOps.begin(), kOps.end(), op) != kOps.end();
}

std::string ReferenceBackend::version() const { return "reference-" + std::string(to_string(variant_)) + "/1"; }

ExecutionOutcome ReferenceBackend::invoke(std::string_view api, std::span<const ValueIR> args,
                                          std::chrono::milliseconds) {
  const std::string op = normalize_api_name(api);
  const Bound b = bind(args);
  TensorValue result;
  if (op == "argsort") {
    expect(b, 1, 1, 0, op);
    result = argsort(*b.tensors[0], b.axes[0], variant_);
  } else if (op == "add" || op == "mul") {
    expect(b, 2, 0, 0, op);
    result = elementwise(*b.tensors[0], *b.tensors[1], op == "mul");
  } else if (op == "matmul") {
    expect(b, 2, 0, 0, op);
    result = matmul(*b.tensors[0], *b.tensors[1]);
  } else if (op == "relu") {
    expect(b, 1, 0, 0, op);
    result = relu(*b.tensors[0]);
  } else if (op == "softmax") {
    expect(b, 1, 1, 0, op);
    result = softmax(*b.tensors[0], b.axes[0]);
  } else if (op == "mean" || op == "sum") {
    expect(b, 1, 1, 0, op);
    const auto& t = *b.tensors[0];
    require_real(t, op);
    result = t.dtype == DType::F32 ? reduce<float>(t, b.axes[0], op == "mean") : reduce<double>(t, b.axes[0], op == "mean");
  } else if (op == "angle") {
    expect(b, 1, 0, 0, op);
    result = angle(*b.tensors[0], variant_);
  } else if (op == "clamp") {
    expect(b, 1, 0, 2, op);
    result = clamp(*b.tensors[0], b.scalars[0], b.scalars[1]);
  } else {
    throw std::invalid_argument("unknown op '" + op + "'");
  }
  ExecutionOutcome out;
  out.backend_id = id_;
  out.status = CallStatus::Ok;
  out.outputs.push_back(std::move(result));
  return out;
}

std::unique_ptr<Backend> reference_backend(ReferenceVariant variant, std::string id) {
  if (id.empty()) id = "reference-" + std::string(to_string(variant));
  return std::make_unique<ReferenceBackend>(std::move(id), variant);
}

}  // namespace crossfuzz
