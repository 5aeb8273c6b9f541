#include "crossfuzz/value.hpp"

#include <bit>
#include <cmath>
#include <limits>

namespace crossfuzz {

using nlohmann::json;

std::string_view to_string(ValueKind kind) {
  switch (kind) {
    case ValueKind::Tensor: return "tensor";
    case ValueKind::ValueScalar: return "value_scalar";
    case ValueKind::IndexScalar: return "index_scalar";
    case ValueKind::Shape: return "shape";
    case ValueKind::Flag: return "flag";
  }
  return "tensor";
}

std::string_view to_string(DType dtype) {
  switch (dtype) {
    case DType::F32: return "f32";
    case DType::F64: return "f64";
    case DType::C64: return "c64";
    case DType::I64: return "i64";
    case DType::Bool: return "bool";
  }
  return "f64";
}

DType dtype_from_string(std::string_view text) {
  for (auto d : {DType::F32, DType::F64, DType::C64, DType::I64, DType::Bool}) {
    if (text == to_string(d)) return d;
  }
  throw std::invalid_argument("unknown dtype '" + std::string(text) + "'");
}

bool is_integral(DType dtype) { return dtype == DType::I64 || dtype == DType::Bool; }

std::size_t TensorValue::numel() const {
  std::size_t n = 1;
  for (auto d : shape) n *= static_cast<std::size_t>(d < 0 ? 0 : d);
  return n;
}

bool TensorValue::consistent() const {
  for (auto d : shape) {
    if (d < 0) return false;
  }
  const std::size_t n = numel();
  switch (dtype) {
    case DType::I64: return ints.size() == n && data.empty();
    case DType::C64: return data.size() == 2 * n && ints.empty();
    default: return data.size() == n && ints.empty();
  }
}

double TensorValue::element(std::size_t i) const {
  switch (dtype) {
    case DType::I64: return static_cast<double>(ints[i]);
    case DType::C64: return data[2 * i];
    default: return data[i];
  }
}

ValueKind kind_of(const ValueIR& value) { return static_cast<ValueKind>(value.index()); }

TensorValue make_tensor(DType dtype, std::vector<std::int64_t> shape, std::vector<double> data) {
  TensorValue t{dtype, std::move(shape), std::move(data), {}};
  if (!t.consistent()) throw std::invalid_argument("tensor data length does not match shape");
  return t;
}

TensorValue make_index_tensor(std::vector<std::int64_t> shape, std::vector<std::int64_t> ints) {
  TensorValue t{DType::I64, std::move(shape), {}, std::move(ints)};
  if (!t.consistent()) throw std::invalid_argument("tensor data length does not match shape");
  return t;
}

bool contains_nan(const ValueIR& value) {
  if (const auto* t = std::get_if<TensorValue>(&value)) {
    for (double v : t->data) {
      if (std::isnan(v)) return true;
    }
    return false;
  }
  if (const auto* s = std::get_if<ScalarValue>(&value)) return std::isnan(s->value);
  return false;
}

namespace {

bool same_bits(double a, double b) {
  if (std::isnan(a) && std::isnan(b)) return true;
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

bool same_reals(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same_bits(a[i], b[i])) return false;
  }
  return true;
}

const json& need(const json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) throw std::invalid_argument(std::string("value is missing field '") + field + "'");
  return *it;
}

std::vector<std::int64_t> int_list(const json& j, const char* what) {
  if (!j.is_array()) throw std::invalid_argument(std::string(what) + " must be an array");
  std::vector<std::int64_t> out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw std::invalid_argument(std::string(what) + " must hold integers");
    out.push_back(v.get<std::int64_t>());
  }
  return out;
}

}  // namespace

bool identical(const ValueIR& a, const ValueIR& b) {
  if (a.index() != b.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b);
        if constexpr (std::is_same_v<T, TensorValue>) {
          return x.dtype == y.dtype && x.shape == y.shape && x.ints == y.ints && same_reals(x.data, y.data);
        } else if constexpr (std::is_same_v<T, ScalarValue>) {
          return same_bits(x.value, y.value);
        } else if constexpr (std::is_same_v<T, ShapeValue>) {
          return x.dims == y.dims;
        } else {
          return x.value == y.value;
        }
      },
      a);
}

json real_to_json(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
  return v;
}

double real_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
    if (s == "Infinity") return std::numeric_limits<double>::infinity();
    if (s == "-Infinity") return -std::numeric_limits<double>::infinity();
  }
  throw std::invalid_argument("expected a real number, got " + j.dump());
}

json to_json(const ValueIR& value) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, TensorValue>) {
          json data = json::array();
          if (x.dtype == DType::I64) {
            for (auto v : x.ints) data.push_back(v);
          } else if (x.dtype == DType::C64) {
            for (std::size_t i = 0; i + 1 < x.data.size(); i += 2) {
              data.push_back(json::array({real_to_json(x.data[i]), real_to_json(x.data[i + 1])}));
            }
          } else if (x.dtype == DType::Bool) {
            for (double v : x.data) data.push_back(v != 0.0);
          } else {
            for (double v : x.data) data.push_back(real_to_json(v));
          }
          return {{"kind", "tensor"}, {"dtype", to_string(x.dtype)}, {"shape", x.shape}, {"data", std::move(data)}};
        } else if constexpr (std::is_same_v<T, ScalarValue>) {
          return {{"kind", "value_scalar"}, {"value", real_to_json(x.value)}};
        } else if constexpr (std::is_same_v<T, IndexValue>) {
          return {{"kind", "index_scalar"}, {"value", x.value}};
        } else if constexpr (std::is_same_v<T, ShapeValue>) {
          return {{"kind", "shape"}, {"value", x.dims}};
        } else {
          return {{"kind", "flag"}, {"value", x.value}};
        }
      },
      value);
}

ValueIR value_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("value must be an object");
  const json& kind_j = need(j, "kind");
  if (!kind_j.is_string()) throw std::invalid_argument("value kind must be a string");
  const auto& kind = kind_j.get_ref<const std::string&>();

  if (kind == "tensor") {
    TensorValue t;
    const json& dtype_j = need(j, "dtype");
    if (!dtype_j.is_string()) throw std::invalid_argument("tensor dtype must be a string");
    t.dtype = dtype_from_string(dtype_j.get<std::string>());
    t.shape = int_list(need(j, "shape"), "tensor shape");
    const json& data = need(j, "data");
    if (!data.is_array()) throw std::invalid_argument("tensor data must be an array");
    for (const auto& v : data) {
      switch (t.dtype) {
        case DType::I64:
          if (!v.is_number_integer()) throw std::invalid_argument("i64 tensor data must hold integers");
          t.ints.push_back(v.get<std::int64_t>());
          break;
        case DType::C64:
          if (!v.is_array() || v.size() != 2) throw std::invalid_argument("c64 elements must be [re, im] pairs");
          t.data.push_back(real_from_json(v[0]));
          t.data.push_back(real_from_json(v[1]));
          break;
        case DType::Bool:
          if (v.is_boolean()) {
            t.data.push_back(v.get<bool>() ? 1.0 : 0.0);
          } else if (v.is_number_integer() && (v.get<int>() == 0 || v.get<int>() == 1)) {
            t.data.push_back(v.get<int>());
          } else {
            throw std::invalid_argument("bool tensor data must hold booleans");
          }
          break;
        default: t.data.push_back(real_from_json(v));
      }
    }
    if (t.dtype == DType::F32) {
      for (double& v : t.data) v = static_cast<float>(v);
    }
    if (!t.consistent()) throw std::invalid_argument("tensor data length does not match shape");
    return t;
  }
  if (kind == "value_scalar") return ScalarValue{real_from_json(need(j, "value"))};
  if (kind == "index_scalar") {
    const json& v = need(j, "value");
    if (!v.is_number_integer()) throw std::invalid_argument("index_scalar value must be an integer");
    return IndexValue{v.get<std::int64_t>()};
  }
  if (kind == "shape") return ShapeValue{int_list(need(j, "value"), "shape value")};
  if (kind == "flag") {
    const json& v = need(j, "value");
    if (!v.is_boolean()) throw std::invalid_argument("flag value must be a boolean");
    return FlagValue{v.get<bool>()};
  }
  throw std::invalid_argument("unknown value kind '" + kind + "'");
}

}  // namespace crossfuzz
