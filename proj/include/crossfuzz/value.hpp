#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace crossfuzz {

enum class ValueKind { Tensor, ValueScalar, IndexScalar, Shape, Flag };
enum class DType { F32, F64, C64, I64, Bool };

std::string_view to_string(ValueKind kind);
std::string_view to_string(DType dtype);
DType dtype_from_string(std::string_view text);
bool is_integral(DType dtype);  // I64 and Bool

// Row-major tensor. Floating, complex and boolean elements live in `data`
// (complex interleaved re, im; booleans as 0/1); I64 elements live in `ints`.
struct TensorValue {
  DType dtype = DType::F64;
  std::vector<std::int64_t> shape;
  std::vector<double> data;
  std::vector<std::int64_t> ints;

  std::size_t numel() const;  // product of shape
  bool consistent() const;    // storage length agrees with shape and dtype
  int rank() const { return static_cast<int>(shape.size()); }

  // Element i widened to double (real part for complex).
  double element(std::size_t i) const;
};

struct ScalarValue {
  double value = 0.0;
};
struct IndexValue {
  std::int64_t value = 0;
};
struct ShapeValue {
  std::vector<std::int64_t> dims;
};
struct FlagValue {
  bool value = false;
};

using ValueIR = std::variant<TensorValue, ScalarValue, IndexValue, ShapeValue, FlagValue>;

ValueKind kind_of(const ValueIR& value);

TensorValue make_tensor(DType dtype, std::vector<std::int64_t> shape, std::vector<double> data);
TensorValue make_index_tensor(std::vector<std::int64_t> shape, std::vector<std::int64_t> ints);

// Any NaN element (either complex component counts).
bool contains_nan(const ValueIR& value);

// Bitwise-faithful equality: NaN equals NaN, -0.0 differs from 0.0.
bool identical(const ValueIR& a, const ValueIR& b);

// Wire/file form: {kind, dtype?, shape?, data?, value?}. Non-finite reals are
// the strings "NaN", "Infinity", "-Infinity"; complex elements are [re, im].
nlohmann::json to_json(const ValueIR& value);
ValueIR value_from_json(const nlohmann::json& j);  // throws std::invalid_argument

nlohmann::json real_to_json(double v);
double real_from_json(const nlohmann::json& j);

}  // namespace crossfuzz
