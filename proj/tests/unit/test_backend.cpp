#include <doctest.h>

#include <cmath>
#include <limits>

#include "crossfuzz/reference_backend.hpp"
#include "crossfuzz/seeds.hpp"

using namespace crossfuzz;

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

const std::vector<double> kTieArray = {-0.0, 1.401298464324817e-45, 1.100000023841858, -0.0, 5.960464477539063e-08,
                                       -2.0000000135803223, 1000000.0, 722801.375, 0.0, -1.100000023841858};

std::vector<std::int64_t> indices(const ExecutionOutcome& o) {
  REQUIRE(o.status == CallStatus::Ok);
  REQUIRE(o.outputs.size() == 1);
  return std::get<TensorValue>(o.outputs[0]).ints;
}

std::vector<double> reals(const ExecutionOutcome& o) {
  REQUIRE(o.status == CallStatus::Ok);
  return std::get<TensorValue>(o.outputs[0]).data;
}

}  // namespace

TEST_CASE("argsort on an array of signed zeros and denormals") {
  ReferenceBackend stable("stable", ReferenceVariant::Stable);
  ReferenceBackend ftz("ftz", ReferenceVariant::FlushTiesToZero);
  const std::vector<ValueIR> args = {make_tensor(DType::F32, {10}, kTieArray), IndexValue{0}};
  CHECK(indices(call(stable, "argsort", args)) == std::vector<std::int64_t>{5, 9, 0, 3, 8, 1, 4, 2, 7, 6});
  CHECK(indices(call(ftz, "torch.argsort", args)) == std::vector<std::int64_t>{5, 9, 0, 1, 3, 8, 4, 2, 7, 6});
}

TEST_CASE("argsort agrees on distinct normal values") {
  ReferenceBackend stable("stable", ReferenceVariant::Stable);
  ReferenceBackend ftz("ftz", ReferenceVariant::FlushTiesToZero);
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    const TensorValue t = gen_tensor(rng, 1, 3, DType::F64);
    const std::vector<ValueIR> args = {t, IndexValue{static_cast<std::int64_t>(rng.below(t.rank()))}};
    CHECK(indices(call(stable, "argsort", args)) == indices(call(ftz, "argsort", args)));
  }
}

TEST_CASE("argsort along an inner axis") {
  ReferenceBackend b("b", ReferenceVariant::Stable);
  const std::vector<ValueIR> args = {make_tensor(DType::F64, {2, 3}, {3, 1, 2, 0, 5, 4}), IndexValue{1}};
  CHECK(indices(call(b, "argsort", args)) == std::vector<std::int64_t>{1, 2, 0, 0, 2, 1});
  const std::vector<ValueIR> axis0 = {make_tensor(DType::F64, {2, 3}, {3, 1, 2, 0, 5, 4}), IndexValue{0}};
  CHECK(indices(call(b, "argsort", axis0)) == std::vector<std::int64_t>{1, 0, 0, 0, 1, 1});
}

TEST_CASE("angle of complex NaN") {
  ReferenceBackend stable("stable", ReferenceVariant::Stable);
  ReferenceBackend ftz("ftz", ReferenceVariant::FlushTiesToZero);
  const std::vector<ValueIR> args = {make_tensor(DType::C64, {1}, {kNaN, kNaN})};
  const auto a = call(stable, "tf.math.angle", args);
  const auto b = call(ftz, "angle", args);
  CHECK(std::isnan(reals(a)[0]));
  CHECK(a.nan_present);
  CHECK(reals(b)[0] == 0.0);
  CHECK_FALSE(b.nan_present);
  // Only the fully-NaN element is masked.
  const std::vector<ValueIR> half = {make_tensor(DType::C64, {1}, {kNaN, 1.0})};
  CHECK(std::isnan(reals(call(ftz, "angle", half))[0]));
}

TEST_CASE("arithmetic ops") {
  for (auto variant : {ReferenceVariant::Stable, ReferenceVariant::FlushTiesToZero}) {
    ReferenceBackend b("b", variant);
    const TensorValue x = make_tensor(DType::F64, {2, 2}, {1, -2, 3, -4});
    const TensorValue zero = make_tensor(DType::F64, {2, 2}, {0, 0, 0, 0});
    CHECK(reals(call(b, "add", std::vector<ValueIR>{x, zero})) == x.data);
    CHECK(reals(call(b, "mul", std::vector<ValueIR>{x, x})) == std::vector<double>{1, 4, 9, 16});
    CHECK(reals(call(b, "matmul", std::vector<ValueIR>{x, x})) == std::vector<double>{-5, 6, -9, 10});
    CHECK(reals(call(b, "relu", std::vector<ValueIR>{x})) == std::vector<double>{1, 0, 3, 0});
    CHECK(reals(call(b, "sum", std::vector<ValueIR>{x, IndexValue{0}})) == std::vector<double>{4, -6});
    CHECK(reals(call(b, "mean", std::vector<ValueIR>{x, IndexValue{1}})) == std::vector<double>{-0.5, -0.5});
    const auto sm = reals(call(b, "softmax", std::vector<ValueIR>{x, IndexValue{1}}));
    CHECK(sm[0] + sm[1] == doctest::Approx(1.0));
    CHECK(reals(call(b, "clamp", std::vector<ValueIR>{x, ScalarValue{-1.0}, ScalarValue{2.0}})) ==
          std::vector<double>{1, -1, 2, -1});
  }
}

TEST_CASE("call is total") {
  ReferenceBackend b("b", ReferenceVariant::Stable);
  const auto unknown = call(b, "conv2d", std::vector<ValueIR>{make_tensor(DType::F64, {1}, {1})});
  CHECK(unknown.status == CallStatus::Error);
  CHECK_FALSE(unknown.error_text.empty());
  const auto missing = call(b, "add", std::vector<ValueIR>{make_tensor(DType::F64, {1}, {1})});
  CHECK(missing.status == CallStatus::Error);
  const auto bad_axis = call(b, "argsort", std::vector<ValueIR>{make_tensor(DType::F64, {2}, {1, 2}), IndexValue{3}});
  CHECK(bad_axis.status == CallStatus::Error);
  const auto mismatched = call(b, "matmul", std::vector<ValueIR>{make_tensor(DType::F64, {2, 3}, {1, 2, 3, 4, 5, 6}),
                                                                  make_tensor(DType::F64, {2, 3}, {1, 2, 3, 4, 5, 6})});
  CHECK(mismatched.status == CallStatus::Error);
  const auto empty = call(b, "sum", std::vector<ValueIR>{make_tensor(DType::F64, {0, 3}, {}), IndexValue{0}});
  CHECK(empty.status == CallStatus::Ok);
}

TEST_CASE("f32 inputs are computed in single precision") {
  ReferenceBackend b("b", ReferenceVariant::Stable);
  const auto out = call(b, "add", std::vector<ValueIR>{make_tensor(DType::F32, {1}, {1.0}),
                                                       make_tensor(DType::F32, {1}, {static_cast<double>(1e-8f)})});
  CHECK(std::get<TensorValue>(out.outputs[0]).dtype == DType::F32);
  CHECK(reals(out)[0] == 1.0);
}

TEST_CASE("manifest and version") {
  const auto b = reference_backend(ReferenceVariant::FlushTiesToZero);
  CHECK(b->manifest().size() == 10);
  CHECK(b->supports("jax.numpy.argsort"));
  CHECK_FALSE(b->supports("jax.numpy.argmax"));
  CHECK(b->version().find("ftz") != std::string::npos);
  CHECK(reference_variant_from_string("stable") == ReferenceVariant::Stable);
  CHECK_THROWS(reference_variant_from_string("other"));
}

TEST_CASE("outcome json omits timing and round-trips") {
  ReferenceBackend b("b", ReferenceVariant::Stable);
  const auto o = call(b, "relu", std::vector<ValueIR>{make_tensor(DType::F64, {2}, {kNaN, -1})});
  const auto j = to_json(o);
  CHECK_FALSE(j.contains("duration_ms"));
  const auto back = outcome_from_json(j);
  CHECK(back.status == CallStatus::Ok);
  CHECK(back.nan_present);
  CHECK(identical(back.outputs[0], o.outputs[0]));
}
