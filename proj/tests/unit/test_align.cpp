#include <doctest.h>

#include <sstream>

#include "crossfuzz/align.hpp"

using namespace crossfuzz;
using AT = AbstractType;

namespace {

ApiRecord record(std::string source, std::vector<std::pair<std::string, AT>> params) {
  ApiRecord r;
  r.source_id = source;
  r.qualified_name = source + ".f";
  r.normalized_name = "f";
  for (auto& [n, t] : params) r.params.push_back(ParamSpec{n, "", t, ParamRole::Functional, false});
  return r;
}

}  // namespace

TEST_CASE("normalize_param_name") {
  CHECK(normalize_param_name("dim") == "axis");
  CHECK(normalize_param_name("axis") == "axis");
  CHECK(normalize_param_name("axes") == "axis");
  CHECK(normalize_param_name("tensor2") == "input_2");
  CHECK(normalize_param_name("input3") == "input_3");
  CHECK(normalize_param_name("X") == "input");
  CHECK(normalize_param_name("values") == "input");
  CHECK(normalize_param_name("b") == "other");
  CHECK(normalize_param_name("Weight") == "weight");
}

TEST_CASE("alias file extends the defaults") {
  AliasMap aliases;
  std::istringstream in("# comment\nkeepdims -> keepdim\n  a_min->min  \n");
  aliases.load(in);
  CHECK(aliases.canonical("keepdims") == "keepdim");
  CHECK(aliases.canonical("a_min") == "min");
  CHECK(aliases.canonical("dim") == "axis");
  std::istringstream bad("no arrow here\n");
  CHECK_THROWS(aliases.load(bad));
}

TEST_CASE("matmul(input, other) vs matmul(a, b)") {
  const std::vector<ApiRecord> members = {record("torch", {{"input", AT::Tensor}, {"other", AT::Tensor}}),
                                          record("jax", {{"a", AT::Tensor}, {"b", AT::Tensor}})};
  const AlignedSignature s = align_signature(members);
  REQUIRE(s.canonical_params.size() == 2);
  CHECK(s.canonical_params[0].name == "input");
  CHECK(s.canonical_params[1].name == "other");
  CHECK(s.per_member_order[1] == std::vector<std::size_t>{0, 1});
}

TEST_CASE("identical members give identity permutations") {
  const std::vector<ApiRecord> members(3, record("x", {{"input", AT::Tensor}, {"dim", AT::Int}}));
  const AlignedSignature s = align_signature(members);
  for (const auto& order : s.per_member_order) CHECK(order == std::vector<std::size_t>{0, 1});
}

TEST_CASE("swapped names are permuted") {
  const std::vector<ApiRecord> members = {record("a", {{"input", AT::Tensor}, {"axis", AT::Int}}),
                                          record("b", {{"axis", AT::Int}, {"input", AT::Tensor}})};
  const AlignedSignature s = align_signature(members);
  CHECK(s.per_member_order[1] == std::vector<std::size_t>{1, 0});

  const std::vector<double> canonical = {10.0, 20.0};
  CHECK(s.to_member<double>(1, canonical) == std::vector<double>{20.0, 10.0});
}

TEST_CASE("unnamed leftovers go to the nearest position of the same type") {
  const std::vector<ApiRecord> members = {
      record("a", {{"input", AT::Tensor}, {"lo", AT::Float}, {"hi", AT::Float}}),
      record("b", {{"p", AT::Float}, {"q", AT::Float}, {"input", AT::Tensor}})};
  const AlignedSignature s = align_signature(members);
  // lo (pos 1) -> nearest Float is q (pos 1); hi (pos 2) -> p.
  CHECK(s.per_member_order[1] == std::vector<std::size_t>{2, 1, 0});
}

TEST_CASE("aligned types agree position-wise") {
  const std::vector<ApiRecord> members = {
      record("a", {{"input", AT::Tensor}, {"axis", AT::Int}, {"flag", AT::Bool}}),
      record("b", {{"flag", AT::Bool}, {"x", AT::Tensor}, {"dim", AT::Int}}),
      record("c", {{"dim", AT::Int}, {"keep", AT::Bool}, {"values", AT::Tensor}})};
  const AlignedSignature s = align_signature(members);
  for (std::size_t m = 0; m < members.size(); ++m) {
    const auto types = members[m].functional_types();
    std::vector<AT> canonical;
    for (const auto& c : s.canonical_params) canonical.push_back(c.type);
    CHECK(s.to_member<AT>(m, canonical) == types);
  }
}

TEST_CASE("unresolvable alignment throws") {
  const std::vector<ApiRecord> count_mismatch = {record("a", {{"input", AT::Tensor}}),
                                                 record("b", {{"input", AT::Tensor}, {"axis", AT::Int}})};
  CHECK_THROWS_AS(align_signature(count_mismatch), AlignmentError);
  const std::vector<ApiRecord> type_mismatch = {record("a", {{"input", AT::Tensor}}), record("b", {{"x", AT::Int}})};
  CHECK_THROWS_AS(align_signature(type_mismatch), AlignmentError);
  const std::vector<ApiRecord> unknown = {record("a", {{"input", AT::Unknown}}), record("b", {{"x", AT::Unknown}})};
  CHECK_THROWS_AS(align_signature(unknown), AlignmentError);
}
