#include <doctest.h>

#include <cmath>
#include <sstream>

#include "crossfuzz/similarity.hpp"

using namespace crossfuzz;
using doctest::Approx;

namespace {

ApiRecord record(std::string source, std::string name, std::vector<AbstractType> types,
                 std::string description = "") {
  ApiRecord r;
  r.source_id = std::move(source);
  r.qualified_name = name;
  r.normalized_name = normalize_api_name(name);
  r.description = std::move(description);
  int i = 0;
  for (auto t : types) r.params.push_back(ParamSpec{"p" + std::to_string(i++), "", t, ParamRole::Functional, false});
  return r;
}

using AT = AbstractType;

}  // namespace

TEST_CASE("levenshtein") {
  CHECK(levenshtein("argsort", "argsort") == 0);
  CHECK(levenshtein("softmax", "softmin") == 2);
  CHECK(levenshtein("", "abc") == 3);
  CHECK(levenshtein("abc", "") == 3);
  CHECK(levenshtein("kitten", "sitting") == 3);
  CHECK(levenshtein("argsort", "conv2d") == 7);
  CHECK(levenshtein("crossentropy_loss", "softmax_cross_entropy") == 14);
}

TEST_CASE("name_similarity") {
  CHECK(name_similarity("argsort", "argsort") == 1.0);
  CHECK(name_similarity("softmax", "softmin") == Approx(0.714286).epsilon(1e-4));
  CHECK(name_similarity("", "") == 1.0);
  CHECK(name_similarity("argsort", "conv2d") == 0.0);
  CHECK(name_similarity("argsort", "sort") == Approx(0.571429).epsilon(1e-4));
  CHECK(name_similarity("argsort", "argmax") == Approx(0.428571).epsilon(1e-4));
  CHECK(name_similarity("crossentropy_loss", "softmax_cross_entropy") == Approx(1.0 / 3.0).epsilon(1e-4));
}

TEST_CASE("lexical embeddings") {
  const std::vector<std::string> texts = {"Sorts the tensor along an axis.", "sorts array axis", ""};
  const LexicalProvider p(texts);

  const EmbeddingVector empty = p.embed_text("");
  CHECK(empty.values.size() == p.dimension());
  for (double v : empty.values) CHECK(v == 0.0);

  CHECK(p.embed_text("sorts the tensor").values == p.embed_text("sorts the tensor").values);

  const EmbeddingVector hot = p.embed_text("sorts tensor axis");
  double norm = 0.0;
  std::size_t nonzero = 0;
  for (double v : hot.values) {
    norm += v * v;
    if (v != 0.0) {
      ++nonzero;
      CHECK(v == Approx(1.0 / std::sqrt(3.0)));
    }
  }
  CHECK(nonzero == 3);
  CHECK(norm == Approx(1.0));

  CHECK(description_similarity(hot, p.embed_text("sorts array axis")) == Approx(2.0 / 3.0).epsilon(1e-4));
  CHECK(description_similarity(hot, hot) == Approx(1.0));
  CHECK(description_similarity(hot, empty) == 0.0);
  CHECK(hot.provider_id == "lexical-tf");
}

TEST_CASE("tokenizer lowercases and strips punctuation") {
  CHECK(tokenize_description("Sorts, THE tensor!") == std::vector<std::string>{"sorts", "the", "tensor"});
  CHECK(tokenize_description("top_k (values)") == std::vector<std::string>{"top_k", "values"});
  CHECK(tokenize_description("").empty());
}

TEST_CASE("description_similarity rejects mixed providers") {
  EmbeddingVector a{{1.0, 0.0}, "x"};
  EmbeddingVector b{{1.0, 0.0}, "y"};
  EmbeddingVector c{{1.0, 0.0, 0.0}, "x"};
  CHECK_THROWS_AS(description_similarity(a, b), std::invalid_argument);
  CHECK_THROWS_AS(description_similarity(a, c), std::invalid_argument);
}

TEST_CASE("precomputed provider") {
  std::istringstream in(R"({"source":"a","name":"a.f","vector":[1,0,0]})" "\n"
                        R"({"source":"b","name":"b.f","vector":[0.6,0.8,0]})");
  const auto p = PrecomputedProvider::parse(in);
  CHECK(p.dimension() == 3);
  const auto va = p.embed(record("a", "a.f", {}));
  const auto vb = p.embed(record("b", "b.f", {}));
  CHECK(description_similarity(va, vb) == Approx(0.6));
  try {
    (void)p.embed(record("a", "a.missing", {}));
    FAIL("expected a provider error");
  } catch (const ProviderError& e) {
    CHECK(e.kind() == ProviderError::Kind::Runtime);
  }
  try {
    (void)PrecomputedProvider::load("/nonexistent/vectors.jsonl");
    FAIL("expected a provider error");
  } catch (const ProviderError& e) {
    CHECK(e.kind() == ProviderError::Kind::Configuration);
  }
  std::istringstream ragged(R"({"source":"a","name":"a.f","vector":[1,0]})" "\n"
                            R"({"source":"a","name":"a.g","vector":[1,0,0]})");
  CHECK_THROWS_AS(PrecomputedProvider::parse(ragged), ProviderError);
}

TEST_CASE("count_similarity") {
  CHECK(count_similarity(2, 2) == 1.0);
  CHECK(count_similarity(1, 3) == Approx(1.0 / 3.0).epsilon(1e-4));
  CHECK(count_similarity(0, 0) == 1.0);
  CHECK(count_similarity(0, 4) == 0.0);
}

TEST_CASE("type_similarity") {
  const std::vector<AT> ti{AT::Tensor, AT::Int};
  const std::vector<AT> t{AT::Tensor};
  const std::vector<AT> i{AT::Int};
  const std::vector<AT> tib{AT::Tensor, AT::Int, AT::Bool};
  CHECK(type_similarity(ti, ti) == 1.0);
  CHECK(type_similarity(t, i) == 0.0);
  CHECK(type_similarity(tib, ti) == Approx(2.0 / 3.0).epsilon(1e-4));
  CHECK(type_similarity({}, {}) == 1.0);
  const std::vector<AT> u{AT::Unknown};
  CHECK(type_similarity(u, u) == 0.0);
  const std::vector<AT> it{AT::Int, AT::Tensor};
  CHECK(type_similarity(ti, it) == 1.0);
  const std::vector<AT> f{AT::Float};
  CHECK(type_similarity(i, f) == 0.0);
}

TEST_CASE("param_similarity") {
  const auto argsort_a = record("a", "a.argsort", {AT::Tensor, AT::Int});
  const auto argsort_b = record("b", "b.argsort", {AT::Tensor, AT::Int});
  CHECK(param_similarity(argsort_a, argsort_b).param_sim == 2.0);

  const auto s = param_similarity(record("a", "a.f", {AT::Tensor}), record("b", "b.f", {AT::Int}));
  // Equal counts still score 1 under the count rule; only the types disagree.
  CHECK(s.count_sim == 1.0);
  CHECK(s.type_sim == 0.0);
  CHECK(s.param_sim == 1.0);

  const auto three = param_similarity(record("a", "a.f", {AT::Tensor, AT::Int, AT::Bool}), argsort_b);
  CHECK(three.count_sim == Approx(2.0 / 3.0));
  CHECK(three.type_sim == Approx(2.0 / 3.0));
  CHECK(three.param_sim == Approx(4.0 / 3.0).epsilon(1e-3));
  CHECK(three.param_sim == Approx(three.count_sim + three.type_sim));
}

TEST_CASE("control params are excluded from parameter similarity") {
  auto a = record("a", "a.argsort", {AT::Tensor, AT::Int});
  a.params.push_back(ParamSpec{"stable", "bool", AT::Bool, ParamRole::Control, true});
  const auto b = record("b", "b.argsort", {AT::Tensor, AT::Int});
  CHECK(param_similarity(a, b).param_sim == 2.0);
}

TEST_CASE("score_pair fills every field") {
  const std::vector<std::string> texts = {"sorts the tensor", "sorts an array"};
  const LexicalProvider p(texts);
  const auto s = score_pair(record("a", "torch.argsort", {AT::Tensor, AT::Int}, "sorts the tensor"),
                            record("b", "tf.argsort", {AT::Tensor, AT::Int}, "sorts an array"), p);
  CHECK(s.name_sim == 1.0);
  CHECK(s.param_sim == 2.0);
  CHECK(s.desc_sim > 0.0);
  CHECK(s.desc_sim < 1.0);
}
