#include "groundcheck/aggregation.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

#include <nlohmann/json.hpp>

using namespace groundcheck;

namespace {

SupportMatrix matrix_of(std::vector<std::vector<double>> rows) {
  return SupportMatrix::from_rows("m", std::move(rows));
}

}  // namespace

TEST_CASE("token max over windows, min over profile") {
  const auto result = aggregate(matrix_of({{0.9, 0.2}, {0.1, 0.8}}), 0.5);
  CHECK(result.token_profile.probs == std::vector<double>{0.9, 0.8});
  CHECK(result.token_profile.source_window == std::vector<int>{0, 1});
  CHECK(result.support_probability == 0.8);
  CHECK(result.hallucination_probability == 1.0 - 0.8);
}

TEST_CASE("single row: profile equals the row, P_S is its min") {
  const auto result = aggregate(matrix_of({{0.7, 0.3, 0.9}}), 0.5);
  CHECK(result.token_profile.probs == std::vector<double>{0.7, 0.3, 0.9});
  CHECK(result.support_probability == 0.3);
}

TEST_CASE("hallucinated spans are maximal runs under the threshold") {
  const auto result = aggregate(matrix_of({{0.9, 0.1, 0.2, 0.95}}), 0.5);
  REQUIRE(result.hallucinated_spans.size() == 1);
  const auto& span = result.hallucinated_spans[0];
  CHECK(span.token_range == Span{1, 3});
  CHECK(span.min_prob == 0.1);
  // from_rows fabricates one-byte token spans at the token index.
  CHECK(span.char_span == Span{1, 3});
}

TEST_CASE("span boundaries never split a token and cover whole runs") {
  const auto result =
      aggregate(matrix_of({{0.1, 0.6, 0.2, 0.3, 0.9, 0.4}}), 0.5);
  REQUIRE(result.hallucinated_spans.size() == 3);
  CHECK(result.hallucinated_spans[0].token_range == Span{0, 1});
  CHECK(result.hallucinated_spans[1].token_range == Span{2, 4});
  CHECK(result.hallucinated_spans[2].token_range == Span{5, 6});
}

TEST_CASE("example-level ablation false-positives on scattered evidence") {
  // Two sentences, each supported in a different window (0/1 oracle rows):
  // every row has a zero, so the ablation sees no fully supported window.
  const SupportMatrix scattered = matrix_of({
      {1.0, 1.0, 0.0, 0.0},  // window 1: sentence A supported
      {0.0, 0.0, 0.0, 0.0},  // window 2: nothing supported
      {0.0, 0.0, 1.0, 1.0},  // window 3: sentence B supported
  });

  const auto token_level = aggregate(scattered, 0.5);
  CHECK(token_level.hallucination_probability == 0.0);
  CHECK(token_level.hallucinated_spans.empty());

  const auto example_level = aggregate_example_level(scattered);
  CHECK(example_level.hallucination_probability == 1.0);
  CHECK(example_level.token_profile.probs.empty());  // no profile in ablation
}

TEST_CASE("ablation equals token level for a single window") {
  const std::vector<double> row = {0.4, 0.9, 0.6};
  const auto token_level = aggregate(matrix_of({row}), 0.5);
  const auto example_level = aggregate_example_level(matrix_of({row}));
  CHECK(token_level.support_probability == example_level.support_probability);
}

TEST_CASE("one fully supporting window dominates the ablation") {
  const auto result = aggregate_example_level(matrix_of({{1.0, 1.0}, {0.0, 0.0}}));
  CHECK(result.support_probability == 1.0);
  CHECK(result.hallucination_probability == 0.0);
}

TEST_CASE("empty matrices are rejected") {
  CHECK_THROWS_AS(aggregate(matrix_of({}), 0.5), EmptyMatrix);
  CHECK_THROWS_AS(aggregate_example_level(matrix_of({})), EmptyMatrix);
}

TEST_CASE("span threshold must be a probability") {
  CHECK_THROWS_AS(aggregate(matrix_of({{0.5}}), 0.0), InvalidConfig);
  CHECK_THROWS_AS(aggregate(matrix_of({{0.5}}), 1.0), InvalidConfig);
}

TEST_CASE("kth smallest knob relaxes the literal min") {
  AggregateConfig config;
  config.kth_smallest = 2;
  const auto result = aggregate(matrix_of({{0.1, 0.6, 0.9}}), config);
  CHECK(result.support_probability == 0.6);

  config.kth_smallest = 4;
  CHECK_THROWS_AS(aggregate(matrix_of({{0.1, 0.6, 0.9}}), config),
                  InvalidConfig);
}

TEST_CASE("aggregation properties on random matrices") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t windows = 1 + rng() % 6;
    const std::size_t tokens = 1 + rng() % 8;
    std::vector<std::vector<double>> rows(windows,
                                          std::vector<double>(tokens));
    for (auto& row : rows) {
      for (auto& p : row) p = uniform(rng);
    }

    const auto base = aggregate(matrix_of(rows), 0.5);
    const auto ablation = aggregate_example_level(matrix_of(rows));

    // P_H is exactly the complement; both in [0, 1].
    CHECK(base.hallucination_probability == 1.0 - base.support_probability);
    CHECK(base.support_probability >= 0.0);
    CHECK(base.support_probability <= 1.0);
    CHECK(base.hallucination_probability >= 0.0);
    CHECK(base.hallucination_probability <= 1.0);

    // Dominance: max-of-mins <= min-of-maxes.
    CHECK(ablation.support_probability <= base.support_probability);

    // Permutation invariance.
    auto shuffled = rows;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto permuted = aggregate(matrix_of(shuffled), 0.5);
    CHECK(permuted.support_probability == base.support_probability);
    CHECK(permuted.token_profile.probs == base.token_profile.probs);

    // Row-addition monotonicity.
    auto extended = rows;
    extended.push_back(std::vector<double>(tokens));
    for (auto& p : extended.back()) p = uniform(rng);
    const auto grown = aggregate(matrix_of(extended), 0.5);
    CHECK(grown.support_probability >= base.support_probability);
    for (std::size_t j = 0; j < tokens; ++j) {
      CHECK(grown.token_profile.probs[j] >= base.token_profile.probs[j]);
    }
  }
}

TEST_CASE("detection result JSON round-trips") {
  const auto result = aggregate(matrix_of({{0.9, 0.1, 0.2, 0.95}}), 0.5);
  const auto j = to_json(result);
  CHECK(j.at("example_id") == "m");
  CHECK(j.at("support_probability") == 0.1);
  CHECK(j.at("hallucination_probability") == 0.9);
  CHECK(j.at("token_profile").at("probs").size() == 4);
  REQUIRE(j.at("hallucinated_spans").size() == 1);

  const auto back = detection_result_from_json(j);
  CHECK(back.example_id == result.example_id);
  CHECK(back.support_probability == result.support_probability);
  CHECK(back.token_profile.probs == result.token_profile.probs);
  CHECK(back.hallucinated_spans.size() == result.hallucinated_spans.size());
  CHECK(back.hallucinated_spans[0].token_range ==
        result.hallucinated_spans[0].token_range);
}
