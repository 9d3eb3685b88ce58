#include "groundcheck/windowing.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

#include "groundcheck/tokenizer.hpp"

using namespace groundcheck;

namespace {

// Synthetic example with exact C/Q/R counts under the whitespace tokenizer.
TokenizedExample synthetic_example(std::size_t context, std::size_t question,
                                   std::size_t response) {
  std::ostringstream ctx, q, r;
  for (std::size_t i = 0; i < context; ++i) ctx << "c" << i << ' ';
  for (std::size_t i = 0; i < question; ++i) q << "q" << i << ' ';
  for (std::size_t i = 0; i < response; ++i) r << "r" << i << ' ';
  RagExample example;
  example.id = "syn";
  example.context.push_back({"d0", ctx.str()});
  example.question = q.str();
  example.response = r.str();
  return tokenize_example(example, WhitespaceTokenizer{});
}

// Brute-force window enumeration used as the oracle for range checks.
std::vector<Span> enumerate_ranges(std::size_t total, std::size_t capacity,
                                   std::size_t stride) {
  std::vector<Span> ranges;
  for (std::size_t start = 0; start < total; start += stride) {
    ranges.push_back({start, std::min(start + capacity, total)});
  }
  return ranges;
}

}  // namespace

TEST_CASE("L=12 Q=3 R=4 C=12 gives three windows of capacity five") {
  const auto example = synthetic_example(12, 3, 4);
  const auto windows = build_windows(example, WindowConfig{12 + 4, 0, 4});
  // max_sequence_length 16 with 4 reserved keeps l = 16 - 3 - 4 - 4 = 5.
  REQUIRE(windows.size() == 3);
  CHECK(windows[0].context_token_range == Span{0, 5});
  CHECK(windows[1].context_token_range == Span{5, 10});
  CHECK(windows[2].context_token_range == Span{10, 12});
}

TEST_CASE("single window when the context fits exactly") {
  const auto example = synthetic_example(5, 3, 4);
  const auto windows = build_windows(example, WindowConfig{16, 0, 4});  // l = 5
  REQUIRE(windows.size() == 1);
  CHECK(windows[0].context_token_range == Span{0, 5});
}

TEST_CASE("overlapping stride: C=1000 l=300 stride=150 gives 7 windows") {
  const auto example = synthetic_example(1000, 10, 10);
  WindowConfig config;
  config.max_sequence_length = 320;  // l = 300
  config.stride = 150;
  const auto windows = build_windows(example, config);

  const auto expected = enumerate_ranges(1000, 300, 150);
  REQUIRE(windows.size() == 7);
  REQUIRE(windows.size() == expected.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    CHECK(windows[i].context_token_range == expected[i]);
  }

  // Each context token appears in at most two windows.
  for (std::size_t token = 0; token < 1000; ++token) {
    int appearances = 0;
    for (const auto& window : windows) {
      if (token >= window.context_token_range.begin &&
          token < window.context_token_range.end) {
        ++appearances;
      }
    }
    CHECK(appearances >= 1);
    CHECK(appearances <= 2);
  }
}

TEST_CASE("question and response exceeding the budget raise") {
  const auto example = synthetic_example(10, 8, 8);
  WindowConfig config;
  config.max_sequence_length = 16;  // Q + R == L
  CHECK_THROWS_AS(build_windows(example, config), QuestionResponseTooLong);
}

TEST_CASE("stride beyond capacity is rejected") {
  const auto example = synthetic_example(10, 2, 2);
  WindowConfig config;
  config.max_sequence_length = 16;  // l = 12
  config.stride = 13;
  CHECK_THROWS_AS(build_windows(example, config), InvalidConfig);
}

TEST_CASE("windowing contracts hold over random shapes") {
  std::mt19937 rng(1234);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t question = 1 + rng() % 8;
    const std::size_t response = 1 + rng() % 8;
    const std::size_t l = 1 + rng() % 40;
    const std::size_t context = 1 + rng() % 400;
    WindowConfig config;
    config.max_sequence_length =
        static_cast<int>(question + response + l);
    if (config.max_sequence_length < 16) config.max_sequence_length = 16;
    const std::size_t capacity =
        config.max_sequence_length - question - response;
    config.stride = static_cast<int>(1 + rng() % capacity);

    const auto example = synthetic_example(context, question, response);
    const auto windows = build_windows(example, config);

    // Count: ceil(C / stride).
    const std::size_t stride = static_cast<std::size_t>(config.stride);
    CHECK(windows.size() == (context + stride - 1) / stride);

    // Coverage and budget.
    std::vector<bool> covered(context, false);
    for (const auto& window : windows) {
      CHECK(window.context_token_range.size() + question + response <=
            static_cast<std::size_t>(config.max_sequence_length));
      CHECK(window.context_token_range.end <= context);
      for (std::size_t t = window.context_token_range.begin;
           t < window.context_token_range.end; ++t) {
        covered[t] = true;
      }
    }
    for (std::size_t t = 0; t < context; ++t) CHECK(covered[t]);

    // Consecutive ranges advance by stride.
    for (std::size_t i = 1; i < windows.size(); ++i) {
      CHECK(windows[i].context_token_range.begin -
                windows[i - 1].context_token_range.begin == stride);
    }
  }
}

namespace {

// Example with one response sentence per context document; sentence s is
// supported by document s's only sentence.
struct LabeledFixture {
  TokenizedExample example;
  std::vector<SupportAnnotation> annotations;
};

LabeledFixture scattered_fixture() {
  RagExample example;
  example.id = "scattered";
  // Three documents, ten tokens each; windows of capacity ten line up with
  // document boundaries.
  example.context.push_back({"d0", "alpha beta gamma delta epsilon zeta eta theta iota kappa"});
  example.context.push_back({"d1", "one two three four five six seven eight nine ten"});
  example.context.push_back({"d2", "red orange yellow green blue indigo violet black white gray"});
  example.question = "what ?";
  example.response = "First claim. Second claim.";

  LabeledFixture fixture;
  fixture.example = tokenize_example(example, WhitespaceTokenizer{});
  fixture.annotations = {
      {0, SupportKind::kSupported, {{0, 0}}},  // evidence in document 0
      {1, SupportKind::kSupported, {{2, 0}}},  // evidence in document 2
  };
  return fixture;
}

}  // namespace

TEST_CASE("labels follow evidence into the right windows") {
  auto fixture = scattered_fixture();
  // Q=2, R=4; l = 16 - 2 - 4 = 10: window i covers document i exactly.
  const auto windows = build_windows(fixture.example, WindowConfig{16, 0, 0});
  REQUIRE(windows.size() == 3);

  const auto labels =
      project_labels(fixture.example, fixture.annotations, windows);
  REQUIRE(labels.size() == 3);
  // Sentence 0 tokens: 0,1; sentence 1 tokens: 2,3.
  CHECK(labels[0].token_labels == std::vector<bool>{true, true, false, false});
  CHECK(labels[1].token_labels ==
        std::vector<bool>{false, false, false, false});
  CHECK(labels[2].token_labels == std::vector<bool>{false, false, true, true});

  // Example-level view: everything is supported somewhere.
  CHECK(required_example_label(labels) ==
        std::vector<bool>{true, true, true, true});
}

TEST_CASE("generally supported sentences are supported in every window") {
  auto fixture = scattered_fixture();
  fixture.annotations[0] = {0, SupportKind::kGenerallySupported, {}};
  const auto windows = build_windows(fixture.example, WindowConfig{16, 0, 0});
  const auto labels =
      project_labels(fixture.example, fixture.annotations, windows);
  for (const auto& window : labels) {
    CHECK(window.token_labels[0]);
    CHECK(window.token_labels[1]);
  }
}

TEST_CASE("evidence straddling a window boundary supports both windows") {
  RagExample example;
  example.id = "straddle";
  // One document, one long sentence of 12 tokens; capacity 8 puts the
  // sentence across windows [0,8) and [8,12).
  example.context.push_back(
      {"d0", "w0 w1 w2 w3 w4 w5 w6 w7 w8 w9 w10 w11"});
  example.question = "q";
  example.response = "claim here";
  const auto tokenized = tokenize_example(example, WhitespaceTokenizer{});
  REQUIRE(tokenized.context_sentences[0].size() == 1);

  const std::vector<SupportAnnotation> annotations = {
      {0, SupportKind::kSupported, {{0, 0}}}};
  const auto windows = build_windows(tokenized, WindowConfig{16, 0, 5});
  // l = 16 - 1 - 2 - 5 = 8 -> windows [0,8) and [8,12).
  REQUIRE(windows.size() == 2);

  const auto labels = project_labels(tokenized, annotations, windows);
  CHECK(labels[0].token_labels == std::vector<bool>{true, true});
  CHECK(labels[1].token_labels == std::vector<bool>{true, true});
}

TEST_CASE("dangling references are rejected") {
  auto fixture = scattered_fixture();
  const auto windows = build_windows(fixture.example, WindowConfig{16, 0, 0});

  auto bad_doc = fixture.annotations;
  bad_doc[0].refs = {{9, 0}};
  CHECK_THROWS_AS(project_labels(fixture.example, bad_doc, windows),
                  DanglingReference);

  auto bad_sentence = fixture.annotations;
  bad_sentence[0].refs = {{0, 5}};
  CHECK_THROWS_AS(project_labels(fixture.example, bad_sentence, windows),
                  DanglingReference);
}

TEST_CASE("uncovered response sentences are rejected") {
  auto fixture = scattered_fixture();
  const auto windows = build_windows(fixture.example, WindowConfig{16, 0, 0});
  fixture.annotations.pop_back();
  CHECK_THROWS_AS(project_labels(fixture.example, fixture.annotations, windows),
                  MissingAnnotations);
}

TEST_CASE("label monotonicity: wider windows never lose support") {
  auto fixture = scattered_fixture();
  const auto narrow = build_windows(fixture.example, WindowConfig{16, 0, 0});
  const auto narrow_labels =
      project_labels(fixture.example, fixture.annotations, narrow);

  // One window covering everything.
  const auto wide = build_windows(fixture.example, WindowConfig{64, 0, 0});
  REQUIRE(wide.size() == 1);
  const auto wide_labels =
      project_labels(fixture.example, fixture.annotations, wide);

  for (const auto& window : narrow_labels) {
    for (std::size_t j = 0; j < window.token_labels.size(); ++j) {
      if (window.token_labels[j]) CHECK(wide_labels[0].token_labels[j]);
    }
  }
}

TEST_CASE("required_example_label edge cases") {
  CHECK(required_example_label({}).empty());

  WindowLabels only;
  only.window_index = 0;
  only.token_labels = {true, false, true};
  CHECK(required_example_label({only}) == only.token_labels);

  WindowLabels none_a{0, {false, false}};
  WindowLabels none_b{1, {false, false}};
  CHECK(required_example_label({none_a, none_b}) ==
        std::vector<bool>{false, false});
}
