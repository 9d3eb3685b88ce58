#include "groundcheck/aggregation.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

namespace groundcheck {

namespace {

void check_matrix(const SupportMatrix& matrix) {
  if (matrix.rows.empty()) {
    throw EmptyMatrix("support matrix for '" + matrix.example_id +
                      "' has no rows");
  }
  for (const auto& row : matrix.rows) {
    if (row.size() != matrix.response_size) {
      throw ShapeMismatch("support matrix for '" + matrix.example_id +
                          "' is not rectangular");
    }
  }
  if (matrix.response_size == 0) {
    throw EmptyMatrix("support matrix for '" + matrix.example_id +
                      "' has zero response tokens");
  }
}

}  // namespace

DetectionResult aggregate(const SupportMatrix& matrix,
                          const AggregateConfig& config) {
  check_matrix(matrix);
  if (!(config.span_threshold > 0.0 && config.span_threshold < 1.0)) {
    throw InvalidConfig("span_threshold must be in (0, 1)");
  }
  if (config.kth_smallest < 1 ||
      static_cast<std::size_t>(config.kth_smallest) > matrix.response_size) {
    throw InvalidConfig("kth_smallest must be in [1, R]");
  }

  const std::size_t R = matrix.response_size;
  DetectionResult result;
  result.example_id = matrix.example_id;
  result.token_profile.probs.assign(R, 0.0);
  result.token_profile.source_window.assign(R, 0);

  for (std::size_t j = 0; j < R; ++j) {
    double best = matrix.rows[0][j];
    int best_window = 0;
    for (std::size_t i = 1; i < matrix.rows.size(); ++i) {
      if (matrix.rows[i][j] > best) {
        best = matrix.rows[i][j];
        best_window = static_cast<int>(i);
      }
    }
    result.token_profile.probs[j] = best;
    result.token_profile.source_window[j] = best_window;
  }

  std::vector<double> sorted = result.token_profile.probs;
  std::nth_element(sorted.begin(), sorted.begin() + (config.kth_smallest - 1),
                   sorted.end());
  result.support_probability = sorted[config.kth_smallest - 1];
  result.hallucination_probability = 1.0 - result.support_probability;

  // Maximal runs of tokens below the span threshold.
  const bool have_metadata = matrix.response_tokens.size() == R;
  std::size_t j = 0;
  while (j < R) {
    if (result.token_profile.probs[j] >= config.span_threshold) {
      ++j;
      continue;
    }
    std::size_t k = j;
    std::size_t worst = j;
    while (k < R && result.token_profile.probs[k] < config.span_threshold) {
      if (result.token_profile.probs[k] < result.token_profile.probs[worst]) {
        worst = k;
      }
      ++k;
    }
    HallucinatedSpan span;
    span.token_range = Span{j, k};
    span.min_prob = result.token_profile.probs[worst];
    if (have_metadata) {
      span.char_span = Span{matrix.response_tokens[j].char_span.begin,
                            matrix.response_tokens[k - 1].char_span.end};
      span.sentence_index = matrix.response_tokens[worst].sentence_index;
    }
    result.hallucinated_spans.push_back(span);
    j = k;
  }
  return result;
}

DetectionResult aggregate(const SupportMatrix& matrix, double span_threshold) {
  AggregateConfig config;
  config.span_threshold = span_threshold;
  return aggregate(matrix, config);
}

DetectionResult aggregate_example_level(const SupportMatrix& matrix) {
  check_matrix(matrix);

  DetectionResult result;
  result.example_id = matrix.example_id;
  double best = 0.0;
  for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
    const double row_min =
        *std::min_element(matrix.rows[i].begin(), matrix.rows[i].end());
    if (i == 0 || row_min > best) best = row_min;
  }
  result.support_probability = best;
  result.hallucination_probability = 1.0 - best;
  return result;
}

nlohmann::json to_json(const DetectionResult& result) {
  nlohmann::json spans = nlohmann::json::array();
  for (const auto& span : result.hallucinated_spans) {
    spans.push_back({
        {"token_range", {span.token_range.begin, span.token_range.end}},
        {"char_span", {span.char_span.begin, span.char_span.end}},
        {"sentence_index", span.sentence_index},
        {"min_prob", span.min_prob},
    });
  }
  return nlohmann::json{
      {"example_id", result.example_id},
      {"support_probability", result.support_probability},
      {"hallucination_probability", result.hallucination_probability},
      {"token_profile",
       {{"probs", result.token_profile.probs},
        {"source_window", result.token_profile.source_window}}},
      {"hallucinated_spans", std::move(spans)},
  };
}

DetectionResult detection_result_from_json(const nlohmann::json& j) {
  DetectionResult result;
  result.example_id = j.at("example_id").get<std::string>();
  result.support_probability = j.at("support_probability").get<double>();
  result.hallucination_probability =
      j.at("hallucination_probability").get<double>();
  const auto& profile = j.at("token_profile");
  result.token_profile.probs = profile.at("probs").get<std::vector<double>>();
  result.token_profile.source_window =
      profile.at("source_window").get<std::vector<int>>();
  for (const auto& s : j.at("hallucinated_spans")) {
    HallucinatedSpan span;
    span.token_range = {s.at("token_range")[0].get<std::size_t>(),
                        s.at("token_range")[1].get<std::size_t>()};
    span.char_span = {s.at("char_span")[0].get<std::size_t>(),
                      s.at("char_span")[1].get<std::size_t>()};
    span.sentence_index = s.at("sentence_index").get<int>();
    span.min_prob = s.at("min_prob").get<double>();
    result.hallucinated_spans.push_back(span);
  }
  return result;
}

}  // namespace groundcheck
