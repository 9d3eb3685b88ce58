#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "groundcheck/scoring.hpp"

namespace groundcheck {

struct AggregateConfig {
  /// Tokens with support probability below this form hallucinated spans.
  double span_threshold = 0.5;
  /// Which order statistic of the token profile becomes P_S. 1 = minimum.
  int kth_smallest = 1;
};

/// Per-token support profile: the cross-window maximum and which window
/// supplied it (lowest index on ties).
struct TokenSupportProfile {
  std::vector<double> probs;
  std::vector<int> source_window;
};

/// Maximal run of low-support response tokens mapped back to characters.
struct HallucinatedSpan {
  Span token_range;  // [first, last) response token index
  Span char_span;    // byte range in the response string
  int sentence_index = 0;  // sentence of the least-supported token in the run
  double min_prob = 0.0;
};

struct DetectionResult {
  std::string example_id;
  double support_probability = 0.0;        // P_S
  double hallucination_probability = 0.0;  // P_H = 1 - P_S
  TokenSupportProfile token_profile;
  std::vector<HallucinatedSpan> hallucinated_spans;
};

/// Token-level aggregation: profile p_j = max over windows, P_S = min over
/// the profile (or the configured order statistic), P_H = 1 - P_S, spans =
/// maximal runs with p_j below the span threshold. Throws EmptyMatrix.
DetectionResult aggregate(const SupportMatrix& matrix,
                          const AggregateConfig& config = {});
DetectionResult aggregate(const SupportMatrix& matrix, double span_threshold);

/// Example-level ablation: each window is scored by its own worst token
/// (row minimum) and the example takes the best window (max over rows).
/// No token profile or spans; this is the naive-chunking baseline that
/// false-positives when evidence is scattered across windows.
DetectionResult aggregate_example_level(const SupportMatrix& matrix);

/// Stable JSON shape consumed by the service and CLI.
nlohmann::json to_json(const DetectionResult& result);
DetectionResult detection_result_from_json(const nlohmann::json& j);

}  // namespace groundcheck
