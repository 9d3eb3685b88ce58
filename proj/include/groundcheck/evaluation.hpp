#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "groundcheck/aggregation.hpp"
#include "groundcheck/dataset.hpp"
#include "groundcheck/scoring.hpp"
#include "groundcheck/windowing.hpp"

namespace groundcheck {

enum class ExampleLabel { kClean, kHallucinated };

/// One scored example with its ground truth and bucketing metadata.
struct LabeledScore {
  std::string example_id;
  double score = 0.0;  // hallucination probability P_H
  ExampleLabel label = ExampleLabel::kClean;
  std::size_t context_token_length = 0;
  std::string task_tag;
};

/// Area under the ROC curve via the rank-sum formulation: the probability
/// that a random hallucinated example outscores a random clean one, ties
/// counted half. Throws DegenerateLabels unless both classes are present.
double auroc(const std::vector<LabeledScore>& scores);

struct CurvePoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct TagMetrics {
  std::string tag;
  std::size_t count = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ThresholdReport {
  double best_threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<TagMetrics> per_tag;  // at best_threshold
  std::vector<CurvePoint> curve;    // every candidate threshold, ascending
};

/// Sweeps every distinct decision boundary (observed scores plus midpoints
/// of the {0,1}-augmented score set) and returns the best-F1 point, ties
/// broken toward the lower threshold (higher recall). Predicts hallucinated
/// when score >= threshold.
ThresholdReport tune_threshold(const std::vector<LabeledScore>& scores);

struct Bucket {
  std::size_t lower = 0;
  std::optional<std::size_t> upper;  // nullopt = unbounded
  std::size_t count = 0;
  std::optional<double> auroc;            // nullopt = degenerate bucket
  std::optional<double> relative_change;  // vs the first bucket
};

struct BucketReport {
  std::string metric = "auroc";
  std::vector<Bucket> buckets;
};

/// Splits scores into context-length buckets [0,e1), [e1,e2), ..., [en,inf)
/// and reports per-bucket AUROC plus relative change against the first
/// bucket. Degenerate buckets are flagged unavailable instead of erroring.
BucketReport bucket_analysis(const std::vector<LabeledScore>& scores,
                             const std::vector<std::size_t>& bucket_edges = {
                                 5000, 16000});

enum class AggregationMode { kToken, kExample };

AggregationMode aggregation_mode_from_string(const std::string& s);
std::string to_string(AggregationMode mode);

/// End-to-end configuration shared by offline evaluation and serving.
/// window.max_sequence_length == 0 means "use the scorer's".
struct PipelineConfig {
  WindowConfig window{0, 0, 0};
  AggregateConfig aggregate;
  AggregationMode mode = AggregationMode::kToken;
  int batch_size = 32;
};

/// Windows, scores, and aggregates one example under the given config.
DetectionResult detect_example(const RagExample& example,
                               const SupportScorer& scorer,
                               const PipelineConfig& config);

/// Ground truth for an annotated record: hallucinated iff any response
/// sentence is unsupported. Throws MissingAnnotations when unannotated.
ExampleLabel ground_truth_label(const RagRecord& record);

/// Scores one annotated record and pairs it with its ground truth.
LabeledScore score_record(const RagRecord& record, const SupportScorer& scorer,
                          const PipelineConfig& config);

struct EvaluationReport {
  std::size_t examples = 0;
  double auroc = 0.0;
  ThresholdReport threshold;
  BucketReport buckets;
};

/// Glue: windows -> scores -> aggregate -> metrics over an annotated
/// dataset. Deterministic given scorer and config (examples are processed
/// and merged in input order).
EvaluationReport evaluate_pipeline(const std::vector<RagRecord>& records,
                                   const SupportScorer& scorer,
                                   const PipelineConfig& config);

nlohmann::json to_json(const EvaluationReport& report);
nlohmann::json to_json(const ThresholdReport& report);
nlohmann::json to_json(const BucketReport& report);

/// Curve points as CSV ("threshold,precision,recall,f1") for plotting.
std::string curve_to_csv(const ThresholdReport& report);

}  // namespace groundcheck
