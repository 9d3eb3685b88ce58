#include "groundcheck/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace groundcheck {

using nlohmann::json;

namespace {

void require_both_classes(const std::vector<LabeledScore>& scores) {
  std::size_t positives = 0;
  for (const auto& s : scores) {
    if (s.label == ExampleLabel::kHallucinated) ++positives;
    if (!std::isfinite(s.score)) {
      throw InvalidConfig("score for '" + s.example_id + "' is not finite");
    }
  }
  if (positives == 0 || positives == scores.size()) {
    throw DegenerateLabels("need at least one hallucinated and one clean "
                           "example, got " +
                           std::to_string(positives) + " positives of " +
                           std::to_string(scores.size()));
  }
}

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0;
};

ConfusionCounts confusion_at(const std::vector<LabeledScore>& scores,
                             double threshold) {
  ConfusionCounts counts;
  for (const auto& s : scores) {
    const bool predicted = s.score >= threshold;
    const bool actual = s.label == ExampleLabel::kHallucinated;
    if (predicted && actual) ++counts.tp;
    if (predicted && !actual) ++counts.fp;
    if (!predicted && actual) ++counts.fn;
  }
  return counts;
}

CurvePoint point_at(const std::vector<LabeledScore>& scores, double threshold) {
  const auto counts = confusion_at(scores, threshold);
  CurvePoint point;
  point.threshold = threshold;
  point.precision = counts.tp + counts.fp == 0
                        ? 0.0
                        : static_cast<double>(counts.tp) /
                              static_cast<double>(counts.tp + counts.fp);
  point.recall = counts.tp + counts.fn == 0
                     ? 0.0
                     : static_cast<double>(counts.tp) /
                           static_cast<double>(counts.tp + counts.fn);
  point.f1 = point.precision + point.recall == 0.0
                 ? 0.0
                 : 2.0 * point.precision * point.recall /
                       (point.precision + point.recall);
  return point;
}

}  // namespace

double auroc(const std::vector<LabeledScore>& scores) {
  require_both_classes(scores);

  std::vector<const LabeledScore*> sorted;
  sorted.reserve(scores.size());
  for (const auto& s : scores) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(),
            [](const LabeledScore* a, const LabeledScore* b) {
              return a->score < b->score;
            });

  // Rank-sum with average ranks over tie groups.
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j]->score == sorted[i]->score) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (sorted[k]->label == ExampleLabel::kHallucinated) {
        positive_rank_sum += avg_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = scores.size() - positives;
  const double u = positive_rank_sum -
                   static_cast<double>(positives) *
                       (static_cast<double>(positives) + 1.0) / 2.0;
  return u / (static_cast<double>(positives) * static_cast<double>(negatives));
}

ThresholdReport tune_threshold(const std::vector<LabeledScore>& scores) {
  require_both_classes(scores);

  std::set<double> unique;
  for (const auto& s : scores) unique.insert(s.score);

  // Candidates: every observed score (inclusive boundaries) plus midpoints
  // of the {0,1}-augmented score set (interior of every decision piece).
  std::set<double> candidates(unique);
  std::set<double> augmented(unique);
  augmented.insert(0.0);
  augmented.insert(1.0);
  for (auto it = augmented.begin(); std::next(it) != augmented.end(); ++it) {
    candidates.insert((*it + *std::next(it)) / 2.0);
  }

  ThresholdReport report;
  bool first = true;
  for (double threshold : candidates) {
    const CurvePoint point = point_at(scores, threshold);
    report.curve.push_back(point);
    // Strict improvement only: ties keep the lowest (highest-recall) threshold.
    if (first || point.f1 > report.f1) {
      report.best_threshold = point.threshold;
      report.precision = point.precision;
      report.recall = point.recall;
      report.f1 = point.f1;
      first = false;
    }
  }

  std::map<std::string, std::vector<LabeledScore>> by_tag;
  for (const auto& s : scores) by_tag[s.task_tag].push_back(s);
  for (const auto& [tag, tagged] : by_tag) {
    const CurvePoint point = point_at(tagged, report.best_threshold);
    report.per_tag.push_back(
        {tag, tagged.size(), point.precision, point.recall, point.f1});
  }
  return report;
}

BucketReport bucket_analysis(const std::vector<LabeledScore>& scores,
                             const std::vector<std::size_t>& bucket_edges) {
  for (std::size_t i = 1; i < bucket_edges.size(); ++i) {
    if (bucket_edges[i] <= bucket_edges[i - 1]) {
      throw InvalidConfig("bucket edges must be strictly increasing");
    }
  }

  BucketReport report;
  std::size_t lower = 0;
  for (std::size_t b = 0; b <= bucket_edges.size(); ++b) {
    Bucket bucket;
    bucket.lower = lower;
    if (b < bucket_edges.size()) {
      bucket.upper = bucket_edges[b];
    }

    std::vector<LabeledScore> members;
    for (const auto& s : scores) {
      if (s.context_token_length >= bucket.lower &&
          (!bucket.upper || s.context_token_length < *bucket.upper)) {
        members.push_back(s);
      }
    }
    bucket.count = members.size();
    try {
      bucket.auroc = auroc(members);
    } catch (const DegenerateLabels&) {
      bucket.auroc = std::nullopt;  // flagged unavailable
    }
    report.buckets.push_back(bucket);
    if (bucket.upper) lower = *bucket.upper;
  }

  const auto& reference = report.buckets.front().auroc;
  for (std::size_t b = 0; b < report.buckets.size(); ++b) {
    auto& bucket = report.buckets[b];
    if (b == 0 && bucket.auroc) {
      bucket.relative_change = 0.0;
    } else if (reference && bucket.auroc && *reference != 0.0) {
      bucket.relative_change = (*bucket.auroc - *reference) / *reference;
    }
  }
  return report;
}

AggregationMode aggregation_mode_from_string(const std::string& s) {
  if (s == "token") return AggregationMode::kToken;
  if (s == "example") return AggregationMode::kExample;
  throw InvalidConfig("unknown aggregation mode '" + s + "'");
}

std::string to_string(AggregationMode mode) {
  return mode == AggregationMode::kToken ? "token" : "example";
}

DetectionResult detect_example(const RagExample& example,
                               const SupportScorer& scorer,
                               const PipelineConfig& config) {
  WindowConfig window_config = config.window;
  if (window_config.max_sequence_length == 0) {
    window_config.max_sequence_length = scorer.max_sequence_length();
  }
  const auto tokenized = tokenize_example(example, *scorer.tokenizer());
  const auto windows = build_windows(tokenized, window_config);
  const auto matrix =
      score_example(tokenized, windows, scorer, config.batch_size);
  return config.mode == AggregationMode::kToken
             ? aggregate(matrix, config.aggregate)
             : aggregate_example_level(matrix);
}

ExampleLabel ground_truth_label(const RagRecord& record) {
  if (!record.annotations.has_value()) {
    throw MissingAnnotations("record '" + record.example.id +
                             "' is not annotated");
  }
  for (const auto& a : *record.annotations) {
    if (a.kind == SupportKind::kUnsupported) return ExampleLabel::kHallucinated;
  }
  return ExampleLabel::kClean;
}

LabeledScore score_record(const RagRecord& record, const SupportScorer& scorer,
                          const PipelineConfig& config) {
  LabeledScore out;
  out.example_id = record.example.id;
  out.label = ground_truth_label(record);
  out.task_tag = record.domain;

  WindowConfig window_config = config.window;
  if (window_config.max_sequence_length == 0) {
    window_config.max_sequence_length = scorer.max_sequence_length();
  }
  const auto tokenized = tokenize_example(record.example, *scorer.tokenizer());
  const auto windows = build_windows(tokenized, window_config);
  const auto matrix =
      score_example(tokenized, windows, scorer, config.batch_size);
  const auto result = config.mode == AggregationMode::kToken
                          ? aggregate(matrix, config.aggregate)
                          : aggregate_example_level(matrix);

  out.score = result.hallucination_probability;
  out.context_token_length = tokenized.context_size();
  return out;
}

EvaluationReport evaluate_pipeline(const std::vector<RagRecord>& records,
                                   const SupportScorer& scorer,
                                   const PipelineConfig& config) {
  std::vector<LabeledScore> scores;
  scores.reserve(records.size());
  for (const auto& record : records) {
    scores.push_back(score_record(record, scorer, config));
  }
  EvaluationReport report;
  report.examples = scores.size();
  report.auroc = auroc(scores);
  report.threshold = tune_threshold(scores);
  report.buckets = bucket_analysis(scores);
  return report;
}

json to_json(const ThresholdReport& report) {
  json per_tag = json::array();
  for (const auto& tag : report.per_tag) {
    per_tag.push_back({{"tag", tag.tag},
                       {"count", tag.count},
                       {"precision", tag.precision},
                       {"recall", tag.recall},
                       {"f1", tag.f1}});
  }
  json curve = json::array();
  for (const auto& point : report.curve) {
    curve.push_back({{"threshold", point.threshold},
                     {"precision", point.precision},
                     {"recall", point.recall},
                     {"f1", point.f1}});
  }
  return json{{"best_threshold", report.best_threshold},
              {"precision", report.precision},
              {"recall", report.recall},
              {"f1", report.f1},
              {"per_tag", std::move(per_tag)},
              {"curve", std::move(curve)}};
}

json to_json(const BucketReport& report) {
  json buckets = json::array();
  for (const auto& bucket : report.buckets) {
    json b{{"lower", bucket.lower}, {"count", bucket.count}};
    if (bucket.upper) b["upper"] = *bucket.upper;
    if (bucket.auroc) {
      b["auroc"] = *bucket.auroc;
    } else {
      b["unavailable"] = true;
    }
    if (bucket.relative_change) b["relative_change"] = *bucket.relative_change;
    buckets.push_back(std::move(b));
  }
  return json{{"metric", report.metric}, {"buckets", std::move(buckets)}};
}

json to_json(const EvaluationReport& report) {
  return json{{"examples", report.examples},
              {"auroc", report.auroc},
              {"threshold", to_json(report.threshold)},
              {"buckets", to_json(report.buckets)}};
}

std::string curve_to_csv(const ThresholdReport& report) {
  std::ostringstream out;
  out << "threshold,precision,recall,f1\n";
  for (const auto& point : report.curve) {
    out << point.threshold << ',' << point.precision << ',' << point.recall
        << ',' << point.f1 << '\n';
  }
  return out.str();
}

}  // namespace groundcheck
