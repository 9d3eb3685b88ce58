#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "groundcheck/types.hpp"

namespace groundcheck {

enum class Split { kTrain, kVal, kTest };

std::string to_string(Split split);
Split split_from_string(const std::string& s);

/// One persisted RAG QA record: the example plus its vertical, split,
/// generator tag, and (once annotated) its support labels.
struct RagRecord {
  RagExample example;
  std::string domain;
  Split split = Split::kTrain;
  std::string generator;
  std::optional<bool> response_level_supported;
  std::optional<std::vector<SupportAnnotation>> annotations;

  bool annotated() const { return annotations.has_value(); }
};

nlohmann::json record_to_json(const RagRecord& record);
RagRecord record_from_json(const nlohmann::json& j);

/// Line-delimited JSON, one record per line, UTF-8.
std::vector<RagRecord> read_jsonl(std::istream& in);
std::vector<RagRecord> read_jsonl_file(const std::string& path);
void write_jsonl(std::ostream& out, const std::vector<RagRecord>& records);
void write_jsonl_file(const std::string& path,
                      const std::vector<RagRecord>& records);

/// Disagreement between the response-level verdict and sentence labels.
struct Conflict {
  int sentence_index = -1;  // -1 = example-level conflict
  std::string reason;
};

/// Flags noisy labels: the response marked supported while some sentence is
/// unsupported (one conflict per such sentence), or the response marked
/// unsupported while every sentence is supported or generally supported.
/// Throws MissingAnnotations when the record lacks annotations or the
/// response-level verdict.
std::vector<Conflict> detect_conflicts(const RagRecord& record);

/// What the annotator is asked about: the question, each document split
/// into sentences, and the response split into sentences.
struct AnnotationRequest {
  std::string question;
  std::vector<std::vector<std::string>> context_sentences;  // per document
  std::vector<std::string> response_sentences;
};

struct AnnotationResult {
  bool response_level_supported = false;
  std::vector<SupportAnnotation> annotations;  // exactly one per sentence
};

/// Produces response-level and sentence-level support judgments.
class AnnotatorClient {
 public:
  virtual ~AnnotatorClient() = default;
  virtual AnnotationResult annotate(const AnnotationRequest& request) = 0;
  /// Concurrency cap honored by reconcile_all's bounded in-flight window.
  virtual int max_in_flight() const { return 4; }
};

enum class ReconcileStatus { kClean, kResolvedPartial, kConflicting };

std::string to_string(ReconcileStatus status);

struct ReconciliationReport {
  std::string record_id;
  int attempts = 0;
  ReconcileStatus status = ReconcileStatus::kClean;
  std::vector<Conflict> conflicts;  // conflicts of the final attempt
};

/// Annotates and re-annotates up to max_attempts times. Residual conflicts
/// are resolved conservatively: conflicted sentences become unsupported on
/// both the sentence and example level, and the report says resolved_partial.
/// Transport failures are retried within the same attempt budget; if every
/// attempt fails, throws AnnotatorFailure.
std::pair<RagRecord, ReconciliationReport> reconcile(RagRecord record,
                                                     AnnotatorClient& client,
                                                     int max_attempts = 3);

/// Reconciles records concurrently, at most client.max_in_flight() at a
/// time, and returns results in input order.
std::vector<std::pair<RagRecord, ReconciliationReport>> reconcile_all(
    std::vector<RagRecord> records, AnnotatorClient& client,
    int max_attempts = 3);

/// Training-data augmentation: each record loses one random context
/// document (when it has several) and gains one document sampled from
/// another record. Annotations whose only evidence was dropped become
/// unsupported; inserted documents never add support. Seed-deterministic.
std::vector<RagRecord> transform_drop_insert(const std::vector<RagRecord>& batch,
                                             std::uint64_t seed);

/// Training-data augmentation: deranges (question, response) across the
/// batch; every shuffled record's annotations become all-unsupported since
/// the response is no longer grounded in its new context. Seed-deterministic.
std::vector<RagRecord> transform_shuffle_qr(const std::vector<RagRecord>& batch,
                                            std::uint64_t seed);

/// Builds the annotator request for a record (sentence views of context and
/// response).
AnnotationRequest annotation_request_for(const RagRecord& record);

}  // namespace groundcheck
