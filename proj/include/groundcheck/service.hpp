#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "groundcheck/aggregation.hpp"
#include "groundcheck/batching.hpp"
#include "groundcheck/evaluation.hpp"
#include "groundcheck/scoring.hpp"

namespace httplib {
class Server;
struct Request;
struct Response;
}  // namespace httplib

namespace groundcheck {

/// Serving configuration. File keys match field names; environment
/// variables GROUNDCHECK_<UPPER_FIELD> override file values.
struct ServiceConfig {
  std::string bind_address = "127.0.0.1";
  int port = 8080;

  int max_sequence_length = 512;
  int stride = 0;  // 0 = non-overlapping
  int reserved_special_tokens = 0;
  double span_threshold = 0.5;
  double example_threshold = 0.5;
  int kth_smallest = 1;
  std::string mode = "token";  // token | example

  int max_batch_windows = 32;
  int max_concurrent_requests = 32;
  int queue_capacity = 32;  // admissions beyond concurrent+queue get 503
  int worker_threads = 2;
  int max_wait_ms = 10;  // batching delay before a partial batch runs
  std::size_t max_request_tokens = 65536;

  std::string scorer = "lexical";  // lexical | model:<graph path>
  std::string tokenizer = "wordpunct";
  double lexical_overlap_fraction = 0.6;
  double noise_amplitude = 0.0;
  std::uint64_t noise_seed = 0;
  std::string model_input_ids_name = "input_ids";
  std::string model_attention_mask_name = "attention_mask";
  std::string model_output_name = "token_support_probs";

  void validate() const;

  /// Loads .json or .toml (flat key = value subset) by extension.
  static ServiceConfig from_file(const std::string& path);
  /// Applies GROUNDCHECK_* environment overrides in place.
  void apply_env_overrides();
  /// Sets one field from its string form; throws InvalidConfig on unknown
  /// keys or unparsable values.
  void set(const std::string& key, const std::string& value);
};

/// The pipeline view of a service config.
PipelineConfig pipeline_config(const ServiceConfig& config);

/// Builds the configured scorer ("lexical", optionally noisy, or
/// "model:<path>" through the model-runtime registry).
std::shared_ptr<const SupportScorer> make_scorer(const ServiceConfig& config);

/// Per-request phase timings in microseconds.
struct LatencyRecord {
  std::string request_id;
  std::int64_t tokenize_us = 0;
  std::int64_t window_us = 0;
  std::int64_t score_us = 0;
  std::int64_t aggregate_us = 0;
  std::int64_t total_us = 0;
  std::size_t input_token_count = 0;
};

struct DetectionOutcome {
  DetectionResult result;
  LatencyRecord latency;
  std::size_t window_count = 0;
  bool hallucinated = false;  // P_H >= example_threshold
};

/// tokenize -> window -> score -> aggregate with instrumentation. Serving
/// adds no semantics: with the same config and scorer the result equals the
/// offline pipeline's bit for bit. Throws RequestTooLarge beyond the token
/// cap.
class DetectionPipeline {
 public:
  DetectionPipeline(ServiceConfig config,
                    std::shared_ptr<const SupportScorer> scorer);

  /// executor may be null: windows are then scored inline.
  DetectionOutcome run(const RagExample& example, ScoringExecutor* executor,
                       std::string request_id) const;

  const ServiceConfig& config() const { return config_; }

 private:
  ServiceConfig config_;
  std::shared_ptr<const SupportScorer> scorer_;
};

/// Request counters and per-phase latency histograms in a plain-text
/// exposition format.
class ServiceMetrics {
 public:
  void record(const LatencyRecord& latency);
  void record_error(int status);
  std::string render() const;

  std::uint64_t requests_total() const { return requests_.load(); }

 private:
  static constexpr std::array<std::int64_t, 10> kBucketBoundsUs = {
      100, 250, 500, 1000, 2500, 5000, 10000, 50000, 250000, 1000000};

  struct Histogram {
    std::array<std::atomic<std::uint64_t>, kBucketBoundsUs.size() + 1> buckets{};
    std::atomic<std::uint64_t> count{0};
    std::atomic<std::int64_t> sum_us{0};
    void observe(std::int64_t us);
  };

  void render_histogram(std::string& out, const std::string& phase,
                        const Histogram& histogram) const;

  Histogram tokenize_, window_, score_, aggregate_, total_;
  std::atomic<std::uint64_t> requests_{0};
  std::atomic<std::uint64_t> errors_400_{0}, errors_413_{0}, errors_500_{0},
      errors_503_{0};
};

/// HTTP detection service:
///   POST /v1/detect   {context:[{id,text}], question, response} -> result
///   GET  /v1/health
///   GET  /v1/metrics
class DetectionServer {
 public:
  DetectionServer(ServiceConfig config,
                  std::shared_ptr<const SupportScorer> scorer);
  ~DetectionServer();

  /// Binds (port 0 picks a free port) and serves on a background thread.
  void start();
  void stop();
  /// Blocks until the server stops; for the serve CLI.
  void wait();

  int port() const { return port_; }
  const ServiceMetrics& metrics() const { return metrics_; }

 private:
  void handle_detect(const httplib::Request& request,
                     httplib::Response& response);

  ServiceConfig config_;
  std::shared_ptr<const SupportScorer> scorer_;
  DetectionPipeline pipeline_;
  std::unique_ptr<ScoringExecutor> executor_;
  ServiceMetrics metrics_;
  std::unique_ptr<httplib::Server> server_;
  std::thread listen_thread_;
  std::atomic<int> in_flight_{0};
  std::atomic<std::uint64_t> request_counter_{0};
  int port_ = 0;
};

}  // namespace groundcheck
