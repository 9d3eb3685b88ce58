#include "groundcheck/service.hpp"

#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "groundcheck/model_runtime.hpp"

namespace groundcheck {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t elapsed_us(Clock::time_point from, Clock::time_point to) {
  return std::chrono::duration_cast<std::chrono::microseconds>(to - from).count();
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

long to_long(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long parsed = std::stol(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw InvalidConfig("config key '" + key + "' needs an integer, got '" +
                        value + "'");
  }
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double parsed = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw InvalidConfig("config key '" + key + "' needs a number, got '" +
                        value + "'");
  }
}

}  // namespace

void ServiceConfig::validate() const {
  if (!(span_threshold > 0.0 && span_threshold < 1.0)) {
    throw InvalidConfig("span_threshold must be in (0, 1)");
  }
  if (!(example_threshold > 0.0 && example_threshold < 1.0)) {
    throw InvalidConfig("example_threshold must be in (0, 1)");
  }
  if (max_batch_windows < 1) throw InvalidConfig("max_batch_windows must be >= 1");
  if (max_concurrent_requests < 1) {
    throw InvalidConfig("max_concurrent_requests must be >= 1");
  }
  if (queue_capacity < 0) throw InvalidConfig("queue_capacity must be >= 0");
  if (worker_threads < 1) throw InvalidConfig("worker_threads must be >= 1");
  if (max_wait_ms < 0) throw InvalidConfig("max_wait_ms must be >= 0");
  if (max_request_tokens < 16) {
    throw InvalidConfig("max_request_tokens must be >= 16");
  }
  aggregation_mode_from_string(mode);
  WindowConfig{max_sequence_length, stride, reserved_special_tokens}.validate();
}

void ServiceConfig::set(const std::string& key, const std::string& value) {
  if (key == "bind_address") bind_address = value;
  else if (key == "port") port = static_cast<int>(to_long(key, value));
  else if (key == "max_sequence_length")
    max_sequence_length = static_cast<int>(to_long(key, value));
  else if (key == "stride") stride = static_cast<int>(to_long(key, value));
  else if (key == "reserved_special_tokens")
    reserved_special_tokens = static_cast<int>(to_long(key, value));
  else if (key == "span_threshold") span_threshold = to_double(key, value);
  else if (key == "example_threshold") example_threshold = to_double(key, value);
  else if (key == "kth_smallest")
    kth_smallest = static_cast<int>(to_long(key, value));
  else if (key == "mode") mode = value;
  else if (key == "max_batch_windows")
    max_batch_windows = static_cast<int>(to_long(key, value));
  else if (key == "max_concurrent_requests")
    max_concurrent_requests = static_cast<int>(to_long(key, value));
  else if (key == "queue_capacity")
    queue_capacity = static_cast<int>(to_long(key, value));
  else if (key == "worker_threads")
    worker_threads = static_cast<int>(to_long(key, value));
  else if (key == "max_wait_ms")
    max_wait_ms = static_cast<int>(to_long(key, value));
  else if (key == "max_request_tokens")
    max_request_tokens = static_cast<std::size_t>(to_long(key, value));
  else if (key == "scorer") scorer = value;
  else if (key == "tokenizer") tokenizer = value;
  else if (key == "lexical_overlap_fraction")
    lexical_overlap_fraction = to_double(key, value);
  else if (key == "noise_amplitude") noise_amplitude = to_double(key, value);
  else if (key == "noise_seed")
    noise_seed = static_cast<std::uint64_t>(to_long(key, value));
  else if (key == "model_input_ids_name") model_input_ids_name = value;
  else if (key == "model_attention_mask_name") model_attention_mask_name = value;
  else if (key == "model_output_name") model_output_name = value;
  else throw InvalidConfig("unknown config key '" + key + "'");
}

namespace {

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> kKeys = {
      "bind_address", "port", "max_sequence_length", "stride",
      "reserved_special_tokens", "span_threshold", "example_threshold",
      "kth_smallest", "mode", "max_batch_windows", "max_concurrent_requests",
      "queue_capacity", "worker_threads", "max_wait_ms", "max_request_tokens",
      "scorer", "tokenizer", "lexical_overlap_fraction", "noise_amplitude",
      "noise_seed", "model_input_ids_name", "model_attention_mask_name",
      "model_output_name"};
  return kKeys;
}

ServiceConfig from_toml(std::istream& in) {
  ServiceConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    if (stripped.front() == '[') continue;  // flat config; sections ignored
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(line_no) +
                       " is not 'key = value'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (!value.empty() && (value.front() == '"' || value.front() == '\'')) {
      const auto close = value.find(value.front(), 1);
      if (close == std::string::npos) {
        throw ParseError("unterminated string on config line " +
                         std::to_string(line_no));
      }
      value = value.substr(1, close - 1);
    } else {
      // Strip an unquoted trailing comment.
      const auto hash = value.find('#');
      if (hash != std::string::npos) value = trim(value.substr(0, hash));
    }
    config.set(key, value);
  }
  return config;
}

ServiceConfig from_json_stream(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("config JSON: ") + e.what());
  }
  ServiceConfig config;
  for (const auto& [key, value] : j.items()) {
    if (value.is_string()) {
      config.set(key, value.get<std::string>());
    } else if (value.is_boolean()) {
      config.set(key, value.get<bool>() ? "true" : "false");
    } else {
      config.set(key, value.dump());
    }
  }
  return config;
}

}  // namespace

ServiceConfig ServiceConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config '" + path + "'");
  const bool is_json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  ServiceConfig config = is_json ? from_json_stream(in) : from_toml(in);
  config.validate();
  return config;
}

void ServiceConfig::apply_env_overrides() {
  for (const auto& key : config_keys()) {
    std::string env_name = "GROUNDCHECK_";
    for (char c : key) {
      env_name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    if (const char* value = std::getenv(env_name.c_str())) {
      set(key, value);
    }
  }
}

PipelineConfig pipeline_config(const ServiceConfig& config) {
  PipelineConfig out;
  out.window = WindowConfig{config.max_sequence_length, config.stride,
                            config.reserved_special_tokens};
  out.aggregate = AggregateConfig{config.span_threshold, config.kth_smallest};
  out.mode = aggregation_mode_from_string(config.mode);
  out.batch_size = config.max_batch_windows;
  return out;
}

std::shared_ptr<const SupportScorer> make_scorer(const ServiceConfig& config) {
  std::shared_ptr<const SupportScorer> scorer;
  if (config.scorer == "lexical") {
    LexicalOverlapConfig lexical;
    lexical.overlap_fraction = config.lexical_overlap_fraction;
    lexical.tokenizer = make_tokenizer(config.tokenizer);
    lexical.max_sequence_length = config.max_sequence_length;
    scorer = std::make_shared<LexicalOverlapScorer>(lexical);
  } else if (config.scorer.rfind("model:", 0) == 0) {
    ModelRuntimeConfig runtime_config;
    runtime_config.graph_path = config.scorer.substr(6);
    runtime_config.input_ids_name = config.model_input_ids_name;
    runtime_config.attention_mask_name = config.model_attention_mask_name;
    runtime_config.output_name = config.model_output_name;
    runtime_config.max_sequence_length = config.max_sequence_length;
    scorer = std::make_shared<ModelRuntimeScorer>(
        load_model_runtime(runtime_config), make_tokenizer(config.tokenizer));
  } else {
    throw InvalidConfig("unknown scorer '" + config.scorer +
                        "'; expected 'lexical' or 'model:<path>'");
  }
  if (config.noise_amplitude > 0.0) {
    scorer = std::make_shared<NoisyScorer>(scorer, config.noise_amplitude,
                                           config.noise_seed);
  }
  return scorer;
}

DetectionPipeline::DetectionPipeline(ServiceConfig config,
                                     std::shared_ptr<const SupportScorer> scorer)
    : config_(std::move(config)), scorer_(std::move(scorer)) {
  config_.validate();
  if (!scorer_) throw InvalidConfig("pipeline requires a scorer");
}

DetectionOutcome DetectionPipeline::run(const RagExample& example,
                                        ScoringExecutor* executor,
                                        std::string request_id) const {
  DetectionOutcome outcome;
  outcome.latency.request_id = std::move(request_id);

  const auto t0 = Clock::now();
  auto tokenized = std::make_shared<const TokenizedExample>(
      tokenize_example(example, *scorer_->tokenizer()));
  const auto t1 = Clock::now();

  const std::size_t total_tokens = tokenized->context_size() +
                                   tokenized->question_size() +
                                   tokenized->response_size();
  outcome.latency.input_token_count = total_tokens;
  if (total_tokens > config_.max_request_tokens) {
    throw RequestTooLarge("request has " + std::to_string(total_tokens) +
                          " tokens; cap is " +
                          std::to_string(config_.max_request_tokens));
  }

  const WindowConfig window_config{config_.max_sequence_length, config_.stride,
                                   config_.reserved_special_tokens};
  const auto windows = build_windows(*tokenized, window_config);
  const auto t2 = Clock::now();
  outcome.window_count = windows.size();

  SupportMatrix matrix;
  if (executor != nullptr) {
    auto future = executor->submit(tokenized, windows);
    matrix.example_id = tokenized->id;
    matrix.response_size = tokenized->response_size();
    matrix.windows = windows;
    matrix.response_tokens = tokenized->response_tokens;
    matrix.rows = future.get();  // rethrows scorer failures
  } else {
    matrix = score_example(*tokenized, windows, *scorer_,
                           config_.max_batch_windows);
  }
  const auto t3 = Clock::now();

  outcome.result =
      aggregation_mode_from_string(config_.mode) == AggregationMode::kToken
          ? aggregate(matrix,
                      AggregateConfig{config_.span_threshold, config_.kth_smallest})
          : aggregate_example_level(matrix);
  const auto t4 = Clock::now();

  outcome.hallucinated =
      outcome.result.hallucination_probability >= config_.example_threshold;
  outcome.latency.tokenize_us = elapsed_us(t0, t1);
  outcome.latency.window_us = elapsed_us(t1, t2);
  outcome.latency.score_us = elapsed_us(t2, t3);
  outcome.latency.aggregate_us = elapsed_us(t3, t4);
  outcome.latency.total_us = elapsed_us(t0, t4);
  return outcome;
}

void ServiceMetrics::Histogram::observe(std::int64_t us) {
  std::size_t bucket = 0;
  while (bucket < kBucketBoundsUs.size() && us > kBucketBoundsUs[bucket]) {
    ++bucket;
  }
  buckets[bucket].fetch_add(1, std::memory_order_relaxed);
  count.fetch_add(1, std::memory_order_relaxed);
  sum_us.fetch_add(us, std::memory_order_relaxed);
}

void ServiceMetrics::record(const LatencyRecord& latency) {
  requests_.fetch_add(1, std::memory_order_relaxed);
  tokenize_.observe(latency.tokenize_us);
  window_.observe(latency.window_us);
  score_.observe(latency.score_us);
  aggregate_.observe(latency.aggregate_us);
  total_.observe(latency.total_us);
}

void ServiceMetrics::record_error(int status) {
  switch (status) {
    case 400: errors_400_.fetch_add(1, std::memory_order_relaxed); break;
    case 413: errors_413_.fetch_add(1, std::memory_order_relaxed); break;
    case 503: errors_503_.fetch_add(1, std::memory_order_relaxed); break;
    default: errors_500_.fetch_add(1, std::memory_order_relaxed); break;
  }
}

void ServiceMetrics::render_histogram(std::string& out, const std::string& phase,
                                      const Histogram& histogram) const {
  std::uint64_t cumulative = 0;
  for (std::size_t b = 0; b < kBucketBoundsUs.size(); ++b) {
    cumulative += histogram.buckets[b].load(std::memory_order_relaxed);
    out += "groundcheck_phase_latency_us_bucket{phase=\"" + phase + "\",le=\"" +
           std::to_string(kBucketBoundsUs[b]) + "\"} " +
           std::to_string(cumulative) + "\n";
  }
  cumulative += histogram.buckets[kBucketBoundsUs.size()].load();
  out += "groundcheck_phase_latency_us_bucket{phase=\"" + phase +
         "\",le=\"+Inf\"} " + std::to_string(cumulative) + "\n";
  out += "groundcheck_phase_latency_us_sum{phase=\"" + phase + "\"} " +
         std::to_string(histogram.sum_us.load()) + "\n";
  out += "groundcheck_phase_latency_us_count{phase=\"" + phase + "\"} " +
         std::to_string(histogram.count.load()) + "\n";
}

std::string ServiceMetrics::render() const {
  std::string out;
  out += "# TYPE groundcheck_requests_total counter\n";
  out += "groundcheck_requests_total " + std::to_string(requests_.load()) + "\n";
  out += "# TYPE groundcheck_request_errors_total counter\n";
  out += "groundcheck_request_errors_total{code=\"400\"} " +
         std::to_string(errors_400_.load()) + "\n";
  out += "groundcheck_request_errors_total{code=\"413\"} " +
         std::to_string(errors_413_.load()) + "\n";
  out += "groundcheck_request_errors_total{code=\"500\"} " +
         std::to_string(errors_500_.load()) + "\n";
  out += "groundcheck_request_errors_total{code=\"503\"} " +
         std::to_string(errors_503_.load()) + "\n";
  out += "# TYPE groundcheck_phase_latency_us histogram\n";
  render_histogram(out, "tokenize", tokenize_);
  render_histogram(out, "window", window_);
  render_histogram(out, "score", score_);
  render_histogram(out, "aggregate", aggregate_);
  render_histogram(out, "total", total_);
  return out;
}

namespace {

json error_body(const std::string& message, const std::string& request_id) {
  return json{{"error", message}, {"request_id", request_id}};
}

void reply_json(httplib::Response& response, int status, const json& body) {
  response.status = status;
  response.set_content(body.dump(), "application/json");
}

}  // namespace

DetectionServer::DetectionServer(ServiceConfig config,
                                 std::shared_ptr<const SupportScorer> scorer)
    : config_(std::move(config)),
      scorer_(std::move(scorer)),
      pipeline_(config_, scorer_),
      server_(std::make_unique<httplib::Server>()) {
  config_.validate();
  executor_ = std::make_unique<ScoringExecutor>(
      scorer_, static_cast<std::size_t>(config_.max_batch_windows),
      config_.max_wait_ms, config_.worker_threads);

  const int pool_size =
      config_.max_concurrent_requests + config_.queue_capacity + 4;
  server_->new_task_queue = [pool_size] {
    return new httplib::ThreadPool(static_cast<std::size_t>(pool_size));
  };

  server_->Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200, json{{"status", "ok"}});
  });
  server_->Get("/v1/metrics",
               [this](const httplib::Request&, httplib::Response& res) {
                 res.status = 200;
                 res.set_content(metrics_.render(), "text/plain; version=0.0.4");
               });
  server_->Post("/v1/detect",
                [this](const httplib::Request& req, httplib::Response& res) {
                  handle_detect(req, res);
                });
}

DetectionServer::~DetectionServer() { stop(); }

void DetectionServer::start() {
  if (config_.port == 0) {
    port_ = server_->bind_to_any_port(config_.bind_address);
    if (port_ <= 0) {
      throw InvalidConfig("failed to bind " + config_.bind_address);
    }
  } else {
    if (!server_->bind_to_port(config_.bind_address, config_.port)) {
      throw InvalidConfig("failed to bind " + config_.bind_address + ":" +
                          std::to_string(config_.port));
    }
    port_ = config_.port;
  }
  listen_thread_ = std::thread([this] { server_->listen_after_bind(); });
  while (!server_->is_running()) {
    std::this_thread::yield();
  }
}

void DetectionServer::stop() {
  if (server_ && server_->is_running()) {
    server_->stop();
  }
  if (listen_thread_.joinable()) {
    listen_thread_.join();
  }
}

void DetectionServer::wait() {
  if (listen_thread_.joinable()) {
    listen_thread_.join();
  }
}

void DetectionServer::handle_detect(const httplib::Request& request,
                                    httplib::Response& response) {
  const std::string request_id =
      "r" + std::to_string(request_counter_.fetch_add(1) + 1);

  const int admitted = in_flight_.fetch_add(1) + 1;
  struct InFlightGuard {
    std::atomic<int>& counter;
    ~InFlightGuard() { counter.fetch_sub(1); }
  } guard{in_flight_};

  if (admitted > config_.max_concurrent_requests + config_.queue_capacity) {
    metrics_.record_error(503);
    reply_json(response, 503, error_body("detector saturated", request_id));
    return;
  }

  const json body = json::parse(request.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    metrics_.record_error(400);
    reply_json(response, 400, error_body("request body is not JSON", request_id));
    return;
  }

  RagExample example;
  example.id = body.value("id", request_id);
  if (body.contains("context") && body["context"].is_array()) {
    for (const auto& doc : body["context"]) {
      example.context.push_back(
          {doc.value("id", std::to_string(example.context.size())),
           doc.value("text", "")});
    }
  }
  example.question = body.value("question", "");
  example.response = body.value("response", "");

  try {
    validate(example);
  } catch (const InvalidExample& e) {
    metrics_.record_error(400);
    reply_json(response, 400, error_body(e.what(), request_id));
    return;
  }

  try {
    DetectionOutcome outcome = pipeline_.run(example, executor_.get(), request_id);
    json out = to_json(outcome.result);
    out["hallucinated"] = outcome.hallucinated;
    out["window_count"] = outcome.window_count;
    out["request_id"] = request_id;
    out["latency_ms"] = static_cast<double>(outcome.latency.total_us) / 1000.0;
    out["latency_us"] = json{{"tokenize", outcome.latency.tokenize_us},
                             {"window", outcome.latency.window_us},
                             {"score", outcome.latency.score_us},
                             {"aggregate", outcome.latency.aggregate_us},
                             {"total", outcome.latency.total_us}};
    out["input_token_count"] = outcome.latency.input_token_count;
    metrics_.record(outcome.latency);
    reply_json(response, 200, out);
  } catch (const QuestionResponseTooLong& e) {
    metrics_.record_error(400);
    reply_json(response, 400, error_body(e.what(), request_id));
  } catch (const EmptyAfterTokenization& e) {
    metrics_.record_error(400);
    reply_json(response, 400, error_body(e.what(), request_id));
  } catch (const RequestTooLarge& e) {
    metrics_.record_error(413);
    reply_json(response, 413, error_body(e.what(), request_id));
  } catch (const std::exception& e) {
    metrics_.record_error(500);
    reply_json(response, 500, error_body(e.what(), request_id));
  }
}

}  // namespace groundcheck
