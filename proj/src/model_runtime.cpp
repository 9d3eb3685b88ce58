#include "groundcheck/model_runtime.hpp"

#include <map>
#include <mutex>

namespace groundcheck {

namespace {

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::map<std::string, ModelRuntimeFactory>& registry() {
  static std::map<std::string, ModelRuntimeFactory> factories;
  return factories;
}

std::string extension_of(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || dot + 1 == path.size()) return "";
  return path.substr(dot + 1);
}

}  // namespace

void register_model_runtime(const std::string& extension,
                            ModelRuntimeFactory factory) {
  std::lock_guard lock(registry_mutex());
  registry()[extension] = std::move(factory);
}

std::shared_ptr<ModelRuntime> load_model_runtime(const ModelRuntimeConfig& config) {
  const std::string ext = extension_of(config.graph_path);
  std::lock_guard lock(registry_mutex());
  const auto it = registry().find(ext);
  if (it == registry().end()) {
    throw InvalidConfig("no model runtime backend registered for '." + ext +
                        "' graphs (" + config.graph_path +
                        "); build with a runtime backend or use an oracle scorer");
  }
  return it->second(config);
}

EncodedWindow encode_window(const WindowInput& input) {
  const TokenizedExample& example = *input.example;
  const Span range = input.window.context_token_range;

  EncodedWindow encoded;
  encoded.tokens.reserve(range.size() + example.question_size() +
                         example.response_size());
  for (std::size_t i = range.begin; i < range.end; ++i) {
    encoded.tokens.push_back(example.context_tokens[i].text);
  }
  for (const auto& token : example.question_tokens) {
    encoded.tokens.push_back(token);
  }
  encoded.response_offset = encoded.tokens.size();
  encoded.response_length = example.response_size();
  for (const auto& token : example.response_tokens) {
    encoded.tokens.push_back(token.text);
  }
  return encoded;
}

ModelRuntimeScorer::ModelRuntimeScorer(std::shared_ptr<ModelRuntime> runtime,
                                       std::shared_ptr<const Tokenizer> tokenizer)
    : runtime_(std::move(runtime)),
      tokenizer_(tokenizer ? std::move(tokenizer)
                           : std::make_shared<WordPunctTokenizer>()) {
  if (!runtime_) throw InvalidConfig("ModelRuntimeScorer requires a runtime");
}

std::string ModelRuntimeScorer::name() const {
  return "model:" + runtime_->backend_name();
}

int ModelRuntimeScorer::max_sequence_length() const {
  return runtime_->max_sequence_length();
}

std::vector<double> ModelRuntimeScorer::score_window(
    const WindowInput& input) const {
  return score_batch({input}).front();
}

std::vector<std::vector<double>> ModelRuntimeScorer::score_batch(
    const std::vector<WindowInput>& inputs) const {
  std::vector<EncodedWindow> batch;
  batch.reserve(inputs.size());
  for (const auto& input : inputs) {
    batch.push_back(encode_window(input));
  }
  auto rows = runtime_->infer(batch);
  if (rows.size() != inputs.size()) {
    throw ShapeMismatch("model runtime returned " + std::to_string(rows.size()) +
                        " rows for a batch of " + std::to_string(inputs.size()));
  }
  return rows;
}

}  // namespace groundcheck
