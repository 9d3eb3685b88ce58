#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "groundcheck/scoring.hpp"

namespace groundcheck {

/// Where to find an exported inference graph and how its tensors are named.
struct ModelRuntimeConfig {
  std::string graph_path;
  std::string input_ids_name = "input_ids";
  std::string attention_mask_name = "attention_mask";
  std::string output_name = "token_support_probs";
  int max_sequence_length = 512;
};

/// One window flattened for inference: context slice, then question, then
/// response tokens. The backend owns vocabulary encoding; this layer only
/// fixes the layout and which positions are response tokens.
struct EncodedWindow {
  std::vector<std::string> tokens;
  std::size_t response_offset = 0;
  std::size_t response_length = 0;
};

/// Backend that executes an inference graph over encoded windows and
/// returns one support probability per response token, per window.
class ModelRuntime {
 public:
  virtual ~ModelRuntime() = default;
  virtual std::string backend_name() const = 0;
  virtual int max_sequence_length() const = 0;
  virtual std::vector<std::vector<double>> infer(
      const std::vector<EncodedWindow>& batch) = 0;
};

using ModelRuntimeFactory =
    std::function<std::shared_ptr<ModelRuntime>(const ModelRuntimeConfig&)>;

/// Registers a backend for graph files with the given extension ("onnx").
/// Later registrations for the same extension replace earlier ones.
void register_model_runtime(const std::string& extension,
                            ModelRuntimeFactory factory);

/// Instantiates the backend registered for config.graph_path's extension.
/// Throws InvalidConfig when no backend is registered for it.
std::shared_ptr<ModelRuntime> load_model_runtime(const ModelRuntimeConfig& config);

/// Adapts a ModelRuntime to the SupportScorer contract. Model runtimes are
/// treated as single-flight unless stated otherwise.
class ModelRuntimeScorer final : public SupportScorer {
 public:
  ModelRuntimeScorer(std::shared_ptr<ModelRuntime> runtime,
                     std::shared_ptr<const Tokenizer> tokenizer = nullptr);

  std::string name() const override;
  int max_sequence_length() const override;
  std::shared_ptr<const Tokenizer> tokenizer() const override { return tokenizer_; }
  bool single_flight() const override { return true; }
  std::vector<double> score_window(const WindowInput& input) const override;
  std::vector<std::vector<double>> score_batch(
      const std::vector<WindowInput>& inputs) const override;

 private:
  std::shared_ptr<ModelRuntime> runtime_;
  std::shared_ptr<const Tokenizer> tokenizer_;
};

/// Flattens one window into the layout ModelRuntime::infer expects.
EncodedWindow encode_window(const WindowInput& input);

}  // namespace groundcheck
