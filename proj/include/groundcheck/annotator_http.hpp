#pragma once

#include <string>
#include <vector>

#include "groundcheck/dataset.hpp"

namespace groundcheck {

/// Connection and prompting config for a chat-completion-style annotator.
/// Empty base_url/api_key fall back to the GROUNDCHECK_ANNOTATOR_BASE_URL /
/// GROUNDCHECK_ANNOTATOR_API_KEY environment variables.
struct HttpAnnotatorConfig {
  std::string base_url;  // scheme://host[:port]
  std::string api_key;
  std::string model = "gpt-4-turbo";
  std::string completions_path = "/v1/chat/completions";
  double annotation_temperature = 0.0;
  double generation_temperature = 1.0;
  int timeout_seconds = 60;
  int max_in_flight = 4;

  /// Placeholders: {question}, {context_sentences}, {response_sentences}.
  std::string annotation_template;  // empty = built-in default
  /// Placeholders: {documents}, {question}.
  std::string generation_template;  // empty = built-in default

  static HttpAnnotatorConfig from_env();
};

/// The built-in annotation prompt (chain-of-thought, then a JSON verdict
/// with response-level and per-sentence judgments).
const std::string& default_annotation_template();

/// The response-synthesis prompt: context documents separated by line
/// breaks, then the question.
const std::string& default_generation_template();

/// Annotator over an OpenAI-compatible chat endpoint. Sentences the model
/// flags as partially supported are mapped to unsupported, so they surface
/// as conflicts against a supported response-level verdict.
class HttpAnnotatorClient final : public AnnotatorClient {
 public:
  explicit HttpAnnotatorClient(HttpAnnotatorConfig config);

  AnnotationResult annotate(const AnnotationRequest& request) override;
  int max_in_flight() const override { return config_.max_in_flight; }

  /// Optional response synthesis for building new records.
  std::string generate(const std::string& question,
                       const std::vector<Document>& documents);

  /// The exact prompt annotate() would send; exposed for tests.
  std::string render_annotation_prompt(const AnnotationRequest& request) const;
  std::string render_generation_prompt(
      const std::string& question, const std::vector<Document>& documents) const;

 private:
  std::string chat(const std::string& prompt, double temperature);

  HttpAnnotatorConfig config_;
};

/// Parses the model's JSON verdict (possibly wrapped in prose or a fenced
/// block) into an AnnotationResult. Throws AnnotatorFailure on malformed
/// payloads or missing sentences.
AnnotationResult parse_annotation_payload(const std::string& content,
                                          std::size_t sentence_count);

}  // namespace groundcheck
