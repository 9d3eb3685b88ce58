#include "groundcheck/annotator_http.hpp"

#include <cstdlib>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace groundcheck {

using nlohmann::json;

namespace {

std::string getenv_or(const char* name, const std::string& fallback) {
  const char* value = std::getenv(name);
  return value ? std::string(value) : fallback;
}

std::string replace_all(std::string text, const std::string& placeholder,
                        const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(placeholder, pos)) != std::string::npos) {
    text.replace(pos, placeholder.size(), value);
    pos += value.size();
  }
  return text;
}

// Extracts the JSON object from a chat reply that may wrap it in reasoning
// prose or a ```json fence.
json extract_json_object(const std::string& content) {
  json direct = json::parse(content, nullptr, false);
  if (!direct.is_discarded() && direct.is_object()) return direct;

  const std::size_t first = content.find('{');
  const std::size_t last = content.rfind('}');
  if (first == std::string::npos || last == std::string::npos || last < first) {
    throw AnnotatorFailure("annotator reply contains no JSON object");
  }
  json embedded =
      json::parse(content.substr(first, last - first + 1), nullptr, false);
  if (embedded.is_discarded() || !embedded.is_object()) {
    throw AnnotatorFailure("annotator reply JSON failed to parse");
  }
  return embedded;
}

}  // namespace

HttpAnnotatorConfig HttpAnnotatorConfig::from_env() {
  HttpAnnotatorConfig config;
  config.base_url = getenv_or("GROUNDCHECK_ANNOTATOR_BASE_URL", "");
  config.api_key = getenv_or("GROUNDCHECK_ANNOTATOR_API_KEY", "");
  return config;
}

const std::string& default_annotation_template() {
  static const std::string kTemplate =
      "You are auditing a retrieval-augmented answer for grounding.\n"
      "Work through each response sentence step by step: restate its claim,"
      " scan the context sentences for supporting statements, and only then"
      " give your verdict.\n"
      "\n"
      "Question: {question}\n"
      "\n"
      "Context sentences, numbered per document:\n"
      "{context_sentences}\n"
      "\n"
      "Response sentences:\n"
      "{response_sentences}\n"
      "\n"
      "After your reasoning, reply with a single JSON object:\n"
      "{\"response_supported\": <bool>, \"sentences\": [{\"index\": <int>,"
      " \"kind\": \"supported\"|\"generally_supported\"|\"partially_supported\""
      "|\"unsupported\", \"refs\": [[<doc>, <sentence>], ...]}]}\n"
      "Use \"generally_supported\" for transitions and statements grounded in"
      " the question and context as a whole, including statements that the"
      " context lacks enough information. List refs only for \"supported\".";
  return kTemplate;
}

const std::string& default_generation_template() {
  static const std::string kTemplate =
      "Use the following pieces of context to answer the question.\n"
      "\n"
      "{documents}\n"
      "\n"
      "Question: {question}";
  return kTemplate;
}

AnnotationResult parse_annotation_payload(const std::string& content,
                                          std::size_t sentence_count) {
  const json payload = extract_json_object(content);
  if (!payload.contains("response_supported") || !payload.contains("sentences")) {
    throw AnnotatorFailure("annotator reply misses required fields");
  }

  AnnotationResult result;
  result.response_level_supported = payload["response_supported"].get<bool>();

  std::vector<bool> seen(sentence_count, false);
  for (const auto& entry : payload["sentences"]) {
    SupportAnnotation a;
    a.response_sentence_index = entry.at("index").get<int>();
    if (a.response_sentence_index < 0 ||
        static_cast<std::size_t>(a.response_sentence_index) >= sentence_count) {
      throw AnnotatorFailure("annotator labeled nonexistent sentence " +
                             std::to_string(a.response_sentence_index));
    }
    const std::string kind = entry.at("kind").get<std::string>();
    if (kind == "supported") {
      a.kind = SupportKind::kSupported;
      if (entry.contains("refs")) {
        for (const auto& ref : entry["refs"]) {
          a.refs.push_back({ref[0].get<int>(), ref[1].get<int>()});
        }
      }
      if (a.refs.empty()) {
        throw AnnotatorFailure("supported sentence " +
                               std::to_string(a.response_sentence_index) +
                               " carries no refs");
      }
    } else if (kind == "generally_supported") {
      a.kind = SupportKind::kGenerallySupported;
    } else if (kind == "unsupported" || kind == "partially_supported") {
      // Binary sentence scheme: partial support resolves to unsupported and
      // surfaces as a conflict when the response-level verdict disagrees.
      a.kind = SupportKind::kUnsupported;
    } else {
      throw AnnotatorFailure("unknown sentence kind '" + kind + "'");
    }
    if (seen[a.response_sentence_index]) {
      throw AnnotatorFailure("duplicate annotation for sentence " +
                             std::to_string(a.response_sentence_index));
    }
    seen[a.response_sentence_index] = true;
    result.annotations.push_back(std::move(a));
  }
  for (std::size_t s = 0; s < sentence_count; ++s) {
    if (!seen[s]) {
      throw AnnotatorFailure("annotator skipped sentence " + std::to_string(s));
    }
  }
  return result;
}

HttpAnnotatorClient::HttpAnnotatorClient(HttpAnnotatorConfig config)
    : config_(std::move(config)) {
  if (config_.base_url.empty()) {
    config_.base_url = getenv_or("GROUNDCHECK_ANNOTATOR_BASE_URL", "");
  }
  if (config_.api_key.empty()) {
    config_.api_key = getenv_or("GROUNDCHECK_ANNOTATOR_API_KEY", "");
  }
  if (config_.base_url.empty()) {
    throw InvalidConfig(
        "annotator base URL missing; set GROUNDCHECK_ANNOTATOR_BASE_URL");
  }
  if (config_.annotation_template.empty()) {
    config_.annotation_template = default_annotation_template();
  }
  if (config_.generation_template.empty()) {
    config_.generation_template = default_generation_template();
  }
}

std::string HttpAnnotatorClient::render_annotation_prompt(
    const AnnotationRequest& request) const {
  std::ostringstream context;
  for (std::size_t d = 0; d < request.context_sentences.size(); ++d) {
    context << "Document " << d << ":\n";
    for (std::size_t s = 0; s < request.context_sentences[d].size(); ++s) {
      context << "  [" << d << "," << s << "] "
              << request.context_sentences[d][s] << "\n";
    }
  }
  std::ostringstream response;
  for (std::size_t s = 0; s < request.response_sentences.size(); ++s) {
    response << "  [" << s << "] " << request.response_sentences[s] << "\n";
  }
  std::string prompt = config_.annotation_template;
  prompt = replace_all(prompt, "{question}", request.question);
  prompt = replace_all(prompt, "{context_sentences}", context.str());
  prompt = replace_all(prompt, "{response_sentences}", response.str());
  return prompt;
}

std::string HttpAnnotatorClient::render_generation_prompt(
    const std::string& question, const std::vector<Document>& documents) const {
  std::ostringstream docs;
  for (std::size_t d = 0; d < documents.size(); ++d) {
    if (d > 0) docs << "\n";
    docs << documents[d].text;
  }
  std::string prompt = config_.generation_template;
  prompt = replace_all(prompt, "{documents}", docs.str());
  prompt = replace_all(prompt, "{question}", question);
  return prompt;
}

std::string HttpAnnotatorClient::chat(const std::string& prompt,
                                      double temperature) {
  httplib::Client client(config_.base_url);
  client.set_connection_timeout(config_.timeout_seconds);
  client.set_read_timeout(config_.timeout_seconds);
  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }

  const json body{
      {"model", config_.model},
      {"temperature", temperature},
      {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
  };
  const auto result = client.Post(config_.completions_path, headers,
                                  body.dump(), "application/json");
  if (!result) {
    throw AnnotatorFailure("annotator endpoint unreachable: " +
                           httplib::to_string(result.error()));
  }
  if (result->status != 200) {
    throw AnnotatorFailure("annotator endpoint returned HTTP " +
                           std::to_string(result->status));
  }
  const json reply = json::parse(result->body, nullptr, false);
  if (reply.is_discarded()) {
    throw AnnotatorFailure("annotator endpoint returned invalid JSON");
  }
  try {
    return reply.at("choices").at(0).at("message").at("content")
        .get<std::string>();
  } catch (const json::exception&) {
    throw AnnotatorFailure("annotator reply misses choices[0].message.content");
  }
}

AnnotationResult HttpAnnotatorClient::annotate(const AnnotationRequest& request) {
  const std::string content =
      chat(render_annotation_prompt(request), config_.annotation_temperature);
  return parse_annotation_payload(content, request.response_sentences.size());
}

std::string HttpAnnotatorClient::generate(const std::string& question,
                                          const std::vector<Document>& documents) {
  return chat(render_generation_prompt(question, documents),
              config_.generation_temperature);
}

}  // namespace groundcheck
