#include "groundcheck/tokenizer.hpp"

#include <cctype>

#include "groundcheck/sentence.hpp"

namespace groundcheck {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_word(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string trimmed(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

void validate(const RagExample& example) {
  if (example.context.empty()) {
    throw InvalidExample("example '" + example.id + "' has no context documents");
  }
  for (std::size_t d = 0; d < example.context.size(); ++d) {
    if (trimmed(example.context[d].text).empty()) {
      throw InvalidExample("example '" + example.id + "' context document " +
                           std::to_string(d) + " is empty");
    }
  }
  if (trimmed(example.question).empty()) {
    throw InvalidExample("example '" + example.id + "' has an empty question");
  }
  if (trimmed(example.response).empty()) {
    throw InvalidExample("example '" + example.id + "' has an empty response");
  }
}

std::vector<RawToken> WhitespaceTokenizer::tokenize(std::string_view text) const {
  std::vector<RawToken> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && is_space(text[i])) ++i;
    if (i >= n) break;
    std::size_t j = i;
    while (j < n && !is_space(text[j])) ++j;
    out.push_back({std::string(text.substr(i, j - i)), Span{i, j}});
    i = j;
  }
  return out;
}

std::vector<RawToken> WordPunctTokenizer::tokenize(std::string_view text) const {
  std::vector<RawToken> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    if (is_space(text[i])) {
      ++i;
      continue;
    }
    const bool word = is_word(text[i]);
    std::size_t j = i + 1;
    while (j < n && !is_space(text[j]) && is_word(text[j]) == word) ++j;
    out.push_back({std::string(text.substr(i, j - i)), Span{i, j}});
    i = j;
  }
  return out;
}

std::shared_ptr<const Tokenizer> make_tokenizer(const std::string& name) {
  if (name == "whitespace") return std::make_shared<WhitespaceTokenizer>();
  if (name == "wordpunct" || name.empty()) {
    return std::make_shared<WordPunctTokenizer>();
  }
  throw InvalidConfig("unknown tokenizer '" + name + "'");
}

TokenizedExample tokenize_example(const RagExample& example,
                                  const Tokenizer& tokenizer) {
  validate(example);

  TokenizedExample out;
  out.id = example.id;

  for (std::size_t d = 0; d < example.context.size(); ++d) {
    const auto tokens = tokenizer.tokenize(example.context[d].text);
    for (const auto& t : tokens) {
      out.context_tokens.push_back({t.text, static_cast<int>(d), t.char_span});
    }
    out.context_sentences.push_back(segment_sentences(
        example.context[d].text, SentenceSource::context(static_cast<int>(d))));
  }

  for (const auto& t : tokenizer.tokenize(example.question)) {
    out.question_tokens.push_back(t.text);
  }

  out.response_sentences = segment_sentences(example.response);
  const auto response_tokens = tokenizer.tokenize(example.response);
  std::size_t sentence = 0;
  for (const auto& t : response_tokens) {
    // Sentences cover all non-whitespace bytes, so every token start falls
    // inside exactly one sentence span.
    while (sentence + 1 < out.response_sentences.size() &&
           t.char_span.begin >= out.response_sentences[sentence].char_span.end) {
      ++sentence;
    }
    out.response_tokens.push_back(
        {t.text, t.char_span, static_cast<int>(sentence)});
  }

  if (out.context_tokens.empty()) {
    throw EmptyAfterTokenization("context of '" + example.id +
                                 "' tokenized to zero tokens");
  }
  if (out.question_tokens.empty()) {
    throw EmptyAfterTokenization("question of '" + example.id +
                                 "' tokenized to zero tokens");
  }
  if (out.response_tokens.empty()) {
    throw EmptyAfterTokenization("response of '" + example.id +
                                 "' tokenized to zero tokens");
  }
  return out;
}

}  // namespace groundcheck
