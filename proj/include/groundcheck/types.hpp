#pragma once

#include <compare>
#include <cstddef>
#include <string>
#include <vector>

#include "groundcheck/errors.hpp"

namespace groundcheck {

/// Half-open byte range [begin, end) into a source string.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return begin >= end; }
  bool overlaps(const Span& other) const {
    return begin < other.end && other.begin < end;
  }
  auto operator<=>(const Span&) const = default;
};

/// One retrieved context document.
struct Document {
  std::string id;
  std::string text;
};

/// The unit of detection: retrieved context, user question, model response.
struct RagExample {
  std::string id;
  std::vector<Document> context;
  std::string question;
  std::string response;
};

/// Throws InvalidExample unless the example satisfies its invariants:
/// at least one context document, each document non-empty after trimming,
/// non-empty question and response.
void validate(const RagExample& example);

/// Where a sentence lives: in a context document or in the response.
struct SentenceSource {
  enum class Kind { kContext, kResponse };
  Kind kind = Kind::kResponse;
  int doc_index = -1;  // valid only for kContext

  static SentenceSource response() { return {Kind::kResponse, -1}; }
  static SentenceSource context(int doc_index) {
    return {Kind::kContext, doc_index};
  }
  bool operator==(const SentenceSource&) const = default;
};

/// A sentence located by byte span within its source string.
struct SentenceSpan {
  int index = 0;
  Span char_span;
  SentenceSource source;
};

/// How one response sentence relates to the context.
enum class SupportKind {
  kSupported,           // grounded in specific context sentences
  kGenerallySupported,  // grounded in the question/context as a whole
  kUnsupported,
};

/// Points at one context sentence: (document, sentence within document).
struct ContextSentenceRef {
  int doc_index = 0;
  int sentence_index = 0;
  auto operator<=>(const ContextSentenceRef&) const = default;
};

/// Ground-truth support link for one response sentence.
struct SupportAnnotation {
  int response_sentence_index = 0;
  SupportKind kind = SupportKind::kUnsupported;
  std::vector<ContextSentenceRef> refs;  // non-empty iff kind == kSupported
};

/// Context token with provenance: which document, where in its text.
struct ContextToken {
  std::string text;
  int doc_index = 0;
  Span char_span;
};

/// Response token tagged with the sentence it belongs to.
struct ResponseToken {
  std::string text;
  Span char_span;
  int sentence_index = 0;
};

/// Tokenized view of a RagExample. Counts C, Q, R are all >= 1.
struct TokenizedExample {
  std::string id;
  std::vector<ContextToken> context_tokens;
  std::vector<std::string> question_tokens;
  std::vector<ResponseToken> response_tokens;
  /// Sentence segmentation of the response, index-aligned with
  /// ResponseToken::sentence_index.
  std::vector<SentenceSpan> response_sentences;
  /// Sentence segmentation per context document.
  std::vector<std::vector<SentenceSpan>> context_sentences;

  std::size_t context_size() const { return context_tokens.size(); }
  std::size_t question_size() const { return question_tokens.size(); }
  std::size_t response_size() const { return response_tokens.size(); }
};

}  // namespace groundcheck
