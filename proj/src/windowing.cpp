#include "groundcheck/windowing.hpp"

#include <algorithm>
#include <string>

namespace groundcheck {

void WindowConfig::validate() const {
  if (max_sequence_length < 16) {
    throw InvalidConfig("max_sequence_length must be >= 16, got " +
                        std::to_string(max_sequence_length));
  }
  if (stride < 0) {
    throw InvalidConfig("stride must be >= 0");
  }
  if (reserved_special_tokens < 0) {
    throw InvalidConfig("reserved_special_tokens must be >= 0");
  }
}

std::size_t context_capacity(const TokenizedExample& example,
                             const WindowConfig& config) {
  config.validate();
  const long budget = static_cast<long>(config.max_sequence_length) -
                      static_cast<long>(example.question_size()) -
                      static_cast<long>(example.response_size()) -
                      config.reserved_special_tokens;
  if (budget < 1) {
    throw QuestionResponseTooLong(
        "question (" + std::to_string(example.question_size()) +
        ") + response (" + std::to_string(example.response_size()) +
        ") + reserved (" + std::to_string(config.reserved_special_tokens) +
        ") tokens leave no context room in a sequence of " +
        std::to_string(config.max_sequence_length));
  }
  return static_cast<std::size_t>(budget);
}

std::vector<Window> build_windows(const TokenizedExample& example,
                                  const WindowConfig& config) {
  const std::size_t capacity = context_capacity(example, config);
  const std::size_t stride =
      config.stride == 0 ? capacity : static_cast<std::size_t>(config.stride);
  if (stride > capacity) {
    throw InvalidConfig("stride " + std::to_string(stride) +
                        " exceeds context capacity " + std::to_string(capacity) +
                        "; windows would leave coverage gaps");
  }

  const std::size_t total = example.context_size();
  std::vector<Window> windows;
  windows.reserve((total + stride - 1) / stride);
  int index = 0;
  for (std::size_t start = 0; start < total; start += stride) {
    windows.push_back(
        {index++, Span{start, std::min(start + capacity, total)}});
  }
  return windows;
}

namespace {

// Token-index range of each context sentence, resolved once per example.
// Indexed [doc][sentence]; empty range for sentences with no tokens.
std::vector<std::vector<Span>> sentence_token_ranges(
    const TokenizedExample& example) {
  std::vector<std::vector<Span>> ranges(example.context_sentences.size());
  std::size_t tok = 0;
  for (std::size_t d = 0; d < example.context_sentences.size(); ++d) {
    const auto& sentences = example.context_sentences[d];
    ranges[d].resize(sentences.size());
    for (std::size_t s = 0; s < sentences.size(); ++s) {
      while (tok < example.context_tokens.size() &&
             (example.context_tokens[tok].doc_index < static_cast<int>(d) ||
              (example.context_tokens[tok].doc_index == static_cast<int>(d) &&
               example.context_tokens[tok].char_span.end <=
                   sentences[s].char_span.begin))) {
        ++tok;
      }
      const std::size_t first = tok;
      while (tok < example.context_tokens.size() &&
             example.context_tokens[tok].doc_index == static_cast<int>(d) &&
             example.context_tokens[tok].char_span.begin <
                 sentences[s].char_span.end) {
        ++tok;
      }
      ranges[d][s] = Span{first, tok};
    }
  }
  return ranges;
}

}  // namespace

std::vector<WindowLabels> project_labels(
    const TokenizedExample& example,
    const std::vector<SupportAnnotation>& annotations,
    const std::vector<Window>& windows) {
  const std::size_t sentence_count = example.response_sentences.size();

  // One annotation per response sentence, every sentence covered.
  std::vector<const SupportAnnotation*> by_sentence(sentence_count, nullptr);
  for (const auto& a : annotations) {
    if (a.response_sentence_index < 0 ||
        static_cast<std::size_t>(a.response_sentence_index) >= sentence_count) {
      throw DanglingReference("annotation targets response sentence " +
                              std::to_string(a.response_sentence_index) +
                              " but the response has " +
                              std::to_string(sentence_count) + " sentences");
    }
    by_sentence[a.response_sentence_index] = &a;
  }
  for (std::size_t s = 0; s < sentence_count; ++s) {
    if (by_sentence[s] == nullptr) {
      throw MissingAnnotations("response sentence " + std::to_string(s) +
                               " of '" + example.id + "' has no annotation");
    }
  }

  const auto ranges = sentence_token_ranges(example);

  // Evidence token ranges per response sentence (empty for non-supported).
  std::vector<std::vector<Span>> evidence(sentence_count);
  for (std::size_t s = 0; s < sentence_count; ++s) {
    const auto& annotation = *by_sentence[s];
    if (annotation.kind != SupportKind::kSupported) continue;
    for (const auto& ref : annotation.refs) {
      if (ref.doc_index < 0 ||
          static_cast<std::size_t>(ref.doc_index) >= ranges.size()) {
        throw DanglingReference("annotation for sentence " + std::to_string(s) +
                                " references document " +
                                std::to_string(ref.doc_index));
      }
      const auto& doc_ranges = ranges[ref.doc_index];
      if (ref.sentence_index < 0 ||
          static_cast<std::size_t>(ref.sentence_index) >= doc_ranges.size()) {
        throw DanglingReference(
            "annotation for sentence " + std::to_string(s) +
            " references sentence " + std::to_string(ref.sentence_index) +
            " of document " + std::to_string(ref.doc_index) + " which has " +
            std::to_string(doc_ranges.size()) + " sentences");
      }
      evidence[s].push_back(doc_ranges[ref.sentence_index]);
    }
  }

  std::vector<WindowLabels> out;
  out.reserve(windows.size());
  for (const auto& window : windows) {
    // Window-level support per sentence, then fan out to tokens.
    std::vector<bool> sentence_supported(sentence_count, false);
    for (std::size_t s = 0; s < sentence_count; ++s) {
      switch (by_sentence[s]->kind) {
        case SupportKind::kGenerallySupported:
          sentence_supported[s] = true;
          break;
        case SupportKind::kSupported:
          for (const auto& range : evidence[s]) {
            if (range.overlaps(window.context_token_range)) {
              sentence_supported[s] = true;
              break;
            }
          }
          break;
        case SupportKind::kUnsupported:
          break;
      }
    }
    WindowLabels labels;
    labels.window_index = window.index;
    labels.token_labels.reserve(example.response_size());
    for (const auto& token : example.response_tokens) {
      labels.token_labels.push_back(sentence_supported[token.sentence_index]);
    }
    out.push_back(std::move(labels));
  }
  return out;
}

std::vector<bool> required_example_label(const std::vector<WindowLabels>& labels) {
  if (labels.empty()) return {};
  std::vector<bool> out(labels.front().token_labels.size(), false);
  for (const auto& window : labels) {
    for (std::size_t j = 0; j < out.size() && j < window.token_labels.size(); ++j) {
      if (window.token_labels[j]) out[j] = true;
    }
  }
  return out;
}

}  // namespace groundcheck
