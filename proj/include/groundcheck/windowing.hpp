#pragma once

#include <vector>

#include "groundcheck/types.hpp"

namespace groundcheck {

/// Controls how long examples are sliced into model-input windows.
struct WindowConfig {
  /// Maximum tokens per model input (context slice + question + response).
  int max_sequence_length = 512;
  /// Context-token advance between consecutive windows. 0 means
  /// non-overlapping: stride equals the window's context capacity.
  int stride = 0;
  /// Token budget set aside for scorer-specific separator/special tokens.
  int reserved_special_tokens = 0;

  void validate() const;
};

/// One model-input slice. The window carries the full question and response
/// by construction; only the context range varies.
struct Window {
  int index = 0;
  /// Token-index range into TokenizedExample::context_tokens.
  Span context_token_range;
};

/// Per-window training labels, one per response token.
struct WindowLabels {
  int window_index = 0;
  std::vector<bool> token_labels;  // true = supported in this window
};

/// Context capacity l = L - Q - R - reserved. Throws QuestionResponseTooLong
/// when the question and response alone exhaust the budget (l < 1).
std::size_t context_capacity(const TokenizedExample& example,
                             const WindowConfig& config);

/// Slices the context into windows of at most l tokens advancing by stride
/// (default l, i.e. disjoint). The union of ranges covers [0, C); the last
/// window may be short, no padding. Window count is ceil(C / stride).
std::vector<Window> build_windows(const TokenizedExample& example,
                                  const WindowConfig& config);

/// Projects sentence-level annotations into per-window token labels.
/// A response token is supported in window w iff its sentence is
/// generally_supported (supported in every window), or is supported by at
/// least one referenced context sentence whose token range overlaps w's
/// context range (any-overlap rule). Throws DanglingReference for refs to
/// nonexistent context sentences and MissingAnnotations if any response
/// sentence lacks an annotation.
std::vector<WindowLabels> project_labels(
    const TokenizedExample& example,
    const std::vector<SupportAnnotation>& annotations,
    const std::vector<Window>& windows);

/// Token-wise OR across windows: a token is example-supported iff it is
/// supported in at least one window.
std::vector<bool> required_example_label(const std::vector<WindowLabels>& labels);

}  // namespace groundcheck
