#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "groundcheck/tokenizer.hpp"
#include "groundcheck/types.hpp"
#include "groundcheck/windowing.hpp"

namespace groundcheck {

/// One window plus the example it slices. The example outlives the call.
struct WindowInput {
  const TokenizedExample* example = nullptr;
  Window window;
};

/// Token-support scorer contract: for a window, one probability in [0, 1]
/// per response token. Implementations must be deterministic for a fixed
/// configuration; batching callers rely on it.
class SupportScorer {
 public:
  virtual ~SupportScorer() = default;

  virtual std::string name() const = 0;
  /// Sequence budget this scorer was built for.
  virtual int max_sequence_length() const { return 512; }
  /// The tokenizer whose units this scorer understands.
  virtual std::shared_ptr<const Tokenizer> tokenizer() const = 0;
  /// True if score_window calls must not run concurrently.
  virtual bool single_flight() const { return false; }

  /// Returns exactly R probabilities for the window's response tokens.
  virtual std::vector<double> score_window(const WindowInput& input) const = 0;

  /// Scores a batch; the default loops over score_window. Row order must
  /// match input order regardless of batch composition.
  virtual std::vector<std::vector<double>> score_batch(
      const std::vector<WindowInput>& inputs) const;
};

/// Per-window, per-response-token support probabilities for one example,
/// with enough response-token metadata to map spans back to characters.
struct SupportMatrix {
  std::string example_id;
  std::size_t response_size = 0;
  std::vector<std::vector<double>> rows;  // rows[window][token]
  std::vector<Window> windows;
  std::vector<ResponseToken> response_tokens;

  /// Builds a matrix from bare rows, fabricating one-byte token spans.
  /// Intended for tests and synthetic inputs.
  static SupportMatrix from_rows(std::string example_id,
                                 std::vector<std::vector<double>> rows);
};

/// Scores every window in order, batching score_window calls. The result is
/// independent of batch_size; batching is an execution detail. Throws
/// ShapeMismatch when a scorer returns the wrong row length or values
/// outside [0, 1], and ScorerFailure (tagged with the window index) when
/// the scorer itself throws.
SupportMatrix score_example(const TokenizedExample& example,
                            const std::vector<Window>& windows,
                            const SupportScorer& scorer, int batch_size = 32);

struct LexicalOverlapConfig {
  /// Fraction of a sentence's distinct content words that must appear in
  /// the window's context for the sentence to count as supported.
  double overlap_fraction = 0.6;
  std::shared_ptr<const Tokenizer> tokenizer;  // default: wordpunct
  int max_sequence_length = 512;
};

/// Deterministic test oracle: a response token scores 1.0 iff its
/// sentence's content-word overlap with the window's context tokens meets
/// the threshold, else 0.0. Question tokens never count as matches.
/// Sentences without content words score 1.0 (nothing to contradict).
class LexicalOverlapScorer final : public SupportScorer {
 public:
  explicit LexicalOverlapScorer(LexicalOverlapConfig config = {});

  std::string name() const override { return "lexical"; }
  int max_sequence_length() const override { return config_.max_sequence_length; }
  std::shared_ptr<const Tokenizer> tokenizer() const override {
    return config_.tokenizer;
  }
  std::vector<double> score_window(const WindowInput& input) const override;

 private:
  LexicalOverlapConfig config_;
};

/// Ground-truth replay oracle: emits 1.0 exactly where project_labels marks
/// a token supported, 0.0 elsewhere. Keyed by example id.
class AnnotationScorer final : public SupportScorer {
 public:
  AnnotationScorer(std::map<std::string, std::vector<SupportAnnotation>> annotations,
                   std::shared_ptr<const Tokenizer> tokenizer = nullptr,
                   int max_sequence_length = 512);

  /// Convenience for single-example use.
  static std::shared_ptr<AnnotationScorer> for_example(
      const std::string& example_id, std::vector<SupportAnnotation> annotations,
      std::shared_ptr<const Tokenizer> tokenizer = nullptr,
      int max_sequence_length = 512);

  std::string name() const override { return "annotation"; }
  int max_sequence_length() const override { return max_sequence_length_; }
  std::shared_ptr<const Tokenizer> tokenizer() const override { return tokenizer_; }
  std::vector<double> score_window(const WindowInput& input) const override;

 private:
  std::map<std::string, std::vector<SupportAnnotation>> annotations_;
  std::shared_ptr<const Tokenizer> tokenizer_;
  int max_sequence_length_;
};

/// Wraps a scorer with deterministic hash-seeded noise:
///   p' = clamp(p + amplitude * u),  u uniform in [-1, 1]
/// The perturbation depends only on (example id, window, token, seed), so
/// results stay invariant to batching and request order.
class NoisyScorer final : public SupportScorer {
 public:
  NoisyScorer(std::shared_ptr<const SupportScorer> inner, double amplitude,
              std::uint64_t seed);

  std::string name() const override { return inner_->name() + "+noise"; }
  int max_sequence_length() const override { return inner_->max_sequence_length(); }
  std::shared_ptr<const Tokenizer> tokenizer() const override {
    return inner_->tokenizer();
  }
  bool single_flight() const override { return inner_->single_flight(); }
  std::vector<double> score_window(const WindowInput& input) const override;

 private:
  std::shared_ptr<const SupportScorer> inner_;
  double amplitude_;
  std::uint64_t seed_;
};

/// True for tokens that carry at least one alphanumeric character and are
/// not on the built-in stopword list. Shared by the lexical oracle.
bool is_content_word(std::string_view token);

}  // namespace groundcheck
