#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "groundcheck/types.hpp"

namespace groundcheck {

/// Token with its byte span in the source string.
struct RawToken {
  std::string text;
  Span char_span;
};

/// Deterministic string -> token mapping with byte spans. Implementations
/// must be pure: same input, same tokens; and stable under concatenation:
/// tokenizing a substring cut at token boundaries yields the same tokens.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::string name() const = 0;
  virtual std::vector<RawToken> tokenize(std::string_view text) const = 0;

  /// Token count without materializing token strings.
  std::size_t count(std::string_view text) const { return tokenize(text).size(); }
};

/// Tokens are maximal non-whitespace runs.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::string name() const override { return "whitespace"; }
  std::vector<RawToken> tokenize(std::string_view text) const override;
};

/// Tokens are runs of alphanumerics or runs of non-space punctuation,
/// so "Washington, D.C." -> [Washington][,][D][.][C][.].
class WordPunctTokenizer final : public Tokenizer {
 public:
  std::string name() const override { return "wordpunct"; }
  std::vector<RawToken> tokenize(std::string_view text) const override;
};

/// Returns the named tokenizer ("whitespace" | "wordpunct").
std::shared_ptr<const Tokenizer> make_tokenizer(const std::string& name);

/// Tokenizes all three parts of an example and tags response tokens with
/// their sentence index. Throws InvalidExample on invariant violations and
/// EmptyAfterTokenization if any part tokenizes to zero tokens.
TokenizedExample tokenize_example(const RagExample& example,
                                  const Tokenizer& tokenizer);

}  // namespace groundcheck
