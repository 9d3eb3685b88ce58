#include "groundcheck/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace groundcheck {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> kStopwords = {
      "a",     "an",    "the",   "is",    "are",   "was",    "were",  "be",
      "been",  "being", "am",    "do",    "does",  "did",    "have",  "has",
      "had",   "of",    "to",    "in",    "on",    "at",     "by",    "for",
      "with",  "from",  "as",    "and",   "or",    "but",    "not",   "no",
      "it",    "its",   "this",  "that",  "these", "those",  "he",    "she",
      "they",  "we",    "you",   "i",     "his",   "her",    "their", "our",
      "your",  "my",    "will",  "would", "can",   "could",  "shall", "should",
      "may",   "might", "must",  "there", "here",  "what",   "which", "who",
      "when",  "where", "why",   "how",   "all",   "any",    "some",  "such",
      "than",  "then",  "too",   "very",  "also",  "into",   "over",  "about",
      "if",    "so",    "up",    "down",  "out",   "s",      "t",
  };
  return kStopwords;
}

// SplitMix64: decorrelates the packed key into a uniform 64-bit value.
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

bool is_content_word(std::string_view token) {
  bool has_alnum = false;
  for (char c : token) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      has_alnum = true;
      break;
    }
  }
  if (!has_alnum) return false;
  return stopwords().count(lower(token)) == 0;
}

std::vector<std::vector<double>> SupportScorer::score_batch(
    const std::vector<WindowInput>& inputs) const {
  std::vector<std::vector<double>> rows;
  rows.reserve(inputs.size());
  for (const auto& input : inputs) {
    rows.push_back(score_window(input));
  }
  return rows;
}

SupportMatrix SupportMatrix::from_rows(std::string example_id,
                                       std::vector<std::vector<double>> rows) {
  SupportMatrix m;
  m.example_id = std::move(example_id);
  m.response_size = rows.empty() ? 0 : rows.front().size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    m.windows.push_back({static_cast<int>(i), Span{0, 0}});
  }
  for (std::size_t j = 0; j < m.response_size; ++j) {
    m.response_tokens.push_back({"t" + std::to_string(j), Span{j, j + 1}, 0});
  }
  m.rows = std::move(rows);
  return m;
}

SupportMatrix score_example(const TokenizedExample& example,
                            const std::vector<Window>& windows,
                            const SupportScorer& scorer, int batch_size) {
  if (batch_size < 1) {
    throw InvalidConfig("batch_size must be >= 1");
  }
  const std::size_t response_size = example.response_size();

  SupportMatrix matrix;
  matrix.example_id = example.id;
  matrix.response_size = response_size;
  matrix.windows = windows;
  matrix.response_tokens = example.response_tokens;
  matrix.rows.reserve(windows.size());

  for (std::size_t begin = 0; begin < windows.size();
       begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(
        begin + static_cast<std::size_t>(batch_size), windows.size());
    std::vector<WindowInput> batch;
    batch.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      batch.push_back({&example, windows[i]});
    }

    std::vector<std::vector<double>> rows;
    try {
      rows = scorer.score_batch(batch);
    } catch (const ShapeMismatch&) {
      throw;
    } catch (const std::exception& e) {
      throw ScorerFailure("scorer '" + scorer.name() + "' failed on windows [" +
                          std::to_string(begin) + ", " + std::to_string(end) +
                          ") of '" + example.id + "': " + e.what());
    }

    if (rows.size() != end - begin) {
      throw ShapeMismatch("scorer '" + scorer.name() + "' returned " +
                          std::to_string(rows.size()) + " rows for a batch of " +
                          std::to_string(end - begin));
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != response_size) {
        throw ShapeMismatch(
            "scorer '" + scorer.name() + "' returned " +
            std::to_string(rows[i].size()) + " probabilities for window " +
            std::to_string(begin + i) + "; expected " +
            std::to_string(response_size));
      }
      for (double p : rows[i]) {
        if (!(p >= 0.0 && p <= 1.0)) {
          throw ShapeMismatch("scorer '" + scorer.name() +
                              "' returned probability " + std::to_string(p) +
                              " outside [0, 1] in window " +
                              std::to_string(begin + i));
        }
      }
      matrix.rows.push_back(std::move(rows[i]));
    }
  }
  return matrix;
}

LexicalOverlapScorer::LexicalOverlapScorer(LexicalOverlapConfig config)
    : config_(std::move(config)) {
  if (!(config_.overlap_fraction > 0.0 && config_.overlap_fraction <= 1.0)) {
    throw InvalidConfig("overlap_fraction must be in (0, 1]");
  }
  if (!config_.tokenizer) {
    config_.tokenizer = std::make_shared<WordPunctTokenizer>();
  }
}

std::vector<double> LexicalOverlapScorer::score_window(
    const WindowInput& input) const {
  const TokenizedExample& example = *input.example;
  const Span range = input.window.context_token_range;

  std::unordered_set<std::string> context_words;
  for (std::size_t i = range.begin; i < range.end && i < example.context_tokens.size();
       ++i) {
    const auto& text = example.context_tokens[i].text;
    if (is_content_word(text)) context_words.insert(lower(text));
  }

  // Distinct content words per response sentence.
  const std::size_t sentence_count = example.response_sentences.size();
  std::vector<std::unordered_set<std::string>> sentence_words(sentence_count);
  for (const auto& token : example.response_tokens) {
    if (is_content_word(token.text)) {
      sentence_words[token.sentence_index].insert(lower(token.text));
    }
  }

  std::vector<double> sentence_score(sentence_count, 1.0);
  for (std::size_t s = 0; s < sentence_count; ++s) {
    if (sentence_words[s].empty()) continue;  // vacuously supported
    std::size_t present = 0;
    for (const auto& word : sentence_words[s]) {
      if (context_words.count(word)) ++present;
    }
    const double fraction =
        static_cast<double>(present) / static_cast<double>(sentence_words[s].size());
    sentence_score[s] = fraction >= config_.overlap_fraction ? 1.0 : 0.0;
  }

  std::vector<double> probs;
  probs.reserve(example.response_size());
  for (const auto& token : example.response_tokens) {
    probs.push_back(sentence_score[token.sentence_index]);
  }
  return probs;
}

AnnotationScorer::AnnotationScorer(
    std::map<std::string, std::vector<SupportAnnotation>> annotations,
    std::shared_ptr<const Tokenizer> tokenizer, int max_sequence_length)
    : annotations_(std::move(annotations)),
      tokenizer_(tokenizer ? std::move(tokenizer)
                           : std::make_shared<WordPunctTokenizer>()),
      max_sequence_length_(max_sequence_length) {}

std::shared_ptr<AnnotationScorer> AnnotationScorer::for_example(
    const std::string& example_id, std::vector<SupportAnnotation> annotations,
    std::shared_ptr<const Tokenizer> tokenizer, int max_sequence_length) {
  std::map<std::string, std::vector<SupportAnnotation>> map;
  map.emplace(example_id, std::move(annotations));
  return std::make_shared<AnnotationScorer>(std::move(map), std::move(tokenizer),
                                            max_sequence_length);
}

std::vector<double> AnnotationScorer::score_window(const WindowInput& input) const {
  const auto it = annotations_.find(input.example->id);
  if (it == annotations_.end()) {
    throw MissingAnnotations("annotation scorer has no annotations for '" +
                             input.example->id + "'");
  }
  const auto labels = project_labels(*input.example, it->second, {input.window});
  std::vector<double> probs;
  probs.reserve(labels.front().token_labels.size());
  for (bool supported : labels.front().token_labels) {
    probs.push_back(supported ? 1.0 : 0.0);
  }
  return probs;
}

NoisyScorer::NoisyScorer(std::shared_ptr<const SupportScorer> inner,
                         double amplitude, std::uint64_t seed)
    : inner_(std::move(inner)), amplitude_(amplitude), seed_(seed) {
  if (!inner_) throw InvalidConfig("NoisyScorer requires an inner scorer");
  if (amplitude_ < 0.0 || amplitude_ > 1.0) {
    throw InvalidConfig("noise amplitude must be in [0, 1]");
  }
}

std::vector<double> NoisyScorer::score_window(const WindowInput& input) const {
  auto probs = inner_->score_window(input);
  const std::uint64_t id_hash =
      splitmix64(std::hash<std::string>{}(input.example->id) ^ seed_);
  for (std::size_t j = 0; j < probs.size(); ++j) {
    const std::uint64_t key = splitmix64(
        id_hash ^ (static_cast<std::uint64_t>(input.window.index) << 32) ^ j);
    const double uniform =
        static_cast<double>(key >> 11) / static_cast<double>(1ULL << 53);
    probs[j] = std::clamp(probs[j] + amplitude_ * (2.0 * uniform - 1.0), 0.0, 1.0);
  }
  return probs;
}

}  // namespace groundcheck
