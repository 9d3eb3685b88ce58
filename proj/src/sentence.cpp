#include "groundcheck/sentence.hpp"

#include <cctype>
#include <string>
#include <unordered_set>

namespace groundcheck {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

// Closing characters allowed between terminal punctuation and the
// whitespace that confirms a boundary.
bool is_closer(char c) {
  return c == '"' || c == '\'' || c == ')' || c == ']' || c == '}';
}

const std::unordered_set<std::string>& abbreviation_set() {
  static const std::unordered_set<std::string> kAbbreviations = {
      "mr.",   "mrs.",  "ms.",   "dr.",   "prof.", "rev.",  "gen.",
      "sen.",  "rep.",  "gov.",  "sgt.",  "capt.", "lt.",   "col.",
      "jr.",   "sr.",   "st.",   "mt.",   "ft.",   "no.",   "nos.",
      "vol.",  "pp.",   "p.",    "fig.",  "figs.", "eq.",   "eqs.",
      "sec.",  "ch.",   "al.",   "etc.",  "e.g.",  "i.e.",  "cf.",
      "vs.",   "v.",    "approx.", "dept.", "est.", "min.",  "max.",
      "inc.",  "ltd.",  "co.",   "corp.", "u.s.",  "u.k.",  "u.n.",
      "d.c.",  "a.m.",  "p.m.",  "b.c.",  "a.d.",  "ph.d.", "m.d.",
      "b.a.",  "m.a.",  "jan.",  "feb.",  "mar.",  "apr.",  "jun.",
      "jul.",  "aug.",  "sep.",  "sept.", "oct.",  "nov.",  "dec.",
      "mon.",  "tue.",  "wed.",  "thu.",  "fri.",  "sat.",  "sun.",
  };
  return kAbbreviations;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// The candidate abbreviation token ending at `dot` (inclusive): the maximal
// run of letters and internal periods before it, plus the final period.
std::string word_before_dot(std::string_view text, std::size_t dot) {
  std::size_t start = dot;
  while (start > 0) {
    char c = text[start - 1];
    if (is_alpha(c) || c == '.') {
      --start;
    } else {
      break;
    }
  }
  return lower(text.substr(start, dot - start + 1));
}

// A period ends a sentence unless the preceding token is on the
// abbreviation list. ("1791." and bare "." still end one.)
bool period_is_boundary(std::string_view text, std::size_t dot) {
  return !is_known_abbreviation(word_before_dot(text, dot));
}

}  // namespace

bool is_known_abbreviation(std::string_view word_with_period) {
  return abbreviation_set().count(lower(word_with_period)) > 0;
}

std::vector<SentenceSpan> segment_sentences(std::string_view text,
                                            SentenceSource source) {
  std::vector<SentenceSpan> spans;
  const std::size_t n = text.size();
  std::size_t pos = 0;
  int next_index = 0;

  while (pos < n) {
    while (pos < n && is_space(text[pos])) ++pos;
    if (pos >= n) break;
    const std::size_t start = pos;
    std::size_t end = n;  // exclusive; defaults to end of text

    for (std::size_t i = pos; i < n; ++i) {
      if (!is_terminal(text[i])) continue;
      if (text[i] == '.' && !period_is_boundary(text, i)) continue;
      // Absorb any further terminal marks ("?!", "...") and closers.
      std::size_t j = i;
      while (j + 1 < n && (is_terminal(text[j + 1]) || is_closer(text[j + 1]))) ++j;
      if (j + 1 < n && !is_space(text[j + 1])) continue;  // "3.14", "U.S.A"
      end = j + 1;
      break;
    }

    // Trim trailing whitespace inside [start, end).
    std::size_t last = end;
    while (last > start && is_space(text[last - 1])) --last;
    if (last > start) {
      spans.push_back({next_index++, Span{start, last}, source});
    }
    pos = end;
  }
  return spans;
}

}  // namespace groundcheck
