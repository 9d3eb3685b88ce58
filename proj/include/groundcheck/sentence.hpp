#pragma once

#include <string_view>
#include <vector>

#include "groundcheck/types.hpp"

namespace groundcheck {

/// Splits text into sentence spans. Deterministic rule-based segmentation:
/// terminal punctuation (. ! ?), optionally followed by closing quotes or
/// brackets, ends a sentence when followed by whitespace. Periods after
/// known abbreviations ("Dr.", "e.g.", ...) or single-letter initials do
/// not end a sentence. If no boundary is found the whole text is one
/// sentence. Whitespace-only text yields no sentences.
///
/// Spans are half-open byte offsets trimmed to the first/last non-whitespace
/// character, so the returned spans are ordered, non-overlapping, and cover
/// every non-whitespace byte of the input.
std::vector<SentenceSpan> segment_sentences(
    std::string_view text, SentenceSource source = SentenceSource::response());

/// True if `word` (lowercased, including its trailing period) is on the
/// built-in abbreviation list used by segment_sentences.
bool is_known_abbreviation(std::string_view word_with_period);

}  // namespace groundcheck
