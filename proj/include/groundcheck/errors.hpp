#pragma once

#include <stdexcept>
#include <string>

namespace groundcheck {

/// Base class for all groundcheck errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define GROUNDCHECK_DEFINE_ERROR(NAME)                   \
  class NAME : public Error {                            \
   public:                                               \
    explicit NAME(const std::string& what) : Error(what) {} \
  }

/// An example field is structurally invalid (empty document, missing context...).
GROUNDCHECK_DEFINE_ERROR(InvalidExample);
/// A config value is outside its allowed range.
GROUNDCHECK_DEFINE_ERROR(InvalidConfig);
/// Context, question, or response produced zero tokens.
GROUNDCHECK_DEFINE_ERROR(EmptyAfterTokenization);
/// Question + response (+ reserved specials) do not fit the sequence budget.
GROUNDCHECK_DEFINE_ERROR(QuestionResponseTooLong);
/// An annotation references a context sentence that does not exist.
GROUNDCHECK_DEFINE_ERROR(DanglingReference);
/// A record is missing annotations required by the operation.
GROUNDCHECK_DEFINE_ERROR(MissingAnnotations);
/// A scorer returned a row of the wrong length or out-of-range values.
GROUNDCHECK_DEFINE_ERROR(ShapeMismatch);
/// A scorer threw while scoring; message carries the window index.
GROUNDCHECK_DEFINE_ERROR(ScorerFailure);
/// Aggregation over a matrix with no rows.
GROUNDCHECK_DEFINE_ERROR(EmptyMatrix);
/// A metric needs both classes but the input has only one.
GROUNDCHECK_DEFINE_ERROR(DegenerateLabels);
/// The annotator client failed after exhausting its retries.
GROUNDCHECK_DEFINE_ERROR(AnnotatorFailure);
/// A file or payload could not be parsed.
GROUNDCHECK_DEFINE_ERROR(ParseError);
/// A request exceeds the configured token cap.
GROUNDCHECK_DEFINE_ERROR(RequestTooLarge);

#undef GROUNDCHECK_DEFINE_ERROR

}  // namespace groundcheck
