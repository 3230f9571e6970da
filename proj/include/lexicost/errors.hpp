#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lexicost {

enum class ParseErrorKind {
  syntax_error,
  arity_mismatch,
  no_positive_examples,
  unknown_bias_directive,
  invalid_value,
  undeclared_predicate,
  conflicting_examples,
  non_ground_fact,
};

inline std::string_view to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::syntax_error: return "SyntaxError";
    case ParseErrorKind::arity_mismatch: return "ArityMismatch";
    case ParseErrorKind::no_positive_examples: return "NoPositiveExamples";
    case ParseErrorKind::unknown_bias_directive: return "UnknownBiasDirective";
    case ParseErrorKind::invalid_value: return "InvalidValue";
    case ParseErrorKind::undeclared_predicate: return "UndeclaredPredicate";
    case ParseErrorKind::conflicting_examples: return "ConflictingExamples";
    case ParseErrorKind::non_ground_fact: return "NonGroundFact";
  }
  return "ParseError";
}

/// Raised by every text reader. Line and column are 1-based; 0 means the
/// error is not tied to one position (e.g. a missing positive example).
class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, std::string message, std::size_t line = 0,
             std::size_t column = 0)
      : std::runtime_error(format(kind, message, line, column)),
        kind_(kind),
        line_(line),
        column_(column) {}

  ParseErrorKind kind() const noexcept { return kind_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(ParseErrorKind kind, const std::string& message,
                            std::size_t line, std::size_t column) {
    std::string out(to_string(kind));
    if (line > 0) {
      out += " at " + std::to_string(line) + ":" + std::to_string(column);
    }
    out += ": " + message;
    return out;
  }

  ParseErrorKind kind_;
  std::size_t line_;
  std::size_t column_;
};

/// The evaluator derived more atoms than its configured cap allows.
class ResourceLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LengthMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class TooLarge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class StatsErrorKind {
  empty_confusion,
  empty_input,
  degenerate_input,
  too_few_pairs,
  incomplete_matrix,
};

class StatsError : public std::invalid_argument {
 public:
  StatsError(StatsErrorKind kind, const std::string& message)
      : std::invalid_argument(message), kind_(kind) {}
  StatsErrorKind kind() const noexcept { return kind_; }

 private:
  StatsErrorKind kind_;
};

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lexicost
