#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flim {

/// Base of every error raised by the library. `kind()` is the stable,
/// machine-readable name used in CLI/HTTP error payloads.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define FLIM_DEFINE_ERROR(Name)                                     \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  }

FLIM_DEFINE_ERROR(IoError);
FLIM_DEFINE_ERROR(FormatError);
FLIM_DEFINE_ERROR(LayoutError);
FLIM_DEFINE_ERROR(DuplicateIdError);
FLIM_DEFINE_ERROR(EmptyStrokeError);
FLIM_DEFINE_ERROR(BadPatchSizeError);
FLIM_DEFINE_ERROR(TooFewPatchesError);
FLIM_DEFINE_ERROR(BadKError);
FLIM_DEFINE_ERROR(DimMismatchError);
FLIM_DEFINE_ERROR(BadWindowError);
FLIM_DEFINE_ERROR(EmptyInputError);
FLIM_DEFINE_ERROR(InsufficientMarkersError);
FLIM_DEFINE_ERROR(SingleClassError);
FLIM_DEFINE_ERROR(DivergenceError);
FLIM_DEFINE_ERROR(LengthMismatchError);
FLIM_DEFINE_ERROR(BadPerplexityError);
FLIM_DEFINE_ERROR(TooFewPointsError);
FLIM_DEFINE_ERROR(ValidationError);
FLIM_DEFINE_ERROR(ConfigError);

#undef FLIM_DEFINE_ERROR

/// Malformed text input. Carries the 1-based line and column of the fault.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column = 0)
      : Error("ParseError", format(message, line, column)), detail_(message), line_(line), column_(column) {}

  /// The message without the position prefix.
  const std::string& detail() const noexcept { return detail_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& message, std::size_t line, std::size_t column) {
    std::string out = "line " + std::to_string(line);
    if (column > 0) out += ", column " + std::to_string(column);
    return out + ": " + message;
  }

  std::string detail_;
  std::size_t line_;
  std::size_t column_;
};

}  // namespace flim
