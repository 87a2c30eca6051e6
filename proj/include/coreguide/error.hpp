#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace coreguide {

enum class Errc {
  MalformedHeader,
  LiteralOutOfRange,
  MissingTerminator,
  EmptyClause,
  ClauseCountMismatch,
  VarOutOfRange,
  BoundsExceeded,
  InstanceSat,
  EdgelessGraph,
  OddNodeCount,
  DimensionMismatch,
  LengthMismatch,
  NumericalOverflow,
  BadMagic,
  VersionMismatch,
  TruncatedTensor,
  ShapeMismatch,
  NotUnsat,
  BudgetExhausted,
  GenerationFailed,
  InvalidArgument,
  EmptyDataset,
  Io,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

/// DIMACS parse failure; line() is 1-based.
class ParseError : public Error {
public:
  ParseError(Errc code, std::size_t line, const std::string& message)
      : Error(code, "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

} // namespace coreguide
