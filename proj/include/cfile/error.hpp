#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cfile {

enum class ErrorCode {
  IdenticalLines,
  CoincidentPoints,
  InvalidTopology,
  NoSegments,
  DegenerateConfiguration,
  InsufficientSupport,
  NoValidHypothesis,
  ZeroContour,
  DimensionMismatch,
  EmptyDataset,
  InvalidArgument,
  InputNotFound,
  Unpaired,
  OutputFailed,
  ParseError,
};

// Stable kebab-case identifier, used in the CLI's machine-readable errors.
inline std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::IdenticalLines: return "identical-lines";
    case ErrorCode::CoincidentPoints: return "coincident-points";
    case ErrorCode::InvalidTopology: return "invalid-topology";
    case ErrorCode::NoSegments: return "no-segments";
    case ErrorCode::DegenerateConfiguration: return "degenerate-configuration";
    case ErrorCode::InsufficientSupport: return "insufficient-support";
    case ErrorCode::NoValidHypothesis: return "no-valid-hypothesis";
    case ErrorCode::ZeroContour: return "zero-contour";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::EmptyDataset: return "empty-dataset";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::InputNotFound: return "input-not-found";
    case ErrorCode::Unpaired: return "unpaired-files";
    case ErrorCode::OutputFailed: return "output-failed";
    case ErrorCode::ParseError: return "parse-error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(error_name(code)) + ": " + what);
}

}  // namespace cfile
