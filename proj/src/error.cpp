#include "deglab/error.hpp"

namespace deglab {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_dimension: return "invalid-dimension";
    case ErrorKind::decomposition_failure: return "decomposition-failure";
    case ErrorKind::singular_matrix: return "singular-matrix";
    case ErrorKind::shape: return "shape";
    case ErrorKind::format: return "format";
    case ErrorKind::corrupt_record: return "corrupt-record";
    case ErrorKind::unsupported_scheme: return "unsupported-scheme";
    case ErrorKind::numeric_overflow: return "numeric-overflow";
    case ErrorKind::size_guard: return "size-guard";
    case ErrorKind::degenerate_target: return "degenerate-target";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> index)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      kind_(kind),
      index_(index) {}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::decomposition_failure:
    case ErrorKind::singular_matrix:
    case ErrorKind::numeric_overflow:
    case ErrorKind::degenerate_target:
    case ErrorKind::divergence:
      return 3;
    case ErrorKind::format:
    case ErrorKind::corrupt_record:
    case ErrorKind::io:
      return 4;
    default:
      return 2;
  }
}

}  // namespace deglab
