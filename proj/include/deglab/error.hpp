#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace deglab {

enum class ErrorKind {
  invalid_dimension,
  decomposition_failure,
  singular_matrix,
  shape,
  format,
  corrupt_record,
  unsupported_scheme,
  numeric_overflow,
  size_guard,
  degenerate_target,
  divergence,
  config,
  io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Single exception type for the library. The kind selects the CLI exit code;
/// `index()` carries the offending pivot, record or iteration when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> index = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorKind kind_;
  std::optional<std::size_t> index_;
};

/// 2 for configuration problems, 3 for numeric failures, 4 for I/O.
int exit_code(ErrorKind kind) noexcept;

}  // namespace deglab
