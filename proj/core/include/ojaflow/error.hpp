#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ojaflow {

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  not_symmetric,
  not_orthogonal,
  not_positive_definite,
  rank_deficient,
  singular,
  no_convergence,
  overflow,
  conditioning,
  ambiguous,
  degenerate,
  divergence,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library. `index()` carries the offending
// pivot / column / stage when one exists; `limit()` carries an advised bound
// (e.g. the largest admissible t) when one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<std::size_t> index = std::nullopt,
        std::optional<double> limit = std::nullopt)
      : std::runtime_error(what), code_(code), index_(index), limit_(limit) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }
  std::optional<double> limit() const noexcept { return limit_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> index_;
  std::optional<double> limit_;
};

}  // namespace ojaflow
