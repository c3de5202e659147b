#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace htc {

enum class ErrorCode {
  missing_column,
  unparseable_cell,
  empty_dataset,
  constraint_violation,
  constant_column,
  too_few_rows,
  zero_carbon,
  length_mismatch,
  degenerate_actual,
  degenerate_input,
  singular_input,
  empty_input,
  dimension_mismatch,
  too_many_features,
  empty_background,
  missing_model,
  missing_model_file,
  infeasible_bounds,
  invalid_argument,
  io,
};

std::string_view to_string(ErrorCode code);

// Errors caused by user-supplied input (files, flags, data) as opposed to
// internal failures. The CLI maps the former to exit code 1.
bool is_input_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

inline void require(bool condition, ErrorCode code, const char* what) {
  if (!condition) fail(code, what);
}

}  // namespace htc
