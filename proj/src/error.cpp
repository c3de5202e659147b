#include "htc/error.hpp"

namespace htc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::missing_column: return "MissingColumn";
    case ErrorCode::unparseable_cell: return "UnparseableCell";
    case ErrorCode::empty_dataset: return "EmptyDataset";
    case ErrorCode::constraint_violation: return "ConstraintViolation";
    case ErrorCode::constant_column: return "ConstantColumn";
    case ErrorCode::too_few_rows: return "TooFewRows";
    case ErrorCode::zero_carbon: return "ZeroCarbon";
    case ErrorCode::length_mismatch: return "LengthMismatch";
    case ErrorCode::degenerate_actual: return "DegenerateActual";
    case ErrorCode::degenerate_input: return "DegenerateInput";
    case ErrorCode::singular_input: return "SingularInput";
    case ErrorCode::empty_input: return "EmptyInput";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::too_many_features: return "TooManyFeatures";
    case ErrorCode::empty_background: return "EmptyBackground";
    case ErrorCode::missing_model: return "MissingModel";
    case ErrorCode::missing_model_file: return "MissingModelFile";
    case ErrorCode::infeasible_bounds: return "InfeasibleBounds";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::io: return "IoError";
  }
  return "Unknown";
}

bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::missing_column:
    case ErrorCode::unparseable_cell:
    case ErrorCode::empty_dataset:
    case ErrorCode::constraint_violation:
    case ErrorCode::constant_column:
    case ErrorCode::too_few_rows:
    case ErrorCode::missing_model_file:
    case ErrorCode::invalid_argument:
    case ErrorCode::io:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace htc
