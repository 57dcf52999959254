#pragma once

#include <stdexcept>
#include <string>

namespace qtop {

// Machine-readable failure categories. The CLI maps these to error codes in
// its JSON output; library callers dispatch on them to drive retries
// (jitter, mesh refinement, perturbation re-draws).
enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  parse_error,
  io_error,
  asymmetric_input,
  unsupported_k,
  eigen_failure,
  vertex_on_curve,
  ambiguous_triangle,
  label_conflict,
  region_topology,
  no_stabilization,
  nesting_violation,
  oracle_budget,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::asymmetric_input: return "asymmetric_input";
    case ErrorCode::unsupported_k: return "unsupported_k";
    case ErrorCode::eigen_failure: return "eigen_failure";
    case ErrorCode::vertex_on_curve: return "vertex_on_curve";
    case ErrorCode::ambiguous_triangle: return "ambiguous_triangle";
    case ErrorCode::label_conflict: return "label_conflict";
    case ErrorCode::region_topology: return "region_topology";
    case ErrorCode::no_stabilization: return "no_stabilization";
    case ErrorCode::nesting_violation: return "nesting_violation";
    case ErrorCode::oracle_budget: return "oracle_budget";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qtop
