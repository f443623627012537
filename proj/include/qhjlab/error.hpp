#pragma once

#include <stdexcept>
#include <string>

namespace qhjlab {

/// Failure categories raised by the numerical modules.
enum class ErrorKind {
  sizing,       // grid too small for a stencil
  singular,     // vanishing denominator / derivative node
  range,        // coordinate outside the grid
  capability,   // unsupported potential/energy combination
  degeneracy,   // zero Wronskian
  accuracy,     // residual above tolerance
  parameter,    // invalid microstate constants
  contract,     // inconsistent inputs between modules
  domain,       // turning point, nonpositive input
  truncation,   // hierarchy order too large
  statistics,   // too few points for a fit
  unwrap,       // phase branch mismatch
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::sizing: return "sizing";
    case ErrorKind::singular: return "singular";
    case ErrorKind::range: return "range";
    case ErrorKind::capability: return "capability";
    case ErrorKind::degeneracy: return "degeneracy";
    case ErrorKind::accuracy: return "accuracy";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::contract: return "contract";
    case ErrorKind::domain: return "domain";
    case ErrorKind::truncation: return "truncation";
    case ErrorKind::statistics: return "statistics";
    case ErrorKind::unwrap: return "unwrap";
  }
  return "unknown";
}

}  // namespace qhjlab
