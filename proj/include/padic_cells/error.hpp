#pragma once

#include <stdexcept>
#include <string>

namespace padic_cells {

enum class ErrorCode {
  invalid_argument,
  parse,
  arity,
  depth_too_small,
  zero_valuation,
  hensel_failed,
  precision_exhausted,
  infinite_measure,
  divergent,
  not_integrable,
  residues_not_fixed,
  unsupported_range,
  unbounded_domain,
  partition_failed,
  did_not_stabilize,
  internal,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::parse: return "parse error";
    case ErrorCode::arity: return "arity mismatch";
    case ErrorCode::depth_too_small: return "depth below Hensel bound";
    case ErrorCode::zero_valuation: return "valuation of zero in v-factor";
    case ErrorCode::hensel_failed: return "Hensel condition fails";
    case ErrorCode::precision_exhausted: return "precision exhausted";
    case ErrorCode::infinite_measure: return "infinite measure";
    case ErrorCode::divergent: return "divergent sum";
    case ErrorCode::not_integrable: return "not integrable";
    case ErrorCode::residues_not_fixed: return "residues not fixed";
    case ErrorCode::unsupported_range: return "unsupported range";
    case ErrorCode::unbounded_domain: return "unbounded domain";
    case ErrorCode::partition_failed: return "partition check failed";
    case ErrorCode::did_not_stabilize: return "did not stabilize";
    case ErrorCode::internal: return "internal error";
  }
  return "error";
}

/// Every failure raised by the library. The code drives CLI exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace padic_cells
