#ifndef GTRWS_ERROR_HPP
#define GTRWS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace gtrws {

enum class ErrorCode {
  InvalidNode,
  EmptyScope,
  DuplicateNodeInScope,
  DuplicateFactor,
  NonFiniteCost,
  TableShapeMismatch,
  InvalidLabeling,
  NotNested,
  InvalidMessageEdge,
  MissingSeparatorFactor,
  FactorNotInTree,
  InvalidEdge,
  NotASeparator,
  StateNotInitialized,
  StaleMessage,
  ReuseOrderViolation,
  InvalidStepSize,
  TooLarge,
  NotAtFixpoint,
  ParseError,
  InvalidDecomposition,
  InvalidArgument,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidNode: return "InvalidNode";
    case ErrorCode::EmptyScope: return "EmptyScope";
    case ErrorCode::DuplicateNodeInScope: return "DuplicateNodeInScope";
    case ErrorCode::DuplicateFactor: return "DuplicateFactor";
    case ErrorCode::NonFiniteCost: return "NonFiniteCost";
    case ErrorCode::TableShapeMismatch: return "TableShapeMismatch";
    case ErrorCode::InvalidLabeling: return "InvalidLabeling";
    case ErrorCode::NotNested: return "NotNested";
    case ErrorCode::InvalidMessageEdge: return "InvalidMessageEdge";
    case ErrorCode::MissingSeparatorFactor: return "MissingSeparatorFactor";
    case ErrorCode::FactorNotInTree: return "FactorNotInTree";
    case ErrorCode::InvalidEdge: return "InvalidEdge";
    case ErrorCode::NotASeparator: return "NotASeparator";
    case ErrorCode::StateNotInitialized: return "StateNotInitialized";
    case ErrorCode::StaleMessage: return "StaleMessage";
    case ErrorCode::ReuseOrderViolation: return "ReuseOrderViolation";
    case ErrorCode::InvalidStepSize: return "InvalidStepSize";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::NotAtFixpoint: return "NotAtFixpoint";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidDecomposition: return "InvalidDecomposition";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gtrws

#endif  // GTRWS_ERROR_HPP
