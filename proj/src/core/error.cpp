#include "error.hpp"

namespace m2n2 {

const char* error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::DtypeMismatch: return "DtypeMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::WeightError: return "WeightError";
    case ErrorCode::DegenerateRow: return "DegenerateRow";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NotDoublyStochastic: return "NotDoublyStochastic";
    case ErrorCode::SeedOutOfRange: return "SeedOutOfRange";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::EmptyPromptSet: return "EmptyPromptSet";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::EmptyHistory: return "EmptyHistory";
    case ErrorCode::NoError: return "NoError";
    case ErrorCode::SpecInvalid: return "SpecInvalid";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace m2n2
