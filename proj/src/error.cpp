#include "ntklab/error.hpp"

namespace ntklab {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::AtNode: return "AtNode";
        case ErrorCode::DuplicatePoints: return "DuplicatePoints";
        case ErrorCode::NotSorted: return "NotSorted";
        case ErrorCode::TooSmall: return "TooSmall";
        case ErrorCode::BracketFailure: return "BracketFailure";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::MissingRng: return "MissingRng";
        case ErrorCode::MissingSnapshot: return "MissingSnapshot";
        case ErrorCode::DivergenceDetected: return "DivergenceDetected";
        case ErrorCode::UnknownTruth: return "UnknownTruth";
        case ErrorCode::UnknownScenario: return "UnknownScenario";
        case ErrorCode::ConfigParse: return "ConfigParse";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

bool is_numerical(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonFinite:
        case ErrorCode::NotPositiveDefinite:
        case ErrorCode::DomainError:
        case ErrorCode::AtNode:
        case ErrorCode::DuplicatePoints:
        case ErrorCode::BracketFailure:
        case ErrorCode::DivergenceDetected:
            return true;
        default:
            return false;
    }
}

bool is_config(ErrorCode code) {
    return code == ErrorCode::ConfigParse || code == ErrorCode::UnknownScenario ||
           code == ErrorCode::UnknownTruth;
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace ntklab
