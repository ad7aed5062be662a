#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ntklab {

enum class ErrorCode {
    NonFinite,
    NotPositiveDefinite,
    DomainError,
    DimensionMismatch,
    LengthMismatch,
    AtNode,
    DuplicatePoints,
    NotSorted,
    TooSmall,
    BracketFailure,
    OutOfRange,
    MissingRng,
    MissingSnapshot,
    DivergenceDetected,
    UnknownTruth,
    UnknownScenario,
    ConfigParse,
    IoError,
};

std::string_view to_string(ErrorCode code);

/// Numerical failures map to CLI exit code 3, configuration problems to 2.
bool is_numerical(ErrorCode code);
bool is_config(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ntklab
