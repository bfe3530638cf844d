#pragma once

#include <stdexcept>
#include <string>

namespace ecmkit {

enum class ErrorCode {
    UnknownToken,
    EmptyLabel,
    DomainError,
    LengthMismatch,
    NonPositiveBound,
    InvalidRange,
    InvalidConfig,
    TooFewPoints,
    NonPositiveMaxReal,
    TooShort,
    Empty,
    DegenerateLabels,
    EmptyMatrix,
    ShapeMismatch,
    UnknownLabel,
    NonFiniteResidual,
    InitOutOfBounds,
    EmptySpectrum,
    ParseError,
    IoError,
};

const char* to_string(ErrorCode code) noexcept;

/// Every recoverable failure in the library is reported through this type.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ecmkit
