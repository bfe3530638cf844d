#include "ecmkit/error.hpp"

namespace ecmkit {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::UnknownToken: return "UnknownToken";
        case ErrorCode::EmptyLabel: return "EmptyLabel";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::NonPositiveBound: return "NonPositiveBound";
        case ErrorCode::InvalidRange: return "InvalidRange";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::TooFewPoints: return "TooFewPoints";
        case ErrorCode::NonPositiveMaxReal: return "NonPositiveMaxReal";
        case ErrorCode::TooShort: return "TooShort";
        case ErrorCode::Empty: return "Empty";
        case ErrorCode::DegenerateLabels: return "DegenerateLabels";
        case ErrorCode::EmptyMatrix: return "EmptyMatrix";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::UnknownLabel: return "UnknownLabel";
        case ErrorCode::NonFiniteResidual: return "NonFiniteResidual";
        case ErrorCode::InitOutOfBounds: return "InitOutOfBounds";
        case ErrorCode::EmptySpectrum: return "EmptySpectrum";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace ecmkit
