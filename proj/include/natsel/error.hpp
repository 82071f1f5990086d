#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace natsel {

enum class ErrorCode {
    NotInterior,
    NotNormalized,
    DimensionTooSmall,
    DimensionMismatch,
    LengthMismatch,
    NotTangent,
    NonPositiveTau,
    NonPositiveFactor,
    EvaluationFailure,
    Overflow,
    NotDiagonal,
    NotDefinite,
    StepTooLarge,
    NotSimplexPreserving,
    PositivityLoss,
    StepSizeInvalid,
    EmptyTrajectory,
    RadiusTooLarge,
    KindMismatch,
    NotSymmetric,
    ConfigParseError,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; the code identifies the failure.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace natsel
