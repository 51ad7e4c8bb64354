#ifndef DCVACONF_ERROR_HPP
#define DCVACONF_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace dcvaconf {

enum class ErrorCode {
    MalformedHeader,
    DimensionMismatch,
    UnsupportedFormat,
    IoFailure,
    RejectedValue,
    ShapeMismatch,
    DimsMismatch,
    EmptyTapSet,
    InfeasibleFraction,
    InvalidArgument,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::RejectedValue: return "RejectedValue";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::DimsMismatch: return "DimsMismatch";
        case ErrorCode::EmptyTapSet: return "EmptyTapSet";
        case ErrorCode::InfeasibleFraction: return "InfeasibleFraction";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

/// Every failure raised by the library. `code()` identifies the contract
/// that was violated; `what()` carries a human-readable diagnostic.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace dcvaconf

#endif
