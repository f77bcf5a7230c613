#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ldlab {

enum class ErrorCode {
    EmptySet,
    DimensionMismatch,
    InvalidKernel,
    MassMismatch,
    BoxTooSmall,
    NotStarShaped,
    NotDisjoint,
    EmptyPiece,
    DegenerateDeficit,
    PreconditionFailed,
    InvalidArgument,
    Format,
    Config,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidKernel: return "InvalidKernel";
    case ErrorCode::MassMismatch: return "MassMismatch";
    case ErrorCode::BoxTooSmall: return "BoxTooSmall";
    case ErrorCode::NotStarShaped: return "NotStarShaped";
    case ErrorCode::NotDisjoint: return "NotDisjoint";
    case ErrorCode::EmptyPiece: return "EmptyPiece";
    case ErrorCode::DegenerateDeficit: return "DegenerateDeficit";
    case ErrorCode::PreconditionFailed: return "PreconditionFailed";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Format: return "Format";
    case ErrorCode::Config: return "Config";
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

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) throw Error(code, what);
}

} // namespace ldlab
