#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lplr {

enum class Errc {
    InvalidArgument,
    InvalidP,
    ShapeMismatch,
    SvdFailure,
    NotPositiveDefinite,
    SingularMatrix,
    RankDeficient,
    ZeroGradient,
    DimensionTooSmall,
    NoConvergence,
    InvalidRank,
    NotCompressing,
    ParseError,
    HeaderMismatch,
    IoError,
};

constexpr std::string_view to_string(Errc code) noexcept
{
    switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidP: return "InvalidP";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::SvdFailure: return "SvdFailure";
    case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
    case Errc::SingularMatrix: return "SingularMatrix";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::ZeroGradient: return "ZeroGradient";
    case Errc::DimensionTooSmall: return "DimensionTooSmall";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::InvalidRank: return "InvalidRank";
    case Errc::NotCompressing: return "NotCompressing";
    case Errc::ParseError: return "ParseError";
    case Errc::HeaderMismatch: return "HeaderMismatch";
    case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

/// Exception type thrown by every lplr routine. The code is the stable
/// part; the message is for humans.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace lplr
