#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace exo {

enum class ErrorKind {
    InvalidParameter,
    InsufficientData,
    Range,
    Schema,
    Validation,
    Conditioning,
    Convergence,
    Shape,
    InvalidCrop,
    Sequencing,
    Backend,
    Io,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::Range: return "range";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Conditioning: return "conditioning";
    case ErrorKind::Convergence: return "convergence";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::InvalidCrop: return "invalid-crop";
    case ErrorKind::Sequencing: return "sequencing";
    case ErrorKind::Backend: return "backend";
    case ErrorKind::Io: return "io";
    }
    return "unknown";
}

/// Base of every error raised by the library. The kind is stable and
/// machine-readable; the message is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what)
{
    throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what)
{
    if (!cond) fail(kind, what);
}

} // namespace exo
