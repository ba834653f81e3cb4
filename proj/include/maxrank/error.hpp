#pragma once

#include <stdexcept>
#include <string>

namespace maxrank {

/// Failure categories shared by the C++ core and the C API status codes.
enum class ErrorCode {
    Config = 1,          // out-of-range configuration value
    Contract = 2,        // precondition of an operation violated
    Sampling = 3,        // non-finite value while sampling a field
    Degenerate = 4,      // singular linearization / vanishing pivot
    NonConvergence = 5,  // solver or continuation gave up
    Io = 6,
    Precondition = 7,    // identity check called on an incompatible sample
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline const char* to_string(ErrorCode c)
{
    switch (c) {
    case ErrorCode::Config: return "config";
    case ErrorCode::Contract: return "contract";
    case ErrorCode::Sampling: return "sampling";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::NonConvergence: return "non_convergence";
    case ErrorCode::Io: return "io";
    case ErrorCode::Precondition: return "precondition";
    }
    return "unknown";
}

[[noreturn]] inline void fail(ErrorCode code, const std::string& what)
{
    throw Error(code, what);
}

} // namespace maxrank
