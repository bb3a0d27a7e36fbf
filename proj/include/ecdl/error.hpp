#pragma once

#include <stdexcept>
#include <string>

namespace ecdl {

// Numeric values are mirrored by ecdl_status in ecdl.h.
enum class ErrorCode {
    invalid_argument = 1,
    dimension_mismatch = 2,
    io = 3,
    unsupported_format = 4,
    malformed_header = 5,
    unsupported_maxval = 6,
    truncated_data = 7,
    numeric = 8,
    degenerate = 9,
    coverage_gap = 10,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what)
{
    if (!condition) fail(code, what);
}

}  // namespace ecdl
