#pragma once

#include <stdexcept>
#include <string>

namespace plantclean {

enum class ErrorCode {
    parse,           // malformed input text
    validation,      // structurally inconsistent input
    domain,          // argument outside the operation's domain
    config,          // invalid parameter combination
    empty_input,     // no usable (non-missing) values
    too_short,       // not enough samples for the operation
    degenerate,      // input has no usable variation
    numeric,         // numerical method failed
    pipeline_order,  // stage called before its prerequisites ran
    io,              // filesystem failure
};

const char* to_string(ErrorCode code) noexcept;

/// Single exception type for the library; `code()` drives CLI exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace plantclean
