#include "plantclean/error.hpp"

namespace plantclean {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::parse: return "parse error";
        case ErrorCode::validation: return "validation error";
        case ErrorCode::domain: return "domain error";
        case ErrorCode::config: return "config error";
        case ErrorCode::empty_input: return "empty input";
        case ErrorCode::too_short: return "input too short";
        case ErrorCode::degenerate: return "degenerate input";
        case ErrorCode::numeric: return "numeric failure";
        case ErrorCode::pipeline_order: return "pipeline order error";
        case ErrorCode::io: return "i/o error";
    }
    return "error";
}

}  // namespace plantclean
