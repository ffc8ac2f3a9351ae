#include "slotflow/error.hpp"

namespace slotflow {

const char* to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::empty_input: return "empty input";
    case ErrorCode::unpartitioned_slot: return "unpartitioned slot";
    case ErrorCode::infeasible_commitments: return "infeasible commitments";
    case ErrorCode::instance_too_large: return "instance too large";
    case ErrorCode::shape_mismatch: return "shape mismatch";
    case ErrorCode::unsorted_input: return "unsorted input";
    case ErrorCode::out_of_order_event: return "out-of-order event";
    case ErrorCode::double_tick: return "double tick";
    case ErrorCode::parse_error: return "parse error";
    case ErrorCode::invariant_violation: return "invariant violation";
    case ErrorCode::io_error: return "i/o error";
    case ErrorCode::solver_failure: return "solver failure";
    }
    return "unknown error";
}

}  // namespace slotflow
