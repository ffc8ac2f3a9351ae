#pragma once

#include <stdexcept>
#include <string>

namespace slotflow {

enum class ErrorCode {
    invalid_argument,
    empty_input,
    unpartitioned_slot,
    infeasible_commitments,
    instance_too_large,
    shape_mismatch,
    unsorted_input,
    out_of_order_event,
    double_tick,
    parse_error,
    invariant_violation,
    io_error,
    solver_failure,
};

const char* to_string(ErrorCode code) noexcept;

// Single exception type for the library; the code selects the CLI diagnostic.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace slotflow
