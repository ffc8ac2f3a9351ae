#pragma once

#include "slotflow/duration_model.hpp"
#include "slotflow/time_grid.hpp"

#include <cstdint>
#include <vector>

namespace slotflow {

/// Admission program over the slots of `grid`:
///
///   maximize   sum_s x[s]
///   subject to background[t] + sum_{s<=t} p[s] (x[s] + committed[s]) Q[s][t] <= occupancy_cap
///              p[s] (x[s] + committed[s]) <= entry_cap
///              0 <= x[s] <= upper_bound[s], integer
///
/// for every operating slot t. Occupancy after closing is implied by the last
/// operating slot and is not constrained separately.
struct AllocationProblem {
    SlotGrid grid;
    double occupancy_cap = 0.0;
    double entry_cap = 0.0;
    DurationMatrix durations;
    std::vector<double> show_rate;
    std::vector<std::int64_t> committed;
    std::vector<std::int64_t> upper_bound;
    /// Expected occupancy from parties already inside; empty means zero.
    std::vector<double> background;

    /// Throws Error(shape_mismatch / invariant_violation) on malformed input.
    void validate() const;
};

struct AllocationPlan {
    std::vector<std::int64_t> issuable;
    double objective = 0.0;
    /// Expected occupancy per slot over the survival horizon.
    std::vector<double> predicted_occupancy;
    bool feasible = false;
    /// Proven upper bound on the objective; equals it when optimality was proven.
    double bound = 0.0;

    bool proven_optimal() const { return bound <= objective; }

    bool operator==(const AllocationPlan&) const = default;
};

/// Relative slack allowed when comparing fractional loads against caps.
double cap_tolerance(double cap);

/// Lexicographically greatest plan (slot 0 first) among those reaching the
/// returned objective. Each candidate objective gets a bounded search; when
/// every higher one is refuted the plan is a proven optimum, otherwise `bound`
/// reports how far off it may be. When the commitments alone break a cap the
/// plan has x = 0 and feasible = false.
AllocationPlan solve_allocation(const AllocationProblem& problem);

/// Exhaustive enumeration with the same objective and tie-break.
/// Throws Error(instance_too_large) beyond 6 slots or an upper bound above 8.
AllocationPlan brute_force_allocation(const AllocationProblem& problem);

struct PlanVerdict {
    std::vector<double> occupancy;
    bool feasible = false;
};

/// Recomputes expected occupancy through predict_occupancy and checks every cap.
PlanVerdict verify_plan(const AllocationProblem& problem, const AllocationPlan& plan);

}  // namespace slotflow
