#pragma once

#include "slotflow/allocator.hpp"
#include "slotflow/duration_model.hpp"
#include "slotflow/events.hpp"
#include "slotflow/noshow_model.hpp"
#include "slotflow/time_grid.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

namespace slotflow {

enum class ReleasePolicy { all_at_open, spread_over_day };

std::string_view to_string(ReleasePolicy policy);
std::optional<ReleasePolicy> parse_release_policy(std::string_view text);

/// Static inputs of the control loop.
struct LoopConfig {
    SlotGrid grid;
    std::vector<SlotClass> classes;  // empty means SlotClassMap::defaults(grid)
    double occupancy_cap = 1400.0;
    double entry_cap = 268.0;
    std::int64_t issuance_cap = 100000;  // per-slot upper bound U

    bool overbooking = true;
    double safety_margin = 0.05;
    ReleasePolicy release = ReleasePolicy::all_at_open;
    int lead_window_slots = 12;

    int d_max = 16;
    int min_row_samples = 30;
    std::vector<int> bucket_edges{0, 5, 13, 25};

    // Drift detector: relative deviation above the threshold and beyond
    // drift_z standard errors of the window mean.
    int duration_window = 200;
    double duration_threshold = 0.2;
    int noshow_window = 500;
    double noshow_threshold = 0.2;
    double drift_z = 3.5;

    SlotClassMap class_map() const;
    void validate() const;
};

enum class DriftVerdict { none, duration_drift, noshow_drift };
std::string_view to_string(DriftVerdict verdict);

struct CompletedVisit {
    VisitRecord record;
    bool censored = false;  // exited in the final slot; possibly cut by closing
    int day = 0;
    bool operator==(const CompletedVisit&) const = default;
};

struct AvailabilitySnapshot {
    int boundary = -1;
    std::int64_t version = 0;
    std::vector<std::int64_t> availability;  // per slot of the day
    bool feasible = true;

    bool operator==(const AvailabilitySnapshot&) const = default;
};

/// Shared state of Monitor/Analyze/Plan/Execute. Exactly one writer.
struct KnowledgeBase {
    KnowledgeBase(LoopConfig config, DurationMatrix durations, NoShowModel noshow);

    LoopConfig config;
    SlotClassMap classes;

    DurationMatrix durations;
    NoShowModel noshow;
    AllocationPlan plan;
    std::int64_t version = 0;

    std::vector<Event> history;
    double last_ts = 0.0;
    int last_tick = -1;
    int day = -1;  // begin_day() count minus one

    // Per-slot tallies in persons.
    std::vector<std::int64_t> sold, entered, exited, shows, noshows;
    // Parties per entry slot, today and on the previous day; the duration
    // check weighs exits by them.
    std::vector<std::int64_t> entry_parties, prev_entry_parties;
    std::int64_t orphan_exits = 0;
    std::int64_t last_count = 0;

    // Full-day view of the current plan and the sales at solve time.
    std::vector<std::int64_t> planned;
    std::vector<std::int64_t> sold_at_solve;
    bool plan_feasible = true;

    // Rolling windows; they persist across days, tallies do not. Records
    // enter a window one slot at a time once the slot has closed (tickets by
    // visit slot, completed visits by exit slot) and leave it in the same
    // blocks, so a window never holds part of a slot.
    std::deque<CompletedVisit> visit_window;
    std::deque<std::size_t> visit_blocks;
    std::vector<std::vector<CompletedVisit>> pending_visits;  // per exit slot, not yet closed
    std::deque<TicketRecord> ticket_window;
    std::deque<std::size_t> ticket_blocks;
    std::vector<std::vector<TicketRecord>> pending_tickets;  // per visit slot, not yet closed

    /// Clears the per-day state; models, version and windows carry over.
    /// Records still pending from the previous day are moved into the windows.
    void begin_day();

    /// Availability a kiosk would show now for `slot`.
    std::int64_t availability(int slot) const;
    /// Whether the release policy exposes `slot` during the current slot.
    bool released(int slot) const;

    std::int64_t open_visits() const { return static_cast<std::int64_t>(open_.size()); }

private:
    friend void monitor(KnowledgeBase& kb, const Event& ev);
    friend AllocationProblem build_replan_problem(int current_slot, const KnowledgeBase& kb);
    std::map<std::string, VisitRecord> open_;  // anon_tag -> entry, dropped on exit
};

/// Appends the event and updates tallies. Models are untouched.
/// Throws Error(out_of_order_event) if ev.ts precedes the last ingested event.
void monitor(KnowledgeBase& kb, const Event& ev);

/// Pure drift check over the rolling windows. Each completed visit is compared
/// with the stay the model expects for a party exiting in the same slot, given
/// that day's realized entries.
DriftVerdict analyze(const KnowledgeBase& kb);

/// Planning show rate for `slot` when booking during `current_slot`.
double planning_show_rate(const KnowledgeBase& kb, int slot, int current_slot);

/// Allocation problem for the slots after `current_slot`, with sold tickets as
/// commitments and the parties still inside as background occupancy.
AllocationProblem build_replan_problem(int current_slot, const KnowledgeBase& kb);

/// Solves the problem above and lifts it back to full-day indexing.
AllocationPlan replan(int current_slot, const KnowledgeBase& kb);

/// Refits the flagged model from its window (bumping the version) and replans
/// for the slots after the last tick's boundary.
void plan(KnowledgeBase& kb, DriftVerdict verdict);

/// Availability per slot: planned minus sold since the solve, floored at 0,
/// masked by the release policy.
AvailabilitySnapshot execute(const KnowledgeBase& kb);

struct TickResult {
    DriftVerdict verdict = DriftVerdict::none;
    AvailabilitySnapshot snapshot;
};

/// Analyze, plan and execute at slot boundary `boundary` (the start of that
/// slot). Throws Error(double_tick) if the boundary was already ticked.
TickResult tick(KnowledgeBase& kb, int boundary);

/// Replays one day's log into `kb` after begin_day(). Ticks fire before the
/// first event, after each count_update for slot j (boundary j + 1), and
/// before any event stamped past a boundary not yet ticked.
std::vector<TickResult> replay_day(KnowledgeBase& kb, const std::vector<Event>& events);

/// Canonical text form used for replay comparisons. Contains no anon tags.
std::string serialize(const KnowledgeBase& kb);

}  // namespace slotflow
