#pragma once

#include "slotflow/allocator.hpp"
#include "slotflow/duration_model.hpp"
#include "slotflow/noshow_model.hpp"
#include "slotflow/scenario.hpp"
#include "slotflow/simulator.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace slotflow {

// Plain-text formats. Each starts with a "slotflow-<kind> <version>" line,
// then one "key values..." line per field. Blank lines and lines starting
// with '#' are ignored. Parse failures carry the 1-based line number.

std::string format_duration_matrix(const DurationMatrix& matrix);
DurationMatrix parse_duration_matrix(const std::string& text);

std::string format_noshow_model(const NoShowModel& model);
NoShowModel parse_noshow_model(const std::string& text);

std::string format_problem(const AllocationProblem& problem);
AllocationProblem parse_problem(const std::string& text);

/// Occupancy is written with 3 decimals.
std::string format_plan(const AllocationPlan& plan);
AllocationPlan parse_plan(const std::string& text);

/// Kiosk-facing table: "slot,time,availability" with one row per slot.
std::string format_availability(const SlotGrid& grid, const AvailabilitySnapshot& snapshot);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// One day of the published no-show table.
struct DailyNoShow {
    std::string date;
    std::int64_t issued = 0;
    std::int64_t noshow = 0;
    double percent = 0.0;  // as printed
};

/// The five free days of March 2019 as a built-in fixture.
const std::vector<DailyNoShow>& builtin_noshow_table();
/// CSV with header "date,issued,noshow,percent".
std::vector<DailyNoShow> parse_noshow_table(const std::string& csv);
/// One single-person ticket per issued ticket, `noshow` of them unused.
std::vector<TicketRecord> tickets_from_daily(const DailyNoShow& day);

/// Completed visits paired by anon tag; unmatched entries and exits are skipped.
/// A visit exiting in the final slot is marked censored.
std::vector<CompletedVisit> visits_from_events(const std::vector<Event>& events, int num_slots);
/// One record per show or noshow event.
std::vector<TicketRecord> tickets_from_events(const std::vector<Event>& events);

/// "HH:MM" wall time of a slot's start.
std::string wall_time(const SlotGrid& grid, int slot);

std::string format_slots_csv(const ScenarioConfig& config, const SimResult& day);
std::string format_daily_summary_csv(const std::vector<SimResult>& days);
std::string format_ticks_csv(const SimResult& day);

/// Writes the full bundle for a multi-day run: scenario echo, per-day slot
/// series, tick traces and event logs, the daily summary, final model dumps,
/// and a manifest written last. On failure a FAILED marker is left behind.
void write_report_bundle(const std::filesystem::path& dir, const ScenarioConfig& config,
                         const std::vector<SimResult>& days, const KnowledgeBase& kb);

}  // namespace slotflow
