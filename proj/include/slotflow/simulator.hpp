#pragma once

#include "slotflow/events.hpp"
#include "slotflow/kiosk_queue.hpp"
#include "slotflow/mapek.hpp"
#include "slotflow/scenario.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace slotflow {

struct TickTrace {
    int boundary = 0;
    std::int64_t version = 0;
    DriftVerdict verdict = DriftVerdict::none;
    bool feasible = true;
    std::int64_t offered = 0;  // sum of snapshot availability
};

struct SimResult {
    int day = 0;
    std::uint64_t seed = 0;
    std::string date;
    ReleasePolicy release = ReleasePolicy::all_at_open;
    int lead_window_slots = 0;

    // Per slot, persons.
    std::vector<std::int64_t> availability;  // snapshot value when the slot opened
    std::vector<std::int64_t> sales;         // tickets issued for the slot
    std::vector<std::int64_t> entries;
    std::vector<std::int64_t> exits;
    std::vector<std::int64_t> occupancy;     // present at any time during the slot
    std::vector<std::int64_t> noshows;       // by visit slot
    std::vector<std::int64_t> kiosk_arrivals;  // bookings started per slot (parties)

    std::int64_t issued = 0;
    std::int64_t shows = 0;
    std::int64_t noshow_total = 0;
    std::int64_t rejected = 0;
    std::int64_t bookings = 0;  // parties served successfully

    std::vector<double> kiosk_waits;  // per party, seconds to service start
    WaitSummary waits;

    std::vector<Event> events;
    std::vector<TickTrace> ticks;
    std::vector<TicketRecord> tickets;
    std::vector<VisitRecord> visits;
    std::int64_t final_version = 0;
};

struct QoeSummary {
    bool empty = true;  // no bookings; the remaining fields are zero
    double mean_wait = 0.0;
    double max_wait = 0.0;
    double p95_wait = 0.0;
    double rejection_fraction = 0.0;
    double mean_gap_slots = 0.0;
    double noshow_rate = 0.0;
};

QoeSummary qoe_summary(const SimResult& result);

/// A fresh knowledge base seeded with the scenario's ground-truth models.
KnowledgeBase truthful_knowledge(const ScenarioConfig& config);

/// Simulates one operating day against `kb`, ticking it at every slot boundary.
SimResult run_day(const ScenarioConfig& config, KnowledgeBase& kb, int day_index = 0);
SimResult run_day(const ScenarioConfig& config);

struct DayOverride {
    std::optional<ReleasePolicy> release;
    std::optional<int> lead_window_slots;
    std::optional<double> demand_multiplier;
    std::optional<std::string> date;
};

/// Consecutive days sharing one knowledge base. overrides[i] (if present)
/// adjusts day i; day seeds derive from config.seed and the day index.
std::vector<SimResult> run_days(const ScenarioConfig& config, int num_days,
                                const std::vector<DayOverride>& overrides = {});
std::vector<SimResult> run_days(const ScenarioConfig& config, KnowledgeBase& kb, int num_days,
                                const std::vector<DayOverride>& overrides = {});

struct RecordCorpus {
    std::vector<VisitRecord> visits;
    std::vector<TicketRecord> tickets;
};

/// Draws n visits and n tickets straight from the ground truth, no control loop.
/// Entry slots are uniform over the grid. Ticket gaps pick a no-show bucket
/// uniformly, then a gap uniformly inside it (12 slots for the open last
/// bucket); the visit slot is uniform over the slots that leave room for it.
RecordCorpus generate_records(const ScenarioConfig& config, std::uint64_t seed, int n);

/// Checks the per-day accounting identities; returns an empty string when all hold.
std::string check_conservation(const SimResult& result);

}  // namespace slotflow
