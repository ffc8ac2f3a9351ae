#pragma once

#include "slotflow/duration_model.hpp"
#include "slotflow/kiosk_queue.hpp"
#include "slotflow/mapek.hpp"
#include "slotflow/noshow_model.hpp"
#include "slotflow/time_grid.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace slotflow {

/// Ground-truth dwell for one slot class, discretized to whole slots.
struct DwellTruth {
    double mean_minutes = 120.0;
    double sd_minutes = 20.0;
    bool operator==(const DwellTruth&) const = default;
};

struct ScenarioConfig {
    std::string name = "default";
    SlotGrid grid;
    std::vector<SlotClass> classes;  // empty means default boundaries
    DayContext context;

    std::vector<double> arrivals_per_slot;  // persons per slot before demand_multiplier

    double group_fraction = 0.05;  // share of bookings made by groups
    int group_min = 6;
    int group_max = 15;
    double group_dwell_multiplier = 1.0;

    int d_max = 16;
    std::array<DwellTruth, kNumSlotClasses> dwell{};
    NoShowModel noshow_truth;

    double occupancy_cap = 1400.0;
    double entry_cap = 268.0;
    std::int64_t issuance_cap = 100000;
    KioskFleet fleet;

    bool overbooking = true;
    double safety_margin = 0.05;
    ReleasePolicy release = ReleasePolicy::all_at_open;
    int lead_window_slots = 12;

    int duration_window = 200;
    double duration_threshold = 0.2;
    int noshow_window = 500;
    double noshow_threshold = 0.2;
    double drift_z = 3.5;
    int min_row_samples = 30;

    // Ground-truth perturbation: stays of parties entering at or after
    // drift_start_slot are scaled by drift_multiplier. Negative start disables it.
    int drift_start_slot = -1;
    double drift_multiplier = 1.0;

    std::uint64_t seed = 1;

    /// Throws Error(invariant_violation) naming the offending field.
    void validate() const;

    SlotClassMap class_map() const;
    LoopConfig loop_config() const;
    /// Per-class pmfs of the ground-truth dwell distribution.
    std::array<std::vector<double>, kNumSlotClasses> dwell_pmfs() const;
    /// The duration matrix a fully informed planner would use.
    DurationMatrix truth_durations() const;
    /// The ground-truth no-show model with zeroed counts, for planning.
    NoShowModel truth_noshow() const;

    bool operator==(const ScenarioConfig&) const = default;
};

/// Two-peak arrival profile (late morning and mid afternoon) in persons per slot.
std::vector<double> two_peak_profile(const SlotGrid& grid, double peak_persons);

ScenarioConfig default_scenario();

ScenarioConfig scenario_from_json(const std::string& text);
std::string scenario_to_json(const ScenarioConfig& config);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// FNV-1a 64 of the canonical JSON form, as 16 hex digits.
std::string scenario_hash(const ScenarioConfig& config);

}  // namespace slotflow
