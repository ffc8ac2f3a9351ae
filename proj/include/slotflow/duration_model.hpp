#pragma once

#include "slotflow/time_grid.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace slotflow {

/// One completed visit. The party occupies slots entry_slot .. entry_slot + duration_slots - 1
/// and exits during the last of them. No identity is carried.
struct VisitRecord {
    int entry_slot = 0;
    int duration_slots = 1;
    int group_size = 1;

    bool operator==(const VisitRecord&) const = default;
};

/// Row s is the probability vector over visit durations d = 1..d_max (in slots)
/// for parties entering in slot s.
class DurationMatrix {
public:
    /// Rows must be nonnegative and sum to 1 within 1e-9; counts has one entry per row.
    DurationMatrix(std::vector<std::vector<double>> rows, std::vector<std::int64_t> counts);

    /// Every slot gets the pmf of its class; row sample counts are set to `nominal_count`.
    static DurationMatrix from_class_pmfs(const SlotClassMap& classes,
                                          const std::array<std::vector<double>, kNumSlotClasses>& pmfs,
                                          std::int64_t nominal_count = 1);

    int num_slots() const { return static_cast<int>(counts_.size()); }
    int d_max() const { return d_max_; }

    /// P[slot][d], d in 1..d_max.
    double prob(int slot, int d) const { return probs_[index(slot, d)]; }
    std::span<const double> row(int slot) const;
    std::int64_t samples(int slot) const { return counts_.at(slot); }

    /// Expected duration in slots for a party entering at `slot`.
    double row_mean(int slot) const;

    bool operator==(const DurationMatrix&) const = default;

private:
    std::size_t index(int slot, int d) const
    {
        return static_cast<std::size_t>(slot) * d_max_ + (d - 1);
    }

    int d_max_ = 1;
    std::vector<double> probs_;
    std::vector<std::int64_t> counts_;
};

/// Q[s][t]: probability that a party entering at s is still inside during t.
class SurvivalMatrix {
public:
    explicit SurvivalMatrix(const DurationMatrix& matrix);

    int num_slots() const { return num_slots_; }
    int d_max() const { return d_max_; }
    /// Number of slots over which an entry can still be inside: num_slots + d_max - 1.
    int horizon() const { return num_slots_ + d_max_ - 1; }

    double at(int entry_slot, int t) const
    {
        const int k = t - entry_slot;
        if (k < 0 || k >= d_max_)
            return 0.0;
        return tail_[static_cast<std::size_t>(entry_slot) * d_max_ + k];
    }

private:
    int num_slots_;
    int d_max_;
    std::vector<double> tail_;
};

inline SurvivalMatrix survival(const DurationMatrix& matrix) { return SurvivalMatrix(matrix); }

/// Per-slot empirical histograms. Rows with fewer than `min_row_samples` records
/// fall back to their class-pooled histogram, then to the global one.
/// Durations above d_max are clipped to d_max.
DurationMatrix fit_duration_matrix(std::span<const VisitRecord> records,
                                   const SlotGrid& grid,
                                   const SlotClassMap& classes,
                                   int d_max,
                                   int min_row_samples = 30);

/// occupancy[t] = sum_{s<=t} entries[s] * Q[s][t], for t in [0, horizon).
std::vector<double> predict_occupancy(std::span<const double> entries, const SurvivalMatrix& q);

/// exits[t] = sum_s entries[s] * P[s][t-s+1], for t in [0, horizon).
std::vector<double> predict_exits(std::span<const double> entries, const DurationMatrix& matrix);

/// Moves everything past the last operating slot into it (closing-time flush).
std::vector<double> fold_after_closing(std::span<const double> series, int num_slots);

/// Sample-weighted mean visit duration in minutes over the rows of `cls`.
/// Throws Error(empty_input) if the class has no slots or no samples.
double mean_duration(const DurationMatrix& matrix, const SlotClass& cls, const SlotGrid& grid);

/// Discretized normal over d = 1..d_max, weights exp(-(d-mu)^2 / 2 sigma^2).
std::vector<double> discretized_normal_pmf(double mean_slots, double sd_slots, int d_max);

}  // namespace slotflow
