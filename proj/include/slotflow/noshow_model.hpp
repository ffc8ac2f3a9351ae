#pragma once

#include "slotflow/time_grid.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace slotflow {

struct TicketRecord {
    int booking_slot = 0;
    int visit_slot = 0;
    int group_size = 1;
    bool showed = true;

    int gap() const { return visit_slot - booking_slot; }
    bool operator==(const TicketRecord&) const = default;
};

/// Piecewise-constant no-show rate over booking-to-visit gap buckets.
/// Bucket i covers gaps [edges[i], edges[i+1]); the last bucket is open-ended.
/// edges[0] is always 0.
struct NoShowModel {
    std::vector<int> bucket_edges{0, 5, 13, 25};
    std::vector<double> rates{0.0, 0.0, 0.0, 0.0};
    std::vector<std::int64_t> counts{0, 0, 0, 0};
    /// Additive offset per slot class, applied before clamping.
    std::array<double, kNumSlotClasses> class_offsets{};

    /// Throws Error(invariant_violation) on malformed edges or rates.
    void validate() const;
    int bucket_of(int gap) const;

    bool operator==(const NoShowModel&) const = default;
};

inline const std::vector<int>& default_bucket_edges()
{
    static const std::vector<int> edges{0, 5, 13, 25};
    return edges;
}

/// Per-bucket empirical no-show ratio (one observation per booking; a group is
/// all-or-nothing). Empty buckets inherit the global rate.
NoShowModel fit_noshow(std::span<const TicketRecord> tickets, std::span<const int> bucket_edges);

/// Bucket rate plus the visit slot's class offset, clamped to [0, 1].
/// `classes` may be null, in which case offsets are ignored.
double predict_noshow(const NoShowModel& model, int gap, int visit_slot, const SlotClassMap* classes = nullptr);

/// Per-person no-show fraction: each ticket weighs group_size persons.
double daily_noshow_rate(std::span<const TicketRecord> tickets);

/// floor(target / min(1, show_rate + safety_margin)).
std::int64_t overbooking_limit(double target_attendance, double show_rate_estimate, double safety_margin);

}  // namespace slotflow
