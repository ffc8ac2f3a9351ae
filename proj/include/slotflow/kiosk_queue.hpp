#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace slotflow {

struct KioskFleet {
    int num_kiosks = 7;
    double service_seconds = 15.0;

    void validate() const;
    bool operator==(const KioskFleet&) const = default;
};

/// Wait until the last of `arrivals` simultaneous bookers starts service:
/// floor((A - 1) / k) * tau.
double worst_case_wait(std::int64_t arrivals, const KioskFleet& fleet);

/// Smallest k >= 1 whose worst-case wait is within max_wait_seconds.
int min_kiosks(std::int64_t peak_arrivals, double service_seconds, double max_wait_seconds);

struct WaitSummary {
    double max = 0.0;
    double mean = 0.0;
    double p95 = 0.0;
};

/// Nearest-rank percentile summary; all zeros for an empty list.
WaitSummary summarize_waits(std::span<const double> waits);

struct KioskQueueResult {
    std::vector<double> waits;  // time from arrival to service start, per person
    WaitSummary summary;
};

/// FIFO multi-server queue with deterministic service. Arrival times must be
/// nondecreasing, else Error(unsorted_input).
KioskQueueResult simulate_kiosk_queue(std::span<const double> arrival_times, const KioskFleet& fleet);

}  // namespace slotflow
