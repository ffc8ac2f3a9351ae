#include "slotflow/kiosk_queue.hpp"

#include "slotflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <queue>

namespace slotflow {

void KioskFleet::validate() const
{
    if (num_kiosks < 1)
        throw Error(ErrorCode::invalid_argument, "fleet needs at least one kiosk");
    if (!(service_seconds > 0.0))
        throw Error(ErrorCode::invalid_argument, "kiosk service time must be positive");
}

double worst_case_wait(std::int64_t arrivals, const KioskFleet& fleet)
{
    fleet.validate();
    if (arrivals < 1)
        throw Error(ErrorCode::invalid_argument, "worst-case wait needs at least one arrival");
    return static_cast<double>((arrivals - 1) / fleet.num_kiosks) * fleet.service_seconds;
}

int min_kiosks(std::int64_t peak_arrivals, double service_seconds, double max_wait_seconds)
{
    if (peak_arrivals < 1)
        throw Error(ErrorCode::invalid_argument, "peak arrivals must be >= 1");
    if (!(service_seconds > 0.0))
        throw Error(ErrorCode::invalid_argument, "service time must be positive");
    if (!(max_wait_seconds >= 0.0))
        throw Error(ErrorCode::invalid_argument, "max wait must be >= 0");
    // k = A always gives zero wait, so the scan terminates.
    for (std::int64_t k = 1; k <= peak_arrivals; ++k) {
        if (worst_case_wait(peak_arrivals, {static_cast<int>(k), service_seconds}) <= max_wait_seconds)
            return static_cast<int>(k);
    }
    return static_cast<int>(peak_arrivals);
}

WaitSummary summarize_waits(std::span<const double> waits)
{
    WaitSummary out;
    if (waits.empty())
        return out;
    std::vector<double> sorted(waits.begin(), waits.end());
    std::sort(sorted.begin(), sorted.end());
    out.max = sorted.back();
    out.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(sorted.size())));
    out.p95 = sorted[std::max<std::size_t>(rank, 1) - 1];
    return out;
}

KioskQueueResult simulate_kiosk_queue(std::span<const double> arrival_times, const KioskFleet& fleet)
{
    fleet.validate();
    if (!std::is_sorted(arrival_times.begin(), arrival_times.end()))
        throw Error(ErrorCode::unsorted_input, "kiosk arrival times must be nondecreasing");

    // Min-heap of the times at which each kiosk becomes free.
    std::priority_queue<double, std::vector<double>, std::greater<>> free_at;
    for (int k = 0; k < fleet.num_kiosks; ++k)
        free_at.push(0.0);

    KioskQueueResult out;
    out.waits.reserve(arrival_times.size());
    for (double arrive : arrival_times) {
        const double kiosk_free = free_at.top();
        free_at.pop();
        const double start = std::max(arrive, kiosk_free);
        out.waits.push_back(start - arrive);
        free_at.push(start + fleet.service_seconds);
    }
    out.summary = summarize_waits(out.waits);
    return out;
}

}  // namespace slotflow
