#include "slotflow/noshow_model.hpp"

#include "slotflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace slotflow {

void NoShowModel::validate() const
{
    if (bucket_edges.empty() || bucket_edges.front() != 0)
        throw Error(ErrorCode::invariant_violation, "no-show bucket edges must start at 0");
    for (std::size_t i = 1; i < bucket_edges.size(); ++i)
        if (bucket_edges[i] <= bucket_edges[i - 1])
            throw Error(ErrorCode::invariant_violation, "no-show bucket edges must be strictly increasing");
    if (rates.size() != bucket_edges.size() || counts.size() != bucket_edges.size())
        throw Error(ErrorCode::invariant_violation, "no-show rates/counts must have one entry per bucket");
    for (double r : rates)
        if (!(r >= 0.0 && r <= 1.0))
            throw Error(ErrorCode::invariant_violation, "no-show rate outside [0, 1]");
    for (double o : class_offsets)
        if (!std::isfinite(o))
            throw Error(ErrorCode::invariant_violation, "no-show class offset must be finite");
}

int NoShowModel::bucket_of(int gap) const
{
    if (gap < 0)
        throw Error(ErrorCode::invalid_argument, "negative booking gap");
    auto it = std::upper_bound(bucket_edges.begin(), bucket_edges.end(), gap);
    return static_cast<int>(it - bucket_edges.begin()) - 1;
}

NoShowModel fit_noshow(std::span<const TicketRecord> tickets, std::span<const int> bucket_edges)
{
    if (tickets.empty())
        throw Error(ErrorCode::empty_input, "no tickets to fit");
    NoShowModel model;
    model.bucket_edges.assign(bucket_edges.begin(), bucket_edges.end());
    const std::size_t nb = model.bucket_edges.size();
    model.rates.assign(nb, 0.0);
    model.counts.assign(nb, 0);
    model.class_offsets = {};
    std::vector<std::int64_t> missed(nb, 0);
    std::int64_t total = 0;
    std::int64_t total_missed = 0;

    // validate edges before bucketing
    NoShowModel probe = model;
    probe.validate();

    for (const auto& t : tickets) {
        if (t.group_size < 1)
            throw Error(ErrorCode::invalid_argument, "ticket group_size must be >= 1");
        const int b = model.bucket_of(t.gap());
        ++model.counts[b];
        ++total;
        if (!t.showed) {
            ++missed[b];
            ++total_missed;
        }
    }
    const double global = static_cast<double>(total_missed) / total;
    for (std::size_t b = 0; b < nb; ++b)
        model.rates[b] = model.counts[b] > 0 ? static_cast<double>(missed[b]) / model.counts[b] : global;
    return model;
}

double predict_noshow(const NoShowModel& model, int gap, int visit_slot, const SlotClassMap* classes)
{
    double p = model.rates[model.bucket_of(gap)];
    if (classes != nullptr)
        p += model.class_offsets[static_cast<int>(classes->label_of(visit_slot))];
    return std::clamp(p, 0.0, 1.0);
}

double daily_noshow_rate(std::span<const TicketRecord> tickets)
{
    if (tickets.empty())
        throw Error(ErrorCode::empty_input, "no tickets for daily no-show rate");
    std::int64_t persons = 0;
    std::int64_t missed = 0;
    for (const auto& t : tickets) {
        persons += t.group_size;
        if (!t.showed)
            missed += t.group_size;
    }
    return static_cast<double>(missed) / static_cast<double>(persons);
}

std::int64_t overbooking_limit(double target_attendance, double show_rate_estimate, double safety_margin)
{
    if (!(show_rate_estimate > 0.0))
        throw Error(ErrorCode::invalid_argument, "show rate estimate must be positive");
    if (show_rate_estimate > 1.0)
        throw Error(ErrorCode::invalid_argument, "show rate estimate must be <= 1");
    if (!(safety_margin >= 0.0))
        throw Error(ErrorCode::invalid_argument, "safety margin must be >= 0");
    if (!(target_attendance >= 0.0))
        throw Error(ErrorCode::invalid_argument, "target attendance must be >= 0");
    const double planning_rate = std::min(1.0, show_rate_estimate + safety_margin);
    // 1e-9 absorbs representation error in exact quotients such as 90 / 0.9
    return static_cast<std::int64_t>(std::floor(target_attendance / planning_rate + 1e-9));
}

}  // namespace slotflow
