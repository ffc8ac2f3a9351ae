#include "slotflow/duration_model.hpp"

#include "slotflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace slotflow {

namespace {

constexpr double kRowSumTolerance = 1e-9;

std::vector<double> normalized(const std::vector<std::int64_t>& hist)
{
    const double total = static_cast<double>(std::accumulate(hist.begin(), hist.end(), std::int64_t{0}));
    std::vector<double> out(hist.size(), 0.0);
    for (std::size_t i = 0; i < hist.size(); ++i)
        out[i] = hist[i] / total;
    return out;
}

}  // namespace

DurationMatrix::DurationMatrix(std::vector<std::vector<double>> rows, std::vector<std::int64_t> counts)
    : counts_(std::move(counts))
{
    if (rows.empty())
        throw Error(ErrorCode::empty_input, "duration matrix needs at least one row");
    if (rows.size() != counts_.size())
        throw Error(ErrorCode::shape_mismatch, "duration matrix rows and counts differ in length");
    d_max_ = static_cast<int>(rows.front().size());
    if (d_max_ < 1)
        throw Error(ErrorCode::invalid_argument, "d_max must be >= 1");
    probs_.reserve(rows.size() * d_max_);
    for (std::size_t s = 0; s < rows.size(); ++s) {
        const auto& r = rows[s];
        if (static_cast<int>(r.size()) != d_max_)
            throw Error(ErrorCode::shape_mismatch, "duration row " + std::to_string(s) + " has wrong length");
        double sum = 0.0;
        for (double p : r) {
            if (!(p >= 0.0))
                throw Error(ErrorCode::invariant_violation, "negative probability in duration row " + std::to_string(s));
            sum += p;
        }
        if (std::abs(sum - 1.0) > kRowSumTolerance)
            throw Error(ErrorCode::invariant_violation, "duration row " + std::to_string(s) + " does not sum to 1");
        if (counts_[s] < 0)
            throw Error(ErrorCode::invariant_violation, "negative sample count in duration row " + std::to_string(s));
        probs_.insert(probs_.end(), r.begin(), r.end());
    }
}

DurationMatrix DurationMatrix::from_class_pmfs(const SlotClassMap& classes,
                                               const std::array<std::vector<double>, kNumSlotClasses>& pmfs,
                                               std::int64_t nominal_count)
{
    std::vector<std::vector<double>> rows;
    rows.reserve(classes.num_slots());
    for (int s = 0; s < classes.num_slots(); ++s)
        rows.push_back(pmfs[static_cast<int>(classes.label_of(s))]);
    return DurationMatrix(std::move(rows), std::vector<std::int64_t>(classes.num_slots(), nominal_count));
}

std::span<const double> DurationMatrix::row(int slot) const
{
    if (slot < 0 || slot >= num_slots())
        throw Error(ErrorCode::invalid_argument, "duration row " + std::to_string(slot) + " out of range");
    return {probs_.data() + static_cast<std::size_t>(slot) * d_max_, static_cast<std::size_t>(d_max_)};
}

double DurationMatrix::row_mean(int slot) const
{
    auto r = row(slot);
    double mean = 0.0;
    for (int d = 1; d <= d_max_; ++d)
        mean += d * r[d - 1];
    return mean;
}

SurvivalMatrix::SurvivalMatrix(const DurationMatrix& matrix)
    : num_slots_(matrix.num_slots()), d_max_(matrix.d_max()),
      tail_(static_cast<std::size_t>(num_slots_) * d_max_, 0.0)
{
    for (int s = 0; s < num_slots_; ++s) {
        auto r = matrix.row(s);
        double acc = 0.0;
        // tail[k] = P(d >= k + 1)
        for (int k = d_max_ - 1; k >= 0; --k) {
            acc += r[k];
            tail_[static_cast<std::size_t>(s) * d_max_ + k] = acc;
        }
    }
}

DurationMatrix fit_duration_matrix(std::span<const VisitRecord> records,
                                   const SlotGrid& grid,
                                   const SlotClassMap& classes,
                                   int d_max,
                                   int min_row_samples)
{
    grid.validate();
    if (records.empty())
        throw Error(ErrorCode::empty_input, "no visit records to fit");
    if (d_max < 1)
        throw Error(ErrorCode::invalid_argument, "d_max must be >= 1");
    if (classes.num_slots() != grid.num_slots)
        throw Error(ErrorCode::shape_mismatch, "class map does not match grid");

    const int n = grid.num_slots;
    std::vector<std::vector<std::int64_t>> per_slot(n, std::vector<std::int64_t>(d_max, 0));
    std::vector<std::vector<std::int64_t>> per_class(kNumSlotClasses, std::vector<std::int64_t>(d_max, 0));
    std::vector<std::int64_t> global(d_max, 0);
    std::vector<std::int64_t> slot_count(n, 0);
    std::array<std::int64_t, kNumSlotClasses> class_count{};

    for (const auto& r : records) {
        if (!grid.contains(r.entry_slot))
            throw Error(ErrorCode::invalid_argument, "visit entry slot " + std::to_string(r.entry_slot) + " outside grid");
        if (r.duration_slots < 1 || r.group_size < 1)
            throw Error(ErrorCode::invalid_argument, "visit record needs duration >= 1 and group_size >= 1");
        const int k = std::min(r.duration_slots, d_max) - 1;
        const int c = static_cast<int>(classes.label_of(r.entry_slot));
        ++per_slot[r.entry_slot][k];
        ++per_class[c][k];
        ++global[k];
        ++slot_count[r.entry_slot];
        ++class_count[c];
    }

    const auto global_row = normalized(global);
    std::array<std::vector<double>, kNumSlotClasses> class_rows;
    for (int c = 0; c < kNumSlotClasses; ++c)
        class_rows[c] = class_count[c] > 0 ? normalized(per_class[c]) : global_row;

    std::vector<std::vector<double>> rows;
    rows.reserve(n);
    for (int s = 0; s < n; ++s) {
        if (slot_count[s] >= min_row_samples && slot_count[s] > 0)
            rows.push_back(normalized(per_slot[s]));
        else
            rows.push_back(class_rows[static_cast<int>(classes.label_of(s))]);
    }
    return DurationMatrix(std::move(rows), std::move(slot_count));
}

std::vector<double> predict_occupancy(std::span<const double> entries, const SurvivalMatrix& q)
{
    if (static_cast<int>(entries.size()) != q.num_slots())
        throw Error(ErrorCode::shape_mismatch, "entries length differs from survival matrix slots");
    std::vector<double> occ(q.horizon(), 0.0);
    for (int s = 0; s < q.num_slots(); ++s) {
        if (entries[s] == 0.0)
            continue;
        for (int t = s; t < s + q.d_max(); ++t)
            occ[t] += entries[s] * q.at(s, t);
    }
    return occ;
}

std::vector<double> predict_exits(std::span<const double> entries, const DurationMatrix& matrix)
{
    if (static_cast<int>(entries.size()) != matrix.num_slots())
        throw Error(ErrorCode::shape_mismatch, "entries length differs from duration matrix slots");
    std::vector<double> exits(matrix.num_slots() + matrix.d_max() - 1, 0.0);
    for (int s = 0; s < matrix.num_slots(); ++s) {
        if (entries[s] == 0.0)
            continue;
        auto r = matrix.row(s);
        for (int d = 1; d <= matrix.d_max(); ++d)
            exits[s + d - 1] += entries[s] * r[d - 1];
    }
    return exits;
}

std::vector<double> fold_after_closing(std::span<const double> series, int num_slots)
{
    std::vector<double> out(num_slots, 0.0);
    for (std::size_t t = 0; t < series.size(); ++t)
        out[std::min<std::size_t>(t, num_slots - 1)] += series[t];
    return out;
}

double mean_duration(const DurationMatrix& matrix, const SlotClass& cls, const SlotGrid& grid)
{
    double weighted = 0.0;
    double total = 0.0;
    for (int s = cls.begin; s < cls.end; ++s) {
        const auto n = static_cast<double>(matrix.samples(s));
        weighted += n * matrix.row_mean(s);
        total += n;
    }
    if (total <= 0.0)
        throw Error(ErrorCode::empty_input,
                    "class " + std::string(to_string(cls.label)) + " has no duration samples");
    return weighted / total * grid.slot_length_minutes;
}

std::vector<double> discretized_normal_pmf(double mean_slots, double sd_slots, int d_max)
{
    if (d_max < 1)
        throw Error(ErrorCode::invalid_argument, "d_max must be >= 1");
    std::vector<double> pmf(d_max, 0.0);
    if (!(sd_slots > 0.0)) {
        const int d = std::clamp(static_cast<int>(std::lround(mean_slots)), 1, d_max);
        pmf[d - 1] = 1.0;
        return pmf;
    }
    double total = 0.0;
    for (int d = 1; d <= d_max; ++d) {
        const double z = (d - mean_slots) / sd_slots;
        pmf[d - 1] = std::exp(-0.5 * z * z);
        total += pmf[d - 1];
    }
    for (double& p : pmf)
        p /= total;
    return pmf;
}

}  // namespace slotflow
