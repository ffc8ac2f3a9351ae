#include "slotflow/allocator.hpp"

#include "packing_lp.hpp"
#include "slotflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

namespace slotflow {

double cap_tolerance(double cap)
{
    return 1e-9 * std::max(1.0, std::abs(cap));
}

void AllocationProblem::validate() const
{
    grid.validate();
    const auto n = static_cast<std::size_t>(grid.num_slots);
    if (durations.num_slots() != grid.num_slots)
        throw Error(ErrorCode::shape_mismatch, "duration matrix rows differ from grid slots");
    if (show_rate.size() != n || committed.size() != n || upper_bound.size() != n)
        throw Error(ErrorCode::shape_mismatch, "per-slot vectors must have num_slots entries");
    if (!background.empty() && background.size() != n)
        throw Error(ErrorCode::shape_mismatch, "background must be empty or have num_slots entries");
    if (!(occupancy_cap >= 0.0))
        throw Error(ErrorCode::invariant_violation, "occupancy_cap must be >= 0");
    if (!(entry_cap >= 0.0))
        throw Error(ErrorCode::invariant_violation, "entry_cap must be >= 0");
    for (std::size_t s = 0; s < n; ++s) {
        if (!(show_rate[s] > 0.0 && show_rate[s] <= 1.0))
            throw Error(ErrorCode::invariant_violation, "show_rate must be in (0, 1] at slot " + std::to_string(s));
        if (committed[s] < 0)
            throw Error(ErrorCode::invariant_violation, "committed must be >= 0 at slot " + std::to_string(s));
        if (upper_bound[s] < 0)
            throw Error(ErrorCode::invariant_violation, "upper_bound must be >= 0 at slot " + std::to_string(s));
        if (!background.empty() && !(background[s] >= 0.0))
            throw Error(ErrorCode::invariant_violation, "background must be >= 0 at slot " + std::to_string(s));
    }
}

namespace {

double background_of(const AllocationProblem& p, int t)
{
    return p.background.empty() ? 0.0 : p.background[t];
}

double objective_of(const AllocationProblem& p, const std::vector<std::int64_t>& x)
{
    (void)p;
    return static_cast<double>(std::accumulate(x.begin(), x.end(), std::int64_t{0}));
}

std::vector<double> expected_occupancy(const AllocationProblem& p, const std::vector<std::int64_t>& x)
{
    const SurvivalMatrix q(p.durations);
    std::vector<double> entries(p.grid.num_slots);
    for (int s = 0; s < p.grid.num_slots; ++s)
        entries[s] = p.show_rate[s] * static_cast<double>(x[s] + p.committed[s]);
    auto occ = predict_occupancy(entries, q);
    for (int t = 0; t < p.grid.num_slots; ++t)
        occ[t] += background_of(p, t);
    return occ;
}

AllocationPlan make_plan(const AllocationProblem& p, std::vector<std::int64_t> x, bool feasible)
{
    AllocationPlan plan;
    plan.objective = objective_of(p, x);
    plan.predicted_occupancy = expected_occupancy(p, x);
    plan.bound = plan.objective;
    plan.issuable = std::move(x);
    plan.feasible = feasible;
    return plan;
}

// Depth-first search in slot order that tries each slot's values from the
// largest down and prunes with the relaxation of the remaining slots. The
// first plan it completes is the lexicographically greatest one reaching the
// target. Row t only involves slots <= t, so fixing slot s settles row s.
class LexSearch {
public:
    enum class Outcome { found, infeasible, unknown };

    LexSearch(int n, std::vector<double> a, const std::vector<double>& b, std::vector<std::int64_t> hi, double tol)
        : n_(n), a_(std::move(a)), hi_(std::move(hi))
    {
        b_.resize(n_);
        for (int t = 0; t < n_; ++t)
            b_[t] = b[t] + tol;
    }

    double root_bound()
    {
        budget_left_ = 1;
        return relax(0, b_).value;
    }

    // Searches for a plan with objective >= target within `budget` relaxations.
    Outcome run(std::int64_t target, std::int64_t budget, std::vector<std::int64_t>& out)
    {
        budget_left_ = budget;
        std::vector<std::int64_t> x(n_, 0);
        try {
            const auto r = relax(0, b_);
            if (r.value < static_cast<double>(target) - kBoundSlack)
                return Outcome::infeasible;
            if (!dfs(0, b_, 0, target, r.x[0], x))
                return Outcome::infeasible;
        } catch (const OutOfBudget&) {
            return Outcome::unknown;
        }
        out = std::move(x);
        return Outcome::found;
    }

    // Sequential rounding: fix each slot at the floor of its value in the
    // relaxation of the remaining slots.
    std::vector<std::int64_t> dive()
    {
        budget_left_ = std::numeric_limits<std::int64_t>::max();
        std::vector<std::int64_t> x(n_, 0);
        std::vector<double> resid = b_;
        for (int s = 0; s < n_; ++s) {
            std::int64_t v = largest_fit(s, resid);
            if (s + 1 < n_) {
                const auto r = relax(s, resid);
                v = std::min<std::int64_t>(v, static_cast<std::int64_t>(std::floor(r.x[0] + 1e-7)));
            }
            x[s] = v;
            for (int t = s; t < n_; ++t)
                resid[t] -= at(t, s) * static_cast<double>(v);
        }
        return x;
    }

private:
    struct OutOfBudget {};
    static constexpr double kBoundSlack = 1e-6;

    double at(int t, int s) const { return a_[static_cast<std::size_t>(t) * n_ + s]; }

    // Relaxation over slots [first, n) against residual capacities.
    detail::LpSolution relax(int first, const std::vector<double>& resid)
    {
        if (--budget_left_ < 0)
            throw OutOfBudget{};
        const int m = n_ - first;
        detail::PackingLp lp;
        lp.rows = m;
        lp.cols = m;
        lp.a.resize(static_cast<std::size_t>(m) * m);
        for (int t = 0; t < m; ++t)
            for (int s = 0; s < m; ++s)
                lp.a[static_cast<std::size_t>(t) * m + s] = at(first + t, first + s);
        lp.b.assign(resid.begin() + first, resid.end());
        for (double& v : lp.b)
            v = std::max(v, 0.0);
        lp.c.assign(m, 1.0);
        lp.upper.resize(m);
        for (int s = 0; s < m; ++s)
            lp.upper[s] = static_cast<double>(hi_[first + s]);
        return detail::solve_packing_lp(lp);
    }

    std::int64_t largest_fit(int s, const std::vector<double>& resid) const
    {
        double room = static_cast<double>(hi_[s]);
        for (int t = s; t < n_; ++t) {
            const double c = at(t, s);
            if (c > 0.0)
                room = std::min(room, std::floor(resid[t] / c));
        }
        auto v = static_cast<std::int64_t>(std::max(room, 0.0));
        // Guard the floor against rounding in the division.
        auto fits = [&](std::int64_t k) {
            for (int t = s; t < n_; ++t)
                if (at(t, s) * static_cast<double>(k) > resid[t])
                    return false;
            return true;
        };
        while (v > 0 && !fits(v))
            --v;
        return v;
    }

    bool dfs(int s, const std::vector<double>& resid, std::int64_t value, std::int64_t target, double center,
             std::vector<std::int64_t>& x)
    {
        const std::int64_t need = target - value;
        const std::int64_t vmax = largest_fit(s, resid);
        if (s == n_ - 1) {
            if (vmax < need)
                return false;
            x[s] = vmax;
            return true;
        }

        std::vector<double> next(n_);
        struct Probe {
            bool ok;
            double child_center;
        };
        auto probe = [&](std::int64_t v) {
            for (int t = 0; t < n_; ++t)
                next[t] = t > s ? resid[t] - at(t, s) * static_cast<double>(v) : resid[t];
            const auto r = relax(s + 1, next);
            const bool ok = static_cast<double>(v) + r.value >= static_cast<double>(need) - kBoundSlack;
            return Probe{ok, r.x.empty() ? 0.0 : r.x[0]};
        };

        // The bound is concave in x[s] and peaks at `center`, so the values
        // worth trying form one interval; find its top.
        std::int64_t top = -1;
        const auto right = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::ceil(center - 1e-9)), 0, vmax);
        if (probe(vmax).ok) {
            top = vmax;
        } else if (right < vmax && probe(right).ok) {
            std::int64_t good = right;
            std::int64_t bad = vmax;
            while (bad - good > 1) {
                const std::int64_t mid = good + (bad - good) / 2;
                (probe(mid).ok ? good : bad) = mid;
            }
            top = good;
        } else {
            top = right - 1;
        }

        for (std::int64_t v = top; v >= 0; --v) {
            const auto p = probe(v);
            if (!p.ok) {
                if (static_cast<double>(v) <= center)
                    break;
                continue;
            }
            x[s] = v;
            if (dfs(s + 1, next, value + v, target, p.child_center, x))
                return true;
        }
        return false;
    }

    int n_;
    std::vector<double> a_;
    std::vector<double> b_;
    std::vector<std::int64_t> hi_;
    std::int64_t budget_left_ = 0;
};

// Relaxations allowed per target before it is left unsettled.
constexpr std::int64_t kTargetBudget = 400;

}  // namespace

AllocationPlan solve_allocation(const AllocationProblem& problem)
{
    problem.validate();
    const int n = problem.grid.num_slots;
    const SurvivalMatrix q(problem.durations);
    const double cap_tol = cap_tolerance(problem.occupancy_cap);
    const double entry_tol = cap_tolerance(problem.entry_cap);

    // Residual occupancy capacity after background and commitments.
    std::vector<double> resid(n);
    bool infeasible = false;
    for (int t = 0; t < n; ++t) {
        double load = background_of(problem, t);
        for (int s = std::max(0, t - q.d_max() + 1); s <= t; ++s)
            load += problem.show_rate[s] * static_cast<double>(problem.committed[s]) * q.at(s, t);
        resid[t] = problem.occupancy_cap - load;
        if (resid[t] < -cap_tol)
            infeasible = true;
    }
    std::vector<std::int64_t> hi(n);
    for (int s = 0; s < n; ++s) {
        const double p = problem.show_rate[s];
        const double c = static_cast<double>(problem.committed[s]);
        if (p * c > problem.entry_cap + entry_tol)
            infeasible = true;
        const double room = std::floor((problem.entry_cap + entry_tol) / p - c);
        hi[s] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::max(room, 0.0)), 0, problem.upper_bound[s]);
        while (hi[s] > 0 && p * (static_cast<double>(hi[s]) + c) > problem.entry_cap + entry_tol)
            --hi[s];
    }
    if (infeasible)
        return make_plan(problem, std::vector<std::int64_t>(n, 0), false);

    // Occupancy rows become the packing constraints; entry caps fold into hi.
    std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
    for (int t = 0; t < n; ++t)
        for (int s = std::max(0, t - q.d_max() + 1); s <= t; ++s)
            a[static_cast<std::size_t>(t) * n + s] = problem.show_rate[s] * q.at(s, t);
    for (int t = 0; t < n; ++t)
        resid[t] = std::max(resid[t], 0.0);

    LexSearch lex(n, std::move(a), resid, hi, cap_tol);
    const std::int64_t relaxed = static_cast<std::int64_t>(std::floor(lex.root_bound() + 1e-6));
    std::vector<std::int64_t> best = lex.dive();
    const std::int64_t dived = std::accumulate(best.begin(), best.end(), std::int64_t{0});

    // Every target above the dive is either refuted, which tightens the bound,
    // met, or left unsettled by the budget. Then the best reachable target is
    // searched again so the earliest-slot-first tie-break applies.
    std::int64_t bound = std::max(relaxed, dived);
    std::int64_t reached = dived;
    for (std::int64_t target = bound; target > dived; --target) {
        std::vector<std::int64_t> x;
        const auto out = lex.run(target, kTargetBudget, x);
        if (out == LexSearch::Outcome::infeasible && bound == target) {
            bound = target - 1;
        } else if (out == LexSearch::Outcome::found) {
            best = std::move(x);
            reached = target;
            break;
        }
    }
    if (reached == dived) {
        std::vector<std::int64_t> x;
        if (lex.run(dived, kTargetBudget, x) == LexSearch::Outcome::found)
            best = std::move(x);
    }

    auto plan = make_plan(problem, best, true);
    plan.bound = std::max(static_cast<double>(bound), plan.objective);
    if (!verify_plan(problem, plan).feasible)
        throw Error(ErrorCode::solver_failure, "solver produced a plan that fails verification");
    return plan;
}

AllocationPlan brute_force_allocation(const AllocationProblem& problem)
{
    problem.validate();
    const int n = problem.grid.num_slots;
    if (n > 6)
        throw Error(ErrorCode::instance_too_large, "brute force is limited to 6 slots");
    for (auto u : problem.upper_bound)
        if (u > 8)
            throw Error(ErrorCode::instance_too_large, "brute force is limited to upper bounds <= 8");

    const double cap_tol = cap_tolerance(problem.occupancy_cap);
    const double entry_tol = cap_tolerance(problem.entry_cap);
    const SurvivalMatrix q(problem.durations);

    auto ok = [&](const std::vector<std::int64_t>& x) {
        for (int s = 0; s < n; ++s)
            if (problem.show_rate[s] * static_cast<double>(x[s] + problem.committed[s]) > problem.entry_cap + entry_tol)
                return false;
        for (int t = 0; t < n; ++t) {
            double occ = background_of(problem, t);
            for (int s = 0; s <= t; ++s)
                occ += problem.show_rate[s] * static_cast<double>(x[s] + problem.committed[s]) * q.at(s, t);
            if (occ > problem.occupancy_cap + cap_tol)
                return false;
        }
        return true;
    };

    if (!ok(std::vector<std::int64_t>(n, 0)))
        return make_plan(problem, std::vector<std::int64_t>(n, 0), false);

    std::vector<std::int64_t> x(n, 0);
    std::vector<std::int64_t> best = x;
    double best_value = -1.0;
    // Odometer over every integer plan; lexicographic order is ascending, so a
    // later plan with an equal objective is lexicographically greater.
    while (true) {
        if (ok(x)) {
            const double v = objective_of(problem, x);
            if (v >= best_value - 1e-12) {
                best_value = v;
                best = x;
            }
        }
        int pos = n - 1;
        while (pos >= 0 && x[pos] == problem.upper_bound[pos]) {
            x[pos] = 0;
            --pos;
        }
        if (pos < 0)
            break;
        ++x[pos];
    }
    return make_plan(problem, best, true);
}

PlanVerdict verify_plan(const AllocationProblem& problem, const AllocationPlan& plan)
{
    problem.validate();
    const int n = problem.grid.num_slots;
    if (static_cast<int>(plan.issuable.size()) != n)
        throw Error(ErrorCode::shape_mismatch, "plan length differs from problem slots");

    std::vector<double> entries(n);
    for (int s = 0; s < n; ++s)
        entries[s] = problem.show_rate[s] * static_cast<double>(plan.issuable[s] + problem.committed[s]);
    PlanVerdict verdict;
    verdict.occupancy = predict_occupancy(entries, SurvivalMatrix(problem.durations));
    for (int t = 0; t < n; ++t)
        verdict.occupancy[t] += background_of(problem, t);

    verdict.feasible = true;
    const double cap_tol = cap_tolerance(problem.occupancy_cap);
    const double entry_tol = cap_tolerance(problem.entry_cap);
    for (int s = 0; s < n; ++s) {
        if (plan.issuable[s] < 0 || plan.issuable[s] > problem.upper_bound[s])
            verdict.feasible = false;
        if (entries[s] > problem.entry_cap + entry_tol)
            verdict.feasible = false;
    }
    for (int t = 0; t < n; ++t)
        if (verdict.occupancy[t] > problem.occupancy_cap + cap_tol)
            verdict.feasible = false;
    return verdict;
}

}  // namespace slotflow
