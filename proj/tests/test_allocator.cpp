#include "slotflow/allocator.hpp"
#include "slotflow/error.hpp"
#include "slotflow/io.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>

using namespace slotflow;

namespace {

AllocationProblem make_problem(int n, double cap, double entry_cap, std::vector<std::vector<double>> rows)
{
    SlotGrid g;
    g.num_slots = n;
    AllocationProblem p{g, cap, entry_cap,
                        DurationMatrix(std::move(rows), std::vector<std::int64_t>(n, 1)),
                        std::vector<double>(n, 1.0), std::vector<std::int64_t>(n, 0),
                        std::vector<std::int64_t>(n, 1000), {}};
    return p;
}

std::vector<std::vector<double>> point_rows(int n, int d)
{
    std::vector<std::vector<double>> rows(n, std::vector<double>(d, 0.0));
    for (auto& r : rows)
        r[d - 1] = 1.0;
    return rows;
}

// Occupancy straight from the duration rows, without the survival matrix.
std::vector<double> direct_occupancy(const AllocationProblem& p, const std::vector<std::int64_t>& x)
{
    const int n = p.grid.num_slots;
    const int dm = p.durations.d_max();
    std::vector<double> occ(n, 0.0);
    for (int t = 0; t < n; ++t) {
        if (!p.background.empty())
            occ[t] += p.background[t];
        for (int s = 0; s <= t; ++s) {
            double still = 0.0;
            for (int d = t - s + 1; d <= dm; ++d)
                still += p.durations.prob(s, d);
            occ[t] += p.show_rate[s] * static_cast<double>(x[s] + p.committed[s]) * still;
        }
    }
    return occ;
}

bool direct_feasible(const AllocationProblem& p, const std::vector<std::int64_t>& x)
{
    const auto occ = direct_occupancy(p, x);
    for (int s = 0; s < p.grid.num_slots; ++s) {
        if (x[s] < 0 || x[s] > p.upper_bound[s])
            return false;
        if (p.show_rate[s] * static_cast<double>(x[s] + p.committed[s]) > p.entry_cap + 1e-7)
            return false;
        if (occ[s] > p.occupancy_cap + 1e-7)
            return false;
    }
    return true;
}

// Optimal objective by independent enumeration.
double enumerate_optimum(const AllocationProblem& p)
{
    const int n = p.grid.num_slots;
    std::vector<std::int64_t> x(n, 0);
    double best = -1.0;
    std::function<void(int)> rec = [&](int s) {
        if (s == n) {
            if (direct_feasible(p, x))
                best = std::max(best, static_cast<double>(std::accumulate(x.begin(), x.end(), std::int64_t{0})));
            return;
        }
        for (std::int64_t v = 0; v <= p.upper_bound[s]; ++v) {
            x[s] = v;
            rec(s + 1);
        }
        x[s] = 0;
    };
    rec(0);
    return best;
}

AllocationProblem random_problem(std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> slots(1, 5);
    std::uniform_int_distribution<int> dmax(1, 3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = slots(rng);
    const int dm = dmax(rng);
    std::vector<std::vector<double>> rows(n, std::vector<double>(dm, 0.0));
    for (auto& r : rows) {
        double total = 0.0;
        for (double& v : r) {
            v = std::floor(u(rng) * 4.0) / 4.0;
            total += v;
        }
        if (total == 0.0) {
            r.back() = 1.0;
            total = 1.0;
        }
        for (double& v : r)
            v /= total;
    }
    auto p = make_problem(n, 2.0 + std::floor(u(rng) * 12.0), 1.0 + std::floor(u(rng) * 7.0), std::move(rows));
    for (int s = 0; s < n; ++s) {
        p.show_rate[s] = 0.5 + std::floor(u(rng) * 6.0) / 10.0;
        p.upper_bound[s] = std::uniform_int_distribution<int>(0, 6)(rng);
        p.committed[s] = u(rng) < 0.3 ? 1 : 0;
    }
    return p;
}

}  // namespace

TEST_CASE("single slot, unit duration")
{
    auto p = make_problem(1, 5.0, 100.0, point_rows(1, 1));
    const auto plan = solve_allocation(p);
    CHECK(plan.feasible);
    CHECK(plan.issuable == std::vector<std::int64_t>{5});
    CHECK(plan.objective == 5.0);
    CHECK(plan.proven_optimal());
}

TEST_CASE("tie broken towards earlier slots")
{
    auto p = make_problem(2, 10.0, 100.0, point_rows(2, 2));
    const auto plan = solve_allocation(p);
    CHECK(plan.issuable == std::vector<std::int64_t>{10, 0});
    CHECK(plan.objective == 10.0);
}

TEST_CASE("show rate scales the admissible tickets")
{
    auto p = make_problem(1, 8.0, 100.0, point_rows(1, 1));
    p.show_rate = {0.8};
    CHECK(solve_allocation(p).issuable == std::vector<std::int64_t>{10});
    p.entry_cap = 4.0;
    CHECK(solve_allocation(p).issuable == std::vector<std::int64_t>{5});
}

TEST_CASE("solver matches two exhaustive searches on random instances")
{
    std::mt19937_64 rng(2024);
    int checked = 0;
    for (int i = 0; i < 250; ++i) {
        const auto p = random_problem(rng);
        const auto fast = solve_allocation(p);
        const auto brute = brute_force_allocation(p);
        const double oracle = enumerate_optimum(p);
        CAPTURE(i);
        REQUIRE(fast.feasible == brute.feasible);
        if (!brute.feasible) {
            CHECK(oracle < 0.0);
            continue;
        }
        CHECK(fast.objective == brute.objective);
        CHECK(fast.objective == oracle);
        CHECK(fast.issuable == brute.issuable);
        CHECK(fast.bound >= fast.objective);
        CHECK(direct_feasible(p, fast.issuable));
        ++checked;
    }
    CHECK(checked >= 200);
}

TEST_CASE("zero caps and zero upper bounds give an empty plan")
{
    auto p = make_problem(3, 0.0, 10.0, point_rows(3, 2));
    auto plan = solve_allocation(p);
    CHECK(plan.feasible);
    CHECK(plan.objective == 0.0);
    p = make_problem(3, 100.0, 10.0, point_rows(3, 2));
    p.upper_bound = {0, 0, 0};
    CHECK(solve_allocation(p).objective == 0.0);
}

TEST_CASE("a huge cap leaves only the upper bounds binding")
{
    auto p = make_problem(4, 1e9, 1e9, point_rows(4, 3));
    p.upper_bound = {3, 1, 4, 1};
    const auto plan = solve_allocation(p);
    CHECK(plan.issuable == p.upper_bound);
    CHECK(plan.proven_optimal());
}

TEST_CASE("commitments beyond the cap are reported infeasible")
{
    auto p = make_problem(2, 5.0, 100.0, point_rows(2, 1));
    p.committed = {9, 0};
    const auto plan = solve_allocation(p);
    CHECK_FALSE(plan.feasible);
    CHECK(plan.issuable == std::vector<std::int64_t>{0, 0});
}

TEST_CASE("verify_plan rejects over-cap plans and agrees with a direct evaluation")
{
    auto p = make_problem(3, 6.0, 100.0, point_rows(3, 2));
    AllocationPlan bad;
    bad.issuable = {4, 3, 0};
    CHECK_FALSE(verify_plan(p, bad).feasible);

    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
        const auto q = random_problem(rng);
        AllocationPlan plan;
        for (int s = 0; s < q.grid.num_slots; ++s)
            plan.issuable.push_back(std::uniform_int_distribution<std::int64_t>(0, q.upper_bound[s])(rng));
        const auto verdict = verify_plan(q, plan);
        CHECK(verdict.feasible == direct_feasible(q, plan.issuable));
        const auto occ = direct_occupancy(q, plan.issuable);
        for (int t = 0; t < q.grid.num_slots; ++t)
            CHECK(verdict.occupancy[t] == doctest::Approx(occ[t]).epsilon(1e-12));
    }
}

TEST_CASE("objective is monotone in caps and bounds")
{
    std::mt19937_64 rng(11);
    for (int i = 0; i < 60; ++i) {
        auto p = random_problem(rng);
        const double base = solve_allocation(p).objective;
        auto looser = p;
        looser.occupancy_cap += 3.0;
        CHECK(solve_allocation(looser).objective >= base);
        looser = p;
        looser.entry_cap += 2.0;
        CHECK(solve_allocation(looser).objective >= base);
        looser = p;
        for (auto& u : looser.upper_bound)
            u += 1;
        CHECK(solve_allocation(looser).objective >= base);
    }
}

TEST_CASE("solver is deterministic and reports matching occupancy")
{
    const auto p = parse_problem(read_text_file(test::data_path("allocator_regression.txt")));
    const auto a = solve_allocation(p);
    const auto b = solve_allocation(p);
    CHECK(a == b);
    CHECK(a.objective == 21.0);
    CHECK(a.issuable == std::vector<std::int64_t>{6, 4, 5, 6});
    CHECK(a.bound >= a.objective);
    const auto brute = brute_force_allocation(p);
    CHECK(brute.objective == a.objective);
    CHECK(brute.issuable == a.issuable);
    const auto verdict = verify_plan(p, a);
    CHECK(verdict.feasible);
    for (std::size_t t = 0; t < a.predicted_occupancy.size(); ++t)
        CHECK(std::abs(a.predicted_occupancy[t] - verdict.occupancy[t]) <= 1e-9);
}

TEST_CASE("default-sized instance solves within the caps")
{
    const int n = 44;
    std::vector<std::vector<double>> rows(n, std::vector<double>(16, 0.0));
    for (int s = 0; s < n; ++s)
        for (int d = 6; d <= 10; ++d)
            rows[s][d - 1] = 0.2;
    auto p = make_problem(n, 1200.0, 268.0, std::move(rows));
    std::fill(p.show_rate.begin(), p.show_rate.end(), 0.85);
    const auto plan = solve_allocation(p);
    CHECK(plan.feasible);
    CHECK(verify_plan(p, plan).feasible);
    CHECK(plan.bound >= plan.objective);
    CHECK(plan.objective > 0.0);
}

TEST_CASE("brute force refuses large instances")
{
    auto p = make_problem(7, 10.0, 10.0, point_rows(7, 1));
    CHECK_THROWS_AS(brute_force_allocation(p), Error);
    p = make_problem(2, 10.0, 10.0, point_rows(2, 1));
    p.upper_bound = {9, 1};
    try {
        (void)brute_force_allocation(p);
        FAIL("accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::instance_too_large);
    }
}

TEST_CASE("malformed problems are rejected")
{
    auto p = make_problem(2, 10.0, 10.0, point_rows(2, 1));
    p.show_rate = {1.0};
    CHECK_THROWS_AS(solve_allocation(p), Error);
    p = make_problem(2, -1.0, 10.0, point_rows(2, 1));
    CHECK_THROWS_AS(solve_allocation(p), Error);
}
