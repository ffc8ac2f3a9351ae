#include "slotflow/error.hpp"
#include "slotflow/mapek.hpp"
#include "slotflow/scenario.hpp"
#include "slotflow/simulator.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace slotflow;

namespace {

std::int64_t total(const std::vector<std::int64_t>& v)
{
    return std::accumulate(v.begin(), v.end(), std::int64_t{0});
}

Event entry(double ts, int slot, const std::string& tag, int size = 1)
{
    return {ts, EventKind::entry, slot, size, 0, tag};
}

Event exit_ev(double ts, int slot, const std::string& tag)
{
    return {ts, EventKind::exit, slot, 1, 0, tag};
}

}  // namespace

TEST_CASE("monitor tallies entries, exits and orphans")
{
    auto kb = truthful_knowledge(default_scenario());
    kb.begin_day();
    monitor(kb, entry(10.0, 0, "a", 3));
    CHECK(kb.entered[0] == 3);
    CHECK(kb.entry_parties[0] == 1);
    CHECK(kb.open_visits() == 1);
    monitor(kb, exit_ev(2000.0, 2, "a"));
    CHECK(kb.exited[2] == 3);
    CHECK(kb.open_visits() == 0);
    REQUIRE(kb.pending_visits[2].size() == 1);
    CHECK(kb.pending_visits[2][0].record == VisitRecord{0, 3, 3});
    monitor(kb, exit_ev(2001.0, 2, "ghost"));
    CHECK(kb.orphan_exits == 1);
    CHECK(kb.exited[2] == 3);
    CHECK_THROWS_AS(monitor(kb, entry(5.0, 0, "late")), Error);
    CHECK_THROWS_AS(monitor(kb, entry(3000.0, 44, "x")), Error);
}

TEST_CASE("empty windows report no drift")
{
    auto kb = truthful_knowledge(default_scenario());
    kb.begin_day();
    CHECK(analyze(kb) == DriftVerdict::none);
}

TEST_CASE("execute subtracts sales since the solve and floors at zero")
{
    auto kb = truthful_knowledge(default_scenario());
    kb.begin_day();
    (void)tick(kb, 0);
    kb.planned[5] = 20;
    kb.sold_at_solve[5] = 0;
    kb.sold[5] = 3;
    CHECK(execute(kb).availability[5] == 17);
    kb.sold[5] = 25;
    CHECK(execute(kb).availability[5] == 0);
}

TEST_CASE("tick publishes at most the plan and rejects repeats")
{
    auto kb = truthful_knowledge(default_scenario());
    kb.begin_day();
    const auto r = tick(kb, 0);
    CHECK(r.snapshot.boundary == 0);
    CHECK(static_cast<double>(total(r.snapshot.availability)) <= kb.plan.objective);
    CHECK(kb.plan.objective > 0.0);
    CHECK(kb.plan.bound >= kb.plan.objective);
    try {
        (void)tick(kb, 0);
        FAIL("repeat tick accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::double_tick);
    }
    CHECK_THROWS_AS(tick(kb, 44), Error);
}

TEST_CASE("plan without drift is idempotent")
{
    auto kb = truthful_knowledge(default_scenario());
    kb.begin_day();
    (void)tick(kb, 0);
    const auto first = kb.planned;
    const auto version = kb.version;
    plan(kb, DriftVerdict::none);
    CHECK(kb.planned == first);
    CHECK(kb.version == version);
}

TEST_CASE("fewer no-shows raise the planning show rate and never add availability")
{
    auto kb = truthful_knowledge(default_scenario());
    kb.begin_day();
    (void)tick(kb, 0);
    const double rate_before = planning_show_rate(kb, 10, 0);
    const auto avail_before = total(execute(kb).availability);
    for (int gap : {0, 6, 14, 30})
        for (int i = 0; i < 200; ++i)
            kb.ticket_window.push_back({10, 10 + gap, 1, true});
    plan(kb, DriftVerdict::noshow_drift);
    CHECK(kb.version == 1);
    CHECK(kb.noshow.rates[0] == 0.0);
    CHECK(planning_show_rate(kb, 10, 0) > rate_before);
    CHECK(total(execute(kb).availability) <= avail_before);
}

TEST_CASE("replan from the start of an empty day is the plain allocation")
{
    auto kb = truthful_knowledge(default_scenario());
    kb.begin_day();
    const auto full = replan(-1, kb);
    const auto problem = build_replan_problem(-1, kb);
    CHECK(problem.grid.num_slots == 44);
    for (double b : problem.background)
        CHECK(b == 0.0);
    const auto direct = solve_allocation(problem);
    CHECK(full.issuable == direct.issuable);
    CHECK(full.objective == direct.objective);
}

TEST_CASE("selling out the plan leaves at most the optimality gap to issue")
{
    auto kb = truthful_knowledge(default_scenario());
    kb.begin_day();
    (void)tick(kb, 0);
    const double gap = kb.plan.bound - kb.plan.objective;
    CHECK(gap >= 0.0);
    kb.sold = kb.planned;
    const auto again = replan(-1, kb);
    CHECK(again.feasible);
    CHECK(static_cast<double>(total(again.issuable)) <= gap);
}

TEST_CASE("parties still inside become background occupancy")
{
    auto kb = truthful_knowledge(default_scenario());
    kb.begin_day();
    (void)tick(kb, 0);
    monitor(kb, entry(10.0, 0, "a", 50));
    (void)tick(kb, 1);
    (void)tick(kb, 2);
    const auto p = build_replan_problem(2, kb);
    CHECK(p.grid.num_slots == 41);
    CHECK(p.background[0] == doctest::Approx(50.0));
    for (std::size_t t = 1; t < p.background.size(); ++t)
        CHECK(p.background[t] <= p.background[t - 1] + 1e-12);
}

TEST_CASE("short stays trip the duration detector and refit the model")
{
    auto cfg = default_scenario();
    cfg.duration_window = 50;
    auto kb = truthful_knowledge(cfg);
    const auto before = kb.durations;
    std::vector<Event> events;
    for (int s = 0; s < 10; ++s) {
        for (int i = 0; i < 10; ++i) {
            const std::string tag = "v" + std::to_string(s) + "_" + std::to_string(i);
            events.push_back(entry(s * 900.0 + 1.0 + i, s, tag));
            events.push_back(exit_ev((s + 2) * 900.0 + 1.0 + i, s + 2, tag));
        }
    }
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.ts < b.ts; });
    const auto ticks = replay_day(kb, events);
    const bool flagged = std::any_of(ticks.begin(), ticks.end(),
                                     [](const TickResult& r) { return r.verdict == DriftVerdict::duration_drift; });
    CHECK(flagged);
    CHECK(kb.version >= 1);
    CHECK(kb.durations.row_mean(0) < before.row_mean(0));
    std::int64_t prev = 0;
    for (const auto& r : ticks) {
        CHECK(r.snapshot.version >= prev);
        prev = r.snapshot.version;
    }
}

TEST_CASE("replaying a simulated day reproduces the knowledge base")
{
    auto cfg = default_scenario();
    auto live = truthful_knowledge(cfg);
    const auto day = run_day(cfg, live);

    auto a = truthful_knowledge(cfg);
    auto b = truthful_knowledge(cfg);
    const auto ticks_a = replay_day(a, day.events);
    const auto ticks_b = replay_day(b, day.events);
    CHECK(ticks_a.size() == 44);
    CHECK(serialize(a) == serialize(b));
    CHECK(serialize(a) == serialize(live));

    const auto text = serialize(a);
    int tags_checked = 0;
    for (const auto& ev : day.events) {
        if (ev.kind != EventKind::entry || tags_checked > 200)
            continue;
        CHECK(text.find(ev.anon_tag) == std::string::npos);
        ++tags_checked;
    }
    CHECK(tags_checked > 0);
}
