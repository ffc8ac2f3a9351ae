#include "slotflow/error.hpp"
#include "slotflow/events.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace slotflow;

namespace {

std::string message_of(std::string_view line)
{
    try {
        (void)parse_event(line);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::parse_error);
        return e.what();
    }
    FAIL("line accepted: " << line);
    return {};
}

}  // namespace

TEST_CASE("event kinds round-trip through their names")
{
    for (auto k : {EventKind::booking, EventKind::show, EventKind::noshow, EventKind::entry, EventKind::exit,
                   EventKind::count_update})
        CHECK(parse_event_kind(to_string(k)) == k);
    CHECK_FALSE(parse_event_kind("arrival").has_value());
}

TEST_CASE("documented line format")
{
    const Event ev{12.345, EventKind::entry, 3, 1, 0, "p00001a"};
    CHECK(format_event(ev) ==
          R"({"ts":12.345,"kind":"entry","slot":3,"group_size":1,"gap_slots":0,"anon_tag":"p00001a"})");
    CHECK(parse_event(format_event(ev)) == ev);
}

TEST_CASE("random events survive a log round-trip")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dt(0.0, 30.0);
    std::uniform_int_distribution<int> kind(0, 5);
    std::vector<Event> events;
    double ts = 0.0;
    for (int i = 0; i < 500; ++i) {
        ts = to_log_time(ts + dt(rng));
        Event ev;
        ev.ts = ts;
        ev.kind = static_cast<EventKind>(kind(rng));
        ev.slot = i % 44;
        ev.group_size = ev.kind == EventKind::count_update ? i % 7 : 1 + i % 5;
        ev.gap_slots = ev.kind == EventKind::booking || ev.kind == EventKind::show ? i % 13 : 0;
        if (ev.kind == EventKind::entry || ev.kind == EventKind::exit)
            ev.anon_tag = "p" + std::to_string(i);
        events.push_back(ev);
    }
    std::stringstream buf;
    write_event_log(buf, events);
    CHECK(read_event_log(buf) == events);
}

TEST_CASE("parse errors name the offending field")
{
    CHECK(message_of("not json").find("malformed") != std::string::npos);
    CHECK(message_of("[1,2]").find("object") != std::string::npos);
    CHECK(message_of(R"({"kind":"entry","slot":3,"group_size":1,"gap_slots":0,"anon_tag":""})").find("'ts'") !=
          std::string::npos);
    CHECK(message_of(R"({"ts":1,"kind":"walk","slot":3,"group_size":1,"gap_slots":0,"anon_tag":""})")
              .find("walk") != std::string::npos);
    CHECK(message_of(R"({"ts":1,"kind":"entry","slot":-1,"group_size":1,"gap_slots":0,"anon_tag":""})")
              .find("'slot'") != std::string::npos);
    CHECK(message_of(R"({"ts":1,"kind":"entry","slot":1.5,"group_size":1,"gap_slots":0,"anon_tag":""})")
              .find("'slot'") != std::string::npos);
    CHECK(message_of(R"({"ts":1,"kind":"entry","slot":1,"group_size":0,"gap_slots":0,"anon_tag":""})")
              .find("'group_size'") != std::string::npos);
    CHECK(message_of(R"({"ts":1,"kind":"show","slot":1,"group_size":1,"gap_slots":0,"anon_tag":"x"})")
              .find("'anon_tag'") != std::string::npos);
    CHECK(message_of(R"({"ts":-2,"kind":"show","slot":1,"group_size":1,"gap_slots":0,"anon_tag":""})")
              .find("'ts'") != std::string::npos);
}

TEST_CASE("count updates may report zero persons")
{
    const auto ev =
        parse_event(R"({"ts":900,"kind":"count_update","slot":0,"group_size":0,"gap_slots":0,"anon_tag":""})");
    CHECK(ev.group_size == 0);
}

TEST_CASE("log reader reports line numbers")
{
    std::stringstream bad;
    bad << format_event({1.0, EventKind::booking, 2, 1, 2, ""}) << '\n'
        << '\n'
        << "{oops\n";
    try {
        (void)read_event_log(bad);
        FAIL("accepted");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }

    std::stringstream unordered;
    unordered << format_event({5.0, EventKind::booking, 2, 1, 2, ""}) << '\n'
              << format_event({4.0, EventKind::booking, 2, 1, 2, ""}) << '\n';
    try {
        (void)read_event_log(unordered);
        FAIL("accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::out_of_order_event);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("log time has millisecond resolution")
{
    CHECK(to_log_time(1.23449) == doctest::Approx(1.234));
    CHECK(to_log_time(1.2345001) == doctest::Approx(1.235));
    CHECK(to_log_time(0.0) == 0.0);
    const Event ev{1.0004, EventKind::booking, 0, 1, 0, ""};
    CHECK(parse_event(format_event(ev)).ts == doctest::Approx(1.0));
}
