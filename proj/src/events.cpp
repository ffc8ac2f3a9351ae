#include "slotflow/events.hpp"

#include "slotflow/error.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

namespace slotflow {

namespace {

constexpr std::array<std::string_view, 6> kKindNames = {"booking", "show", "noshow", "entry", "exit", "count_update"};

std::string json_escape(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", c);
                out += buf;
            } else {
                out += c;
            }
        }
    }
    return out;
}

}  // namespace

std::string_view to_string(EventKind kind)
{
    return kKindNames[static_cast<int>(kind)];
}

std::optional<EventKind> parse_event_kind(std::string_view text)
{
    for (std::size_t i = 0; i < kKindNames.size(); ++i)
        if (kKindNames[i] == text)
            return static_cast<EventKind>(i);
    return std::nullopt;
}

double to_log_time(double seconds)
{
    return std::round(seconds * 1000.0) / 1000.0;
}

std::string format_event(const Event& ev)
{
    char ts[64];
    std::snprintf(ts, sizeof ts, "%.3f", ev.ts);
    std::string out = "{\"ts\":";
    out += ts;
    out += ",\"kind\":\"";
    out += to_string(ev.kind);
    out += "\",\"slot\":" + std::to_string(ev.slot);
    out += ",\"group_size\":" + std::to_string(ev.group_size);
    out += ",\"gap_slots\":" + std::to_string(ev.gap_slots);
    out += ",\"anon_tag\":\"" + json_escape(ev.anon_tag) + "\"}";
    return out;
}

Event parse_event(std::string_view line)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::parse_error, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object())
        throw Error(ErrorCode::parse_error, "event must be a JSON object");

    auto need = [&](const char* field) -> const nlohmann::json& {
        auto it = j.find(field);
        if (it == j.end())
            throw Error(ErrorCode::parse_error, std::string("missing field '") + field + "'");
        return *it;
    };
    auto need_int = [&](const char* field) {
        const auto& v = need(field);
        if (!v.is_number_integer())
            throw Error(ErrorCode::parse_error, std::string("field '") + field + "' must be an integer");
        return v.get<int>();
    };

    Event ev;
    const auto& ts = need("ts");
    if (!ts.is_number() || !std::isfinite(ts.get<double>()) || ts.get<double>() < 0.0)
        throw Error(ErrorCode::parse_error, "field 'ts' must be a nonnegative number");
    ev.ts = to_log_time(ts.get<double>());

    const auto& kind = need("kind");
    if (!kind.is_string())
        throw Error(ErrorCode::parse_error, "field 'kind' must be a string");
    auto k = parse_event_kind(kind.get<std::string>());
    if (!k)
        throw Error(ErrorCode::parse_error, "unknown event kind '" + kind.get<std::string>() + "'");
    ev.kind = *k;

    ev.slot = need_int("slot");
    ev.group_size = need_int("group_size");
    ev.gap_slots = need_int("gap_slots");
    const auto& tag = need("anon_tag");
    if (!tag.is_string())
        throw Error(ErrorCode::parse_error, "field 'anon_tag' must be a string");
    ev.anon_tag = tag.get<std::string>();

    if (ev.slot < 0)
        throw Error(ErrorCode::parse_error, "field 'slot' must be >= 0");
    if (ev.gap_slots < 0)
        throw Error(ErrorCode::parse_error, "field 'gap_slots' must be >= 0");
    if (ev.kind == EventKind::count_update ? ev.group_size < 0 : ev.group_size < 1)
        throw Error(ErrorCode::parse_error, "field 'group_size' out of range");
    const bool tagged = ev.kind == EventKind::entry || ev.kind == EventKind::exit;
    if (!tagged && !ev.anon_tag.empty())
        throw Error(ErrorCode::parse_error, "field 'anon_tag' is only allowed on entry/exit events");
    return ev;
}

void write_event_log(std::ostream& out, const std::vector<Event>& events)
{
    for (const auto& ev : events)
        out << format_event(ev) << '\n';
}

std::vector<Event> read_event_log(std::istream& in)
{
    std::vector<Event> events;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        Event ev;
        try {
            ev = parse_event(line);
        } catch (const Error& e) {
            throw Error(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!events.empty() && ev.ts < events.back().ts)
            throw Error(ErrorCode::out_of_order_event,
                        "line " + std::to_string(line_no) + ": timestamp decreases");
        events.push_back(std::move(ev));
    }
    return events;
}

}  // namespace slotflow
