#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace slotflow {

enum class EventKind { booking, show, noshow, entry, exit, count_update };

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view text);

/// One identity-free behavior observation.
///
/// Field use by kind:
///  - booking: slot = visit slot, gap_slots = visit slot - booking slot
///  - show / noshow: slot = visit slot, gap_slots = the ticket's booking gap
///  - entry / exit: slot = entry or exit slot, anon_tag pairs the two
///  - count_update: slot = counted slot, group_size = persons counted (may be 0)
/// anon_tag is empty for every kind except entry and exit.
struct Event {
    double ts = 0.0;  // seconds since opening, millisecond resolution
    EventKind kind = EventKind::booking;
    int slot = 0;
    int group_size = 1;
    int gap_slots = 0;
    std::string anon_tag;

    bool operator==(const Event&) const = default;
};

/// Rounds to the millisecond grid the log format stores.
double to_log_time(double seconds);

/// One JSON object per line, fixed field order:
/// {"ts":12.345,"kind":"entry","slot":3,"group_size":1,"gap_slots":0,"anon_tag":"p00001a"}
std::string format_event(const Event& ev);
/// Throws Error(parse_error) naming the offending field.
Event parse_event(std::string_view line);

void write_event_log(std::ostream& out, const std::vector<Event>& events);
/// Reads a log, rejecting malformed lines and decreasing timestamps with the
/// 1-based line number in the message.
std::vector<Event> read_event_log(std::istream& in);

}  // namespace slotflow
