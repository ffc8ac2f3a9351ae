#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace slotflow {

/// Discretized operating day. Slot s covers wall minutes
/// [opening + s*len, opening + (s+1)*len).
struct SlotGrid {
    int slot_length_minutes = 15;
    int num_slots = 44;
    int opening_minute = 8 * 60;

    /// Throws Error(invalid_argument) unless length and count are positive.
    void validate() const;

    int closing_minute() const { return opening_minute + num_slots * slot_length_minutes; }
    int wall_minute_of(int slot) const { return opening_minute + slot * slot_length_minutes; }
    double slot_seconds() const { return slot_length_minutes * 60.0; }
    double day_seconds() const { return num_slots * slot_seconds(); }

    bool contains(int slot) const { return slot >= 0 && slot < num_slots; }

    bool operator==(const SlotGrid&) const = default;
};

/// Slot index for a wall-clock minute, or nullopt outside operating hours.
std::optional<int> slot_of(const SlotGrid& grid, int wall_minute);

/// Slot index for seconds since opening; clamps nothing, returns nullopt past closing.
std::optional<int> slot_of_seconds(const SlotGrid& grid, double seconds_since_open);

enum class SlotClassLabel { early_morning = 0, late_morning = 1, afternoon = 2, evening = 3 };

inline constexpr int kNumSlotClasses = 4;

std::string_view to_string(SlotClassLabel label);
std::optional<SlotClassLabel> parse_slot_class(std::string_view text);

struct SlotClass {
    SlotClassLabel label;
    int begin = 0;  // inclusive slot index
    int end = 0;    // exclusive slot index

    bool contains(int slot) const { return slot >= begin && slot < end; }
    bool operator==(const SlotClass&) const = default;
};

/// A validated partition of a grid's slots into classes.
class SlotClassMap {
public:
    /// Throws Error(unpartitioned_slot) when ranges overlap or leave gaps.
    SlotClassMap(const SlotGrid& grid, std::vector<SlotClass> classes);

    /// Default boundaries at 10:30, 13:00 and 16:00 wall time, clamped to the grid.
    static SlotClassMap defaults(const SlotGrid& grid);

    const std::vector<SlotClass>& classes() const { return classes_; }
    int num_slots() const { return static_cast<int>(lookup_.size()); }

    SlotClassLabel label_of(int slot) const;
    /// Slot range for a label; empty range if the label has no slots on this grid.
    SlotClass range_of(SlotClassLabel label) const;

private:
    std::vector<SlotClass> classes_;
    std::vector<SlotClassLabel> lookup_;
};

/// The class whose range contains `slot`. Throws Error(unpartitioned_slot)
/// when no class covers it.
SlotClassLabel class_of(const std::vector<SlotClass>& classes, int slot);

struct SpecialEvent {
    std::string label;
    int begin = 0;
    int end = 0;
    bool operator==(const SpecialEvent&) const = default;
};

struct DayContext {
    std::string date = "2019-03-05";
    bool free_day = false;
    double demand_multiplier = 1.0;
    std::vector<SpecialEvent> special_events;

    void validate() const;
    bool operator==(const DayContext&) const = default;
};

}  // namespace slotflow
