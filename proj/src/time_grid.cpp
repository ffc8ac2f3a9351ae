#include "slotflow/time_grid.hpp"

#include "slotflow/error.hpp"

#include <algorithm>
#include <cmath>

namespace slotflow {

void SlotGrid::validate() const
{
    if (slot_length_minutes <= 0)
        throw Error(ErrorCode::invalid_argument, "slot_length_minutes must be positive");
    if (num_slots <= 0)
        throw Error(ErrorCode::invalid_argument, "num_slots must be positive");
}

std::optional<int> slot_of(const SlotGrid& grid, int wall_minute)
{
    if (wall_minute < grid.opening_minute || wall_minute >= grid.closing_minute())
        return std::nullopt;
    return (wall_minute - grid.opening_minute) / grid.slot_length_minutes;
}

std::optional<int> slot_of_seconds(const SlotGrid& grid, double seconds_since_open)
{
    if (seconds_since_open < 0.0 || seconds_since_open >= grid.day_seconds())
        return std::nullopt;
    int slot = static_cast<int>(std::floor(seconds_since_open / grid.slot_seconds()));
    return std::min(slot, grid.num_slots - 1);
}

namespace {

constexpr std::array<std::string_view, kNumSlotClasses> kClassNames = {
    "early_morning", "late_morning", "afternoon", "evening"};

}  // namespace

std::string_view to_string(SlotClassLabel label)
{
    return kClassNames[static_cast<int>(label)];
}

std::optional<SlotClassLabel> parse_slot_class(std::string_view text)
{
    for (int i = 0; i < kNumSlotClasses; ++i)
        if (kClassNames[i] == text)
            return static_cast<SlotClassLabel>(i);
    return std::nullopt;
}

SlotClassMap::SlotClassMap(const SlotGrid& grid, std::vector<SlotClass> classes)
    : classes_(std::move(classes)), lookup_(grid.num_slots)
{
    grid.validate();
    std::vector<int> cover(grid.num_slots, 0);
    for (const auto& c : classes_) {
        if (c.begin < 0 || c.end > grid.num_slots || c.begin > c.end)
            throw Error(ErrorCode::unpartitioned_slot,
                        "class " + std::string(to_string(c.label)) + " range outside grid");
        for (int s = c.begin; s < c.end; ++s) {
            ++cover[s];
            lookup_[s] = c.label;
        }
    }
    for (int s = 0; s < grid.num_slots; ++s) {
        if (cover[s] != 1)
            throw Error(ErrorCode::unpartitioned_slot,
                        "slot " + std::to_string(s) + (cover[s] == 0 ? " not covered" : " covered twice"));
    }
}

SlotClassMap SlotClassMap::defaults(const SlotGrid& grid)
{
    grid.validate();
    auto boundary = [&](int wall_minute) {
        double rel = double(wall_minute - grid.opening_minute) / grid.slot_length_minutes;
        return std::clamp(static_cast<int>(std::ceil(rel)), 0, grid.num_slots);
    };
    const int b1 = boundary(10 * 60 + 30);
    const int b2 = std::max(b1, boundary(13 * 60));
    const int b3 = std::max(b2, boundary(16 * 60));
    return SlotClassMap(grid, {{SlotClassLabel::early_morning, 0, b1},
                               {SlotClassLabel::late_morning, b1, b2},
                               {SlotClassLabel::afternoon, b2, b3},
                               {SlotClassLabel::evening, b3, grid.num_slots}});
}

SlotClassLabel SlotClassMap::label_of(int slot) const
{
    if (slot < 0 || slot >= num_slots())
        throw Error(ErrorCode::unpartitioned_slot, "slot " + std::to_string(slot) + " outside grid");
    return lookup_[slot];
}

SlotClass SlotClassMap::range_of(SlotClassLabel label) const
{
    SlotClass out{label, 0, 0};
    bool first = true;
    for (const auto& c : classes_) {
        if (c.label != label || c.begin == c.end)
            continue;
        if (first) {
            out.begin = c.begin;
            out.end = c.end;
            first = false;
        } else {
            out.begin = std::min(out.begin, c.begin);
            out.end = std::max(out.end, c.end);
        }
    }
    return out;
}

SlotClassLabel class_of(const std::vector<SlotClass>& classes, int slot)
{
    const SlotClass* hit = nullptr;
    for (const auto& c : classes) {
        if (!c.contains(slot))
            continue;
        if (hit)
            throw Error(ErrorCode::unpartitioned_slot, "slot " + std::to_string(slot) + " covered twice");
        hit = &c;
    }
    if (!hit)
        throw Error(ErrorCode::unpartitioned_slot, "slot " + std::to_string(slot) + " not covered");
    return hit->label;
}

void DayContext::validate() const
{
    if (!(demand_multiplier >= 0.0))
        throw Error(ErrorCode::invariant_violation, "demand_multiplier must be >= 0");
    for (const auto& ev : special_events)
        if (ev.begin > ev.end)
            throw Error(ErrorCode::invariant_violation, "special event '" + ev.label + "' has begin > end");
}

}  // namespace slotflow
