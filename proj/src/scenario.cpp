#include "slotflow/scenario.hpp"

#include "slotflow/error.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace slotflow {

using ojson = nlohmann::ordered_json;

void ScenarioConfig::validate() const
{
    auto fail = [](const std::string& what) { throw Error(ErrorCode::invariant_violation, what); };
    if (grid.slot_length_minutes <= 0)
        fail("grid.slot_length_minutes must be > 0");
    if (grid.num_slots <= 0)
        fail("grid.num_slots must be > 0");
    class_map();
    if (!(context.demand_multiplier >= 0.0))
        fail("context.demand_multiplier must be >= 0");
    context.validate();
    if (static_cast<int>(arrivals_per_slot.size()) != grid.num_slots)
        fail("arrivals.persons_per_slot must have grid.num_slots entries");
    for (double a : arrivals_per_slot)
        if (!(a >= 0.0))
            fail("arrivals.persons_per_slot entries must be >= 0");
    if (!(group_fraction >= 0.0 && group_fraction <= 1.0))
        fail("groups.fraction must be in [0, 1]");
    if (group_min < 6)
        fail("groups.min_size must be >= 6");
    if (group_max < group_min)
        fail("groups.max_size must be >= groups.min_size");
    if (!(group_dwell_multiplier > 0.0))
        fail("groups.dwell_multiplier must be > 0");
    if (d_max < 1)
        fail("durations.d_max must be >= 1");
    for (int c = 0; c < kNumSlotClasses; ++c) {
        const std::string name(to_string(static_cast<SlotClassLabel>(c)));
        if (!(dwell[c].mean_minutes > 0.0))
            fail("durations." + name + ".mean_minutes must be > 0");
        if (!(dwell[c].sd_minutes >= 0.0))
            fail("durations." + name + ".sd_minutes must be >= 0");
    }
    try {
        noshow_truth.validate();
    } catch (const Error& e) {
        fail(std::string("noshow: ") + e.what());
    }
    for (double o : noshow_truth.class_offsets)
        if (!(o >= -1.0 && o <= 1.0))
            fail("noshow.class_offsets must be in [-1, 1]");
    if (!(occupancy_cap >= 0.0))
        fail("capacity.occupancy_cap (C_max) must be >= 0");
    if (!(entry_cap >= 0.0))
        fail("capacity.entry_cap (E_max) must be >= 0");
    if (issuance_cap < 0)
        fail("capacity.issuance_cap (U) must be >= 0");
    if (fleet.num_kiosks < 1)
        fail("kiosks.count must be >= 1");
    if (!(fleet.service_seconds > 0.0))
        fail("kiosks.service_seconds must be > 0");
    if (!(safety_margin >= 0.0 && safety_margin <= 1.0))
        fail("policy.safety_margin must be in [0, 1]");
    if (lead_window_slots < 0)
        fail("policy.lead_window_slots must be >= 0");
    if (duration_window < 1 || noshow_window < 1)
        fail("adaptation windows must be >= 1");
    if (!(duration_threshold > 0.0) || !(noshow_threshold > 0.0) || !(drift_z >= 0.0))
        fail("adaptation thresholds must be positive");
    if (min_row_samples < 0)
        fail("adaptation.min_row_samples must be >= 0");
    if (!(drift_multiplier > 0.0))
        fail("drift.duration_multiplier must be > 0");
}

SlotClassMap ScenarioConfig::class_map() const
{
    return classes.empty() ? SlotClassMap::defaults(grid) : SlotClassMap(grid, classes);
}

LoopConfig ScenarioConfig::loop_config() const
{
    LoopConfig c;
    c.grid = grid;
    c.classes = classes;
    c.occupancy_cap = occupancy_cap;
    c.entry_cap = entry_cap;
    c.issuance_cap = issuance_cap;
    c.overbooking = overbooking;
    c.safety_margin = safety_margin;
    c.release = release;
    c.lead_window_slots = lead_window_slots;
    c.d_max = d_max;
    c.min_row_samples = min_row_samples;
    c.bucket_edges = noshow_truth.bucket_edges;
    c.duration_window = duration_window;
    c.duration_threshold = duration_threshold;
    c.noshow_window = noshow_window;
    c.noshow_threshold = noshow_threshold;
    c.drift_z = drift_z;
    return c;
}

std::array<std::vector<double>, kNumSlotClasses> ScenarioConfig::dwell_pmfs() const
{
    std::array<std::vector<double>, kNumSlotClasses> out;
    const double len = grid.slot_length_minutes;
    for (int c = 0; c < kNumSlotClasses; ++c)
        out[c] = discretized_normal_pmf(dwell[c].mean_minutes / len, dwell[c].sd_minutes / len, d_max);
    return out;
}

DurationMatrix ScenarioConfig::truth_durations() const
{
    return DurationMatrix::from_class_pmfs(class_map(), dwell_pmfs());
}

NoShowModel ScenarioConfig::truth_noshow() const
{
    NoShowModel m = noshow_truth;
    m.counts.assign(m.bucket_edges.size(), 0);
    return m;
}

std::vector<double> two_peak_profile(const SlotGrid& grid, double peak_persons)
{
    // Peaks at 10:30 and 14:30 wall time; the afternoon peak is 80 % of the morning one.
    std::vector<double> out(grid.num_slots);
    for (int s = 0; s < grid.num_slots; ++s) {
        const double minute = grid.wall_minute_of(s) + grid.slot_length_minutes / 2.0;
        const double m1 = (minute - 630.0) / 75.0;
        const double m2 = (minute - 870.0) / 90.0;
        const double shape = std::exp(-0.5 * m1 * m1) + 0.8 * std::exp(-0.5 * m2 * m2) + 0.25;
        out[s] = std::round(peak_persons * shape / 1.25 * 10.0) / 10.0;
    }
    return out;
}

ScenarioConfig default_scenario()
{
    ScenarioConfig c;
    c.name = "uffizi_free_day";
    c.context.date = "2019-03-05";
    c.context.free_day = true;
    c.context.demand_multiplier = 1.0;
    c.arrivals_per_slot = two_peak_profile(c.grid, 395.0);
    c.dwell = {DwellTruth{160.0, 20.0}, DwellTruth{135.0, 20.0}, DwellTruth{110.0, 20.0}, DwellTruth{83.0, 20.0}};
    c.noshow_truth.bucket_edges = {0, 5, 13, 25};
    c.noshow_truth.rates = {0.115, 0.19, 0.28, 0.37};
    c.noshow_truth.counts = {0, 0, 0, 0};
    c.occupancy_cap = 1200.0;
    c.entry_cap = 268.0;
    return c;
}

namespace {

std::string path_join(const std::string& a, const char* b)
{
    return a.empty() ? std::string(b) : a + "." + b;
}

// Typed field readers that name the offending path on error.
class Reader {
public:
    Reader(const ojson& node, std::string path) : node_(node), path_(std::move(path)) {}

    bool has(const char* key) const { return node_.contains(key); }

    Reader child(const char* key) const
    {
        const auto& v = node_.at(key);
        if (!v.is_object())
            bad(key, "an object");
        return Reader(v, path_join(path_, key));
    }

    template <class T>
    void read(const char* key, T& out) const
    {
        if (!node_.contains(key))
            return;
        const auto& v = node_.at(key);
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean())
                bad(key, "a boolean");
            out = v.get<bool>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer())
                bad(key, "an integer");
            out = v.get<T>();
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number())
                bad(key, "a number");
            out = v.get<T>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string())
                bad(key, "a string");
            out = v.get<std::string>();
        } else {
            if (!v.is_array())
                bad(key, "an array");
            out.clear();
            for (const auto& e : v) {
                using E = typename T::value_type;
                if constexpr (std::is_integral_v<E>) {
                    if (!e.is_number_integer())
                        bad(key, "an array of integers");
                } else {
                    if (!e.is_number())
                        bad(key, "an array of numbers");
                }
                out.push_back(e.get<E>());
            }
        }
    }

    const ojson& node() const { return node_; }
    const std::string& path() const { return path_; }

    [[noreturn]] void bad(const char* key, const char* expected) const
    {
        throw Error(ErrorCode::parse_error, "field '" + path_join(path_, key) + "' must be " + expected);
    }

private:
    const ojson& node_;
    std::string path_;
};

int line_of_offset(const std::string& text, std::size_t offset)
{
    int line = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i)
        if (text[i] == '\n')
            ++line;
    return line;
}

}  // namespace

ScenarioConfig scenario_from_json(const std::string& text)
{
    ojson root;
    try {
        root = ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::parse_error,
                    "line " + std::to_string(line_of_offset(text, e.byte)) + ": malformed JSON (" + e.what() + ")");
    }
    if (!root.is_object())
        throw Error(ErrorCode::parse_error, "scenario must be a JSON object");

    ScenarioConfig c = default_scenario();
    Reader r(root, "");
    r.read("name", c.name);
    r.read("seed", c.seed);

    if (r.has("grid")) {
        auto g = r.child("grid");
        g.read("slot_length_minutes", c.grid.slot_length_minutes);
        g.read("num_slots", c.grid.num_slots);
        g.read("opening_minute", c.grid.opening_minute);
    }
    if (r.has("classes")) {
        const auto& arr = root.at("classes");
        if (!arr.is_array())
            r.bad("classes", "an array");
        c.classes.clear();
        for (const auto& e : arr) {
            if (!e.is_object())
                r.bad("classes", "an array of objects");
            Reader cr(e, "classes[]");
            std::string label;
            SlotClass sc{SlotClassLabel::early_morning, 0, 0};
            cr.read("label", label);
            auto parsed = parse_slot_class(label);
            if (!parsed)
                throw Error(ErrorCode::parse_error, "field 'classes[].label' has unknown class '" + label + "'");
            sc.label = *parsed;
            cr.read("begin", sc.begin);
            cr.read("end", sc.end);
            c.classes.push_back(sc);
        }
    }
    if (r.has("context")) {
        auto x = r.child("context");
        x.read("date", c.context.date);
        x.read("free_day", c.context.free_day);
        x.read("demand_multiplier", c.context.demand_multiplier);
        if (x.has("special_events")) {
            const auto& arr = x.node().at("special_events");
            if (!arr.is_array())
                x.bad("special_events", "an array");
            c.context.special_events.clear();
            for (const auto& e : arr) {
                Reader er(e, "context.special_events[]");
                SpecialEvent ev;
                er.read("label", ev.label);
                er.read("begin", ev.begin);
                er.read("end", ev.end);
                c.context.special_events.push_back(ev);
            }
        }
    }
    if (r.has("arrivals"))
        r.child("arrivals").read("persons_per_slot", c.arrivals_per_slot);
    if (r.has("groups")) {
        auto g = r.child("groups");
        g.read("fraction", c.group_fraction);
        g.read("min_size", c.group_min);
        g.read("max_size", c.group_max);
        g.read("dwell_multiplier", c.group_dwell_multiplier);
    }
    if (r.has("durations")) {
        auto d = r.child("durations");
        d.read("d_max", c.d_max);
        if (d.has("classes")) {
            auto cls = d.child("classes");
            for (int k = 0; k < kNumSlotClasses; ++k) {
                const std::string name(to_string(static_cast<SlotClassLabel>(k)));
                if (!cls.has(name.c_str()))
                    continue;
                auto one = cls.child(name.c_str());
                one.read("mean_minutes", c.dwell[k].mean_minutes);
                one.read("sd_minutes", c.dwell[k].sd_minutes);
            }
        }
    }
    if (r.has("noshow")) {
        auto n = r.child("noshow");
        n.read("bucket_edges", c.noshow_truth.bucket_edges);
        n.read("rates", c.noshow_truth.rates);
        c.noshow_truth.counts.assign(c.noshow_truth.bucket_edges.size(), 0);
        if (n.has("class_offsets")) {
            auto o = n.child("class_offsets");
            for (int k = 0; k < kNumSlotClasses; ++k) {
                const std::string name(to_string(static_cast<SlotClassLabel>(k)));
                o.read(name.c_str(), c.noshow_truth.class_offsets[k]);
            }
        }
    }
    if (r.has("capacity")) {
        auto k = r.child("capacity");
        k.read("occupancy_cap", c.occupancy_cap);
        k.read("entry_cap", c.entry_cap);
        k.read("issuance_cap", c.issuance_cap);
    }
    if (r.has("kiosks")) {
        auto k = r.child("kiosks");
        k.read("count", c.fleet.num_kiosks);
        k.read("service_seconds", c.fleet.service_seconds);
    }
    if (r.has("policy")) {
        auto p = r.child("policy");
        p.read("overbooking", c.overbooking);
        p.read("safety_margin", c.safety_margin);
        std::string release(to_string(c.release));
        p.read("release", release);
        auto parsed = parse_release_policy(release);
        if (!parsed)
            throw Error(ErrorCode::parse_error, "field 'policy.release' has unknown policy '" + release + "'");
        c.release = *parsed;
        p.read("lead_window_slots", c.lead_window_slots);
    }
    if (r.has("adaptation")) {
        auto a = r.child("adaptation");
        a.read("duration_window", c.duration_window);
        a.read("duration_threshold", c.duration_threshold);
        a.read("noshow_window", c.noshow_window);
        a.read("noshow_threshold", c.noshow_threshold);
        a.read("drift_z", c.drift_z);
        a.read("min_row_samples", c.min_row_samples);
    }
    if (r.has("drift")) {
        auto d = r.child("drift");
        d.read("start_slot", c.drift_start_slot);
        d.read("duration_multiplier", c.drift_multiplier);
    }
    c.validate();
    return c;
}

std::string scenario_to_json(const ScenarioConfig& c)
{
    ojson j;
    j["name"] = c.name;
    j["seed"] = c.seed;
    j["grid"] = {{"slot_length_minutes", c.grid.slot_length_minutes},
                 {"num_slots", c.grid.num_slots},
                 {"opening_minute", c.grid.opening_minute}};
    if (!c.classes.empty()) {
        j["classes"] = ojson::array();
        for (const auto& k : c.classes)
            j["classes"].push_back({{"label", std::string(to_string(k.label))}, {"begin", k.begin}, {"end", k.end}});
    }
    ojson events = ojson::array();
    for (const auto& e : c.context.special_events)
        events.push_back({{"label", e.label}, {"begin", e.begin}, {"end", e.end}});
    j["context"] = {{"date", c.context.date},
                    {"free_day", c.context.free_day},
                    {"demand_multiplier", c.context.demand_multiplier},
                    {"special_events", events}};
    j["arrivals"] = {{"persons_per_slot", c.arrivals_per_slot}};
    j["groups"] = {{"fraction", c.group_fraction},
                   {"min_size", c.group_min},
                   {"max_size", c.group_max},
                   {"dwell_multiplier", c.group_dwell_multiplier}};
    ojson dw;
    for (int k = 0; k < kNumSlotClasses; ++k)
        dw[std::string(to_string(static_cast<SlotClassLabel>(k)))] = {{"mean_minutes", c.dwell[k].mean_minutes},
                                                                      {"sd_minutes", c.dwell[k].sd_minutes}};
    j["durations"] = {{"d_max", c.d_max}, {"classes", dw}};
    ojson offsets;
    for (int k = 0; k < kNumSlotClasses; ++k)
        offsets[std::string(to_string(static_cast<SlotClassLabel>(k)))] = c.noshow_truth.class_offsets[k];
    j["noshow"] = {{"bucket_edges", c.noshow_truth.bucket_edges},
                   {"rates", c.noshow_truth.rates},
                   {"class_offsets", offsets}};
    j["capacity"] = {{"occupancy_cap", c.occupancy_cap}, {"entry_cap", c.entry_cap}, {"issuance_cap", c.issuance_cap}};
    j["kiosks"] = {{"count", c.fleet.num_kiosks}, {"service_seconds", c.fleet.service_seconds}};
    j["policy"] = {{"overbooking", c.overbooking},
                   {"safety_margin", c.safety_margin},
                   {"release", std::string(to_string(c.release))},
                   {"lead_window_slots", c.lead_window_slots}};
    j["adaptation"] = {{"duration_window", c.duration_window},
                       {"duration_threshold", c.duration_threshold},
                       {"noshow_window", c.noshow_window},
                       {"noshow_threshold", c.noshow_threshold},
                       {"drift_z", c.drift_z},
                       {"min_row_samples", c.min_row_samples}};
    j["drift"] = {{"start_slot", c.drift_start_slot}, {"duration_multiplier", c.drift_multiplier}};
    return j.dump(2) + "\n";
}

ScenarioConfig load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::io_error, "cannot open scenario file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return scenario_from_json(buf.str());
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

std::string scenario_hash(const ScenarioConfig& config)
{
    const std::string text = scenario_to_json(config);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace slotflow
