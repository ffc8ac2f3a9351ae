#include "slotflow/mapek.hpp"

#include "slotflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>

namespace slotflow {

std::string_view to_string(ReleasePolicy policy)
{
    return policy == ReleasePolicy::all_at_open ? "all_at_open" : "spread_over_day";
}

std::optional<ReleasePolicy> parse_release_policy(std::string_view text)
{
    if (text == "all_at_open")
        return ReleasePolicy::all_at_open;
    if (text == "spread_over_day")
        return ReleasePolicy::spread_over_day;
    return std::nullopt;
}

std::string_view to_string(DriftVerdict verdict)
{
    switch (verdict) {
    case DriftVerdict::none: return "none";
    case DriftVerdict::duration_drift: return "duration_drift";
    case DriftVerdict::noshow_drift: return "noshow_drift";
    }
    return "none";
}

SlotClassMap LoopConfig::class_map() const
{
    return classes.empty() ? SlotClassMap::defaults(grid) : SlotClassMap(grid, classes);
}

void LoopConfig::validate() const
{
    grid.validate();
    class_map();
    if (!(occupancy_cap >= 0.0))
        throw Error(ErrorCode::invariant_violation, "occupancy_cap (C_max) must be >= 0");
    if (!(entry_cap >= 0.0))
        throw Error(ErrorCode::invariant_violation, "entry_cap (E_max) must be >= 0");
    if (issuance_cap < 0)
        throw Error(ErrorCode::invariant_violation, "issuance_cap must be >= 0");
    if (!(safety_margin >= 0.0 && safety_margin <= 1.0))
        throw Error(ErrorCode::invariant_violation, "safety_margin must be in [0, 1]");
    if (lead_window_slots < 0)
        throw Error(ErrorCode::invariant_violation, "lead_window_slots must be >= 0");
    if (d_max < 1)
        throw Error(ErrorCode::invariant_violation, "d_max must be >= 1");
    if (min_row_samples < 0)
        throw Error(ErrorCode::invariant_violation, "min_row_samples must be >= 0");
    if (duration_window < 1 || noshow_window < 1)
        throw Error(ErrorCode::invariant_violation, "drift windows must be >= 1");
    if (!(duration_threshold > 0.0 && noshow_threshold > 0.0 && drift_z >= 0.0))
        throw Error(ErrorCode::invariant_violation, "drift thresholds must be positive");
    NoShowModel probe;
    probe.bucket_edges = bucket_edges;
    probe.rates.assign(bucket_edges.size(), 0.0);
    probe.counts.assign(bucket_edges.size(), 0);
    probe.validate();
}

KnowledgeBase::KnowledgeBase(LoopConfig cfg, DurationMatrix dur, NoShowModel ns)
    : config(std::move(cfg)), classes(config.class_map()), durations(std::move(dur)), noshow(std::move(ns))
{
    config.validate();
    noshow.validate();
    if (durations.num_slots() != config.grid.num_slots)
        throw Error(ErrorCode::shape_mismatch, "duration matrix rows differ from grid slots");
    begin_day();
}

namespace {

template <class T>
void close_blocks(std::vector<std::vector<T>>& pending, std::deque<T>& window, std::deque<std::size_t>& blocks,
                  int before, int limit)
{
    const int upto = std::min<int>(before, static_cast<int>(pending.size()));
    for (int s = 0; s < upto; ++s) {
        auto& block = pending[s];
        if (block.empty())
            continue;
        window.insert(window.end(), block.begin(), block.end());
        blocks.push_back(block.size());
        block.clear();
    }
    const auto keep = static_cast<std::size_t>(limit);
    while (blocks.size() > 1 && window.size() - blocks.front() >= keep) {
        window.erase(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(blocks.front()));
        blocks.pop_front();
    }
}

void close_slots(KnowledgeBase& kb, int before)
{
    close_blocks(kb.pending_tickets, kb.ticket_window, kb.ticket_blocks, before, kb.config.noshow_window);
    close_blocks(kb.pending_visits, kb.visit_window, kb.visit_blocks, before, kb.config.duration_window);
}

}  // namespace

void KnowledgeBase::begin_day()
{
    const auto n = static_cast<std::size_t>(config.grid.num_slots);
    close_slots(*this, static_cast<int>(n));
    pending_tickets.assign(n, {});
    pending_visits.assign(n, {});
    ++day;
    history.clear();
    last_ts = 0.0;
    last_tick = -1;
    sold.assign(n, 0);
    entered.assign(n, 0);
    prev_entry_parties = std::move(entry_parties);
    entry_parties.assign(n, 0);
    exited.assign(n, 0);
    shows.assign(n, 0);
    noshows.assign(n, 0);
    orphan_exits = 0;
    last_count = 0;
    planned.assign(n, 0);
    sold_at_solve.assign(n, 0);
    plan_feasible = true;
    plan = AllocationPlan{};
    open_.clear();
}

bool KnowledgeBase::released(int slot) const
{
    const int current = std::max(last_tick, 0);
    if (slot < current || slot >= config.grid.num_slots)
        return false;
    if (config.release == ReleasePolicy::all_at_open)
        return true;
    return slot - current <= config.lead_window_slots;
}

std::int64_t KnowledgeBase::availability(int slot) const
{
    if (!released(slot))
        return 0;
    const std::int64_t sold_since = sold[slot] - sold_at_solve[slot];
    return std::max<std::int64_t>(0, planned[slot] - sold_since);
}

void monitor(KnowledgeBase& kb, const Event& ev)
{
    if (!kb.history.empty() && ev.ts < kb.last_ts)
        throw Error(ErrorCode::out_of_order_event, "event at ts " + std::to_string(ev.ts) +
                                                       " precedes last ingested ts " + std::to_string(kb.last_ts));
    const int n = kb.config.grid.num_slots;
    if (ev.slot < 0 || ev.slot >= n)
        throw Error(ErrorCode::invalid_argument, "event slot " + std::to_string(ev.slot) + " outside grid");

    switch (ev.kind) {
    case EventKind::booking:
        kb.sold[ev.slot] += ev.group_size;
        break;
    case EventKind::show:
    case EventKind::noshow: {
        const bool showed = ev.kind == EventKind::show;
        (showed ? kb.shows : kb.noshows)[ev.slot] += ev.group_size;
        kb.pending_tickets[ev.slot].push_back({ev.slot - ev.gap_slots, ev.slot, ev.group_size, showed});
        break;
    }
    case EventKind::entry:
        kb.entered[ev.slot] += ev.group_size;
        ++kb.entry_parties[ev.slot];
        kb.open_[ev.anon_tag] = VisitRecord{ev.slot, 1, ev.group_size};
        break;
    case EventKind::exit: {
        auto it = kb.open_.find(ev.anon_tag);
        if (it == kb.open_.end() || ev.slot < it->second.entry_slot) {
            kb.orphan_exits += ev.group_size;
            break;
        }
        VisitRecord rec = it->second;
        kb.open_.erase(it);
        rec.duration_slots = ev.slot - rec.entry_slot + 1;
        kb.exited[ev.slot] += rec.group_size;
        kb.pending_visits[ev.slot].push_back({rec, ev.slot == n - 1, kb.day});
        break;
    }
    case EventKind::count_update:
        kb.last_count = ev.group_size;
        break;
    }
    kb.last_ts = ev.ts;
    kb.history.push_back(ev);
}

namespace {

struct DurationMoments {
    double mean = 0.0;
    double variance = 0.0;
};

bool deviates(double observed, double predicted, double variance_of_mean, double threshold, double z)
{
    const double diff = std::abs(observed - predicted);
    return diff > threshold * predicted && diff > z * std::sqrt(variance_of_mean);
}

// Product-limit estimate per slot class over today's parties. Parties still
// inside, or flushed at closing, are censored. Stay lengths with fewer than
// min_row_samples parties at risk keep the current model's hazard, and classes
// without that many entries keep their rows.
DurationMatrix refit_durations(const KnowledgeBase& kb)
{
    const auto& cfg = kb.config;
    const int n = cfg.grid.num_slots;
    const int d_max = kb.durations.d_max();
    const int now = std::max(kb.last_tick, 0);

    struct Stay {
        int entry = 0;
        int length = 0;
        bool censored = false;
    };
    std::map<std::string, int> inside;
    std::vector<Stay> stays;
    for (const auto& ev : kb.history) {
        if (ev.kind == EventKind::entry) {
            inside[ev.anon_tag] = ev.slot;
        } else if (ev.kind == EventKind::exit) {
            auto it = inside.find(ev.anon_tag);
            if (it == inside.end() || ev.slot < it->second)
                continue;
            stays.push_back({it->second, ev.slot - it->second + 1, ev.slot == n - 1});
            inside.erase(it);
        }
    }
    for (const auto& [tag, entry] : inside)
        if (now > entry)
            stays.push_back({entry, now - entry + 1, true});

    std::vector<std::vector<double>> rows;
    std::vector<std::int64_t> counts;
    for (int s = 0; s < n; ++s) {
        auto r = kb.durations.row(s);
        rows.emplace_back(r.begin(), r.end());
        counts.push_back(kb.durations.samples(s));
    }
    for (const auto& cls : kb.classes.classes()) {
        std::vector<double> at_risk(d_max + 1, 0.0), exits(d_max + 1, 0.0);
        std::int64_t parties = 0;
        for (const auto& st : stays) {
            if (!cls.contains(st.entry))
                continue;
            ++parties;
            const int len = std::min(st.length, d_max);
            // A censored stay is known to exceed len - 1 slots.
            const int risk_to = st.censored ? len - 1 : len;
            for (int d = 1; d <= risk_to; ++d)
                at_risk[d] += 1.0;
            if (!st.censored)
                exits[len] += 1.0;
        }
        if (parties < cfg.min_row_samples)
            continue;
        for (int s = cls.begin; s < cls.end; ++s) {
            auto old = kb.durations.row(s);
            double alive = 1.0, tail = 1.0;
            std::vector<double> row(d_max, 0.0);
            for (int d = 1; d <= d_max; ++d) {
                double hazard = tail > 1e-12 ? old[d - 1] / tail : 1.0;
                if (at_risk[d] >= cfg.min_row_samples)
                    hazard = exits[d] / at_risk[d];
                if (d == d_max)
                    hazard = 1.0;
                row[d - 1] = alive * hazard;
                alive -= row[d - 1];
                tail -= old[d - 1];
            }
            double total = 0.0;
            for (double p : row)
                total += p;
            for (double& p : row)
                p /= total;
            rows[s] = std::move(row);
            counts[s] = parties;
        }
    }
    return DurationMatrix(std::move(rows), std::move(counts));
}

}  // namespace

DriftVerdict analyze(const KnowledgeBase& kb)
{
    const auto& cfg = kb.config;
    const int n = cfg.grid.num_slots;

    if (static_cast<int>(kb.visit_window.size()) >= cfg.duration_window) {
        const SurvivalMatrix q(kb.durations);
        const int d_max = kb.durations.d_max();
        // Stay moments for a party exiting in slot t, entry slot weighted by
        // entries times the chance of exiting then (closing flushes the tail).
        std::map<std::pair<bool, int>, std::optional<DurationMoments>> cache;
        auto moments = [&](bool today, int t) -> std::optional<DurationMoments> {
            const auto key = std::make_pair(today, t);
            if (auto it = cache.find(key); it != cache.end())
                return it->second;
            const auto& e = today ? kb.entry_parties : kb.prev_entry_parties;
            double mass = 0.0, first = 0.0, second = 0.0;
            for (int s = std::max(0, t - d_max + 1); s <= t && !e.empty(); ++s) {
                const int r = t - s + 1;
                const double f = t == n - 1 ? q.at(s, t) : kb.durations.prob(s, r);
                const double w = static_cast<double>(e[s]) * f;
                mass += w;
                first += w * r;
                second += w * r * r;
            }
            std::optional<DurationMoments> m;
            if (mass > 0.0) {
                const double mean = first / mass;
                m = DurationMoments{mean, std::max(0.0, second / mass - mean * mean)};
            }
            return cache[key] = m;
        };
        double observed = 0.0;
        double predicted = 0.0;
        double variance = 0.0;
        double w = 0.0;
        for (const auto& v : kb.visit_window) {
            if (v.day != kb.day && v.day != kb.day - 1)
                continue;
            const int t = v.record.entry_slot + v.record.duration_slots - 1;
            const auto m = moments(v.day == kb.day, t);
            if (!m)
                continue;
            observed += v.record.duration_slots;
            predicted += m->mean;
            variance += m->variance;
            w += 1.0;
        }
        if (w > 0.0 && deviates(observed / w, predicted / w, variance / (w * w), cfg.duration_threshold, cfg.drift_z))
            return DriftVerdict::duration_drift;
    }

    if (static_cast<int>(kb.ticket_window.size()) >= cfg.noshow_window) {
        double observed = 0.0;
        double predicted = 0.0;
        double variance = 0.0;
        const auto w = static_cast<double>(kb.ticket_window.size());
        for (const auto& t : kb.ticket_window) {
            const double p = predict_noshow(kb.noshow, t.gap(), t.visit_slot, &kb.classes);
            observed += t.showed ? 0.0 : 1.0;
            predicted += p;
            variance += p * (1.0 - p);
        }
        if (deviates(observed / w, predicted / w, variance / (w * w), cfg.noshow_threshold, cfg.drift_z))
            return DriftVerdict::noshow_drift;
    }
    return DriftVerdict::none;
}

double planning_show_rate(const KnowledgeBase& kb, int slot, int current_slot)
{
    const auto& cfg = kb.config;
    if (!cfg.overbooking)
        return 1.0;
    // Worst case for overbooking is the lowest no-show rate any remaining
    // booking for this slot could have.
    int max_gap = std::max(0, slot - std::max(current_slot, 0));
    if (cfg.release == ReleasePolicy::spread_over_day)
        max_gap = std::min(max_gap, cfg.lead_window_slots);
    double lowest = 1.0;
    for (int g = 0; g <= max_gap; ++g)
        lowest = std::min(lowest, predict_noshow(kb.noshow, g, slot, &kb.classes));
    const double rate = std::min(1.0, (1.0 - lowest) + cfg.safety_margin);
    return std::max(rate, 1e-3);
}

AllocationProblem build_replan_problem(int current_slot, const KnowledgeBase& kb)
{
    const auto& cfg = kb.config;
    const int n = cfg.grid.num_slots;
    const int first = std::max(current_slot + 1, 0);
    if (first >= n)
        throw Error(ErrorCode::invalid_argument, "no slots left to plan after slot " + std::to_string(current_slot));
    const int m = n - first;

    AllocationProblem p{.grid = cfg.grid,
                        .occupancy_cap = cfg.occupancy_cap,
                        .entry_cap = cfg.entry_cap,
                        .durations = kb.durations,
                        .show_rate = {},
                        .committed = {},
                        .upper_bound = {},
                        .background = {}};
    p.grid.opening_minute = cfg.grid.wall_minute_of(first);
    p.grid.num_slots = m;
    if (first > 0) {
        std::vector<std::vector<double>> rows;
        std::vector<std::int64_t> counts;
        for (int s = first; s < n; ++s) {
            auto r = kb.durations.row(s);
            rows.emplace_back(r.begin(), r.end());
            counts.push_back(kb.durations.samples(s));
        }
        p.durations = DurationMatrix(std::move(rows), std::move(counts));
    }

    // Parties still inside have outlasted first - s slots; their presence is
    // the survival conditioned on that. One the model says should be gone is
    // counted for the next slot only.
    const SurvivalMatrix q(kb.durations);
    std::vector<std::int64_t> inside(n, 0);
    for (const auto& [tag, visit] : kb.open_)
        if (visit.entry_slot < first)
            inside[visit.entry_slot] += visit.group_size;
    p.background.assign(m, 0.0);
    for (int s = 0; s < first; ++s) {
        if (inside[s] == 0)
            continue;
        const double alive = q.at(s, first);
        if (alive <= 0.0) {
            p.background[0] += static_cast<double>(inside[s]);
            continue;
        }
        for (int t = first; t < std::min(n, s + q.d_max()); ++t)
            p.background[t - first] += static_cast<double>(inside[s]) * q.at(s, t) / alive;
    }
    for (int s = first; s < n; ++s) {
        p.show_rate.push_back(planning_show_rate(kb, s, first));
        p.committed.push_back(kb.sold[s]);
        p.upper_bound.push_back(cfg.issuance_cap);
    }
    return p;
}

AllocationPlan replan(int current_slot, const KnowledgeBase& kb)
{
    const int n = kb.config.grid.num_slots;
    const int first = std::max(current_slot + 1, 0);
    AllocationPlan full;
    full.issuable.assign(n, 0);
    full.predicted_occupancy.assign(n + kb.durations.d_max() - 1, 0.0);
    full.feasible = true;
    if (first >= n)
        return full;

    const auto sub = solve_allocation(build_replan_problem(current_slot, kb));
    for (int s = first; s < n; ++s)
        full.issuable[s] = sub.issuable[s - first];
    for (std::size_t t = 0; t < sub.predicted_occupancy.size() && first + t < full.predicted_occupancy.size(); ++t)
        full.predicted_occupancy[first + t] = sub.predicted_occupancy[t];
    full.objective = sub.objective;
    full.bound = sub.bound;
    full.feasible = sub.feasible;
    return full;
}

void plan(KnowledgeBase& kb, DriftVerdict verdict)
{
    const auto& cfg = kb.config;
    if (verdict == DriftVerdict::duration_drift) {
        kb.durations = refit_durations(kb);
        ++kb.version;
    } else if (verdict == DriftVerdict::noshow_drift && !kb.ticket_window.empty()) {
        std::vector<TicketRecord> tickets(kb.ticket_window.begin(), kb.ticket_window.end());
        auto fitted = fit_noshow(tickets, cfg.bucket_edges);
        // Sparse buckets keep their rate when the edges are unchanged.
        if (fitted.bucket_edges == kb.noshow.bucket_edges)
            for (std::size_t b = 0; b < fitted.rates.size(); ++b)
                if (fitted.counts[b] < cfg.min_row_samples)
                    fitted.rates[b] = kb.noshow.rates[b];
        fitted.class_offsets = kb.noshow.class_offsets;
        kb.noshow = std::move(fitted);
        ++kb.version;
    }

    kb.plan = replan(kb.last_tick - 1, kb);
    kb.planned = kb.plan.issuable;
    kb.sold_at_solve = kb.sold;
    kb.plan_feasible = kb.plan.feasible;
}

AvailabilitySnapshot execute(const KnowledgeBase& kb)
{
    AvailabilitySnapshot snap;
    snap.boundary = kb.last_tick;
    snap.version = kb.version;
    snap.feasible = kb.plan_feasible;
    snap.availability.resize(kb.config.grid.num_slots);
    for (int s = 0; s < kb.config.grid.num_slots; ++s)
        snap.availability[s] = kb.availability(s);
    return snap;
}

TickResult tick(KnowledgeBase& kb, int boundary)
{
    if (boundary <= kb.last_tick)
        throw Error(ErrorCode::double_tick, "slot boundary " + std::to_string(boundary) + " already ticked");
    if (boundary < 0 || boundary >= kb.config.grid.num_slots)
        throw Error(ErrorCode::invalid_argument, "slot boundary " + std::to_string(boundary) + " outside grid");
    kb.last_tick = boundary;
    close_slots(kb, boundary);
    TickResult out;
    out.verdict = analyze(kb);
    plan(kb, out.verdict);
    out.snapshot = execute(kb);
    return out;
}

std::vector<TickResult> replay_day(KnowledgeBase& kb, const std::vector<Event>& events)
{
    kb.begin_day();
    const int n = kb.config.grid.num_slots;
    const double len = kb.config.grid.slot_seconds();
    std::vector<TickResult> out;
    auto tick_through = [&](int boundary) {
        for (int k = kb.last_tick + 1; k <= std::min(boundary, n - 1); ++k)
            out.push_back(tick(kb, k));
    };
    tick_through(0);
    for (const auto& ev : events) {
        tick_through(static_cast<int>(std::ceil(ev.ts / len)) - 1);
        monitor(kb, ev);
        if (ev.kind == EventKind::count_update)
            tick_through(ev.slot + 1);
    }
    return out;
}

std::string serialize(const KnowledgeBase& kb)
{
    std::ostringstream os;
    os << std::setprecision(17);
    os << "version " << kb.version << '\n';
    os << "last_tick " << kb.last_tick << '\n';
    os << "last_ts " << kb.last_ts << '\n';
    os << "day " << kb.day << '\n';
    os << "events " << kb.history.size() << '\n';
    auto row = [&](const char* name, const std::vector<std::int64_t>& v) {
        os << name;
        for (auto x : v)
            os << ' ' << x;
        os << '\n';
    };
    row("sold", kb.sold);
    row("entered", kb.entered);
    row("exited", kb.exited);
    row("shows", kb.shows);
    row("noshows", kb.noshows);
    row("planned", kb.planned);
    row("sold_at_solve", kb.sold_at_solve);
    os << "plan_feasible " << kb.plan_feasible << '\n';
    os << "orphan_exits " << kb.orphan_exits << '\n';
    os << "open_visits " << kb.open_visits() << '\n';
    os << "last_count " << kb.last_count << '\n';
    os << "visit_window " << kb.visit_window.size();
    for (const auto& v : kb.visit_window)
        os << ' ' << v.record.entry_slot << ':' << v.record.duration_slots << ':' << v.record.group_size
           << (v.censored ? "c" : "");
    os << '\n';
    auto blocks = [&](const char* name, const std::deque<std::size_t>& b) {
        os << name;
        for (auto x : b)
            os << ' ' << x;
        os << '\n';
    };
    auto pending = [&](const char* name, const auto& per_slot) {
        std::size_t total = 0;
        for (const auto& p : per_slot)
            total += p.size();
        os << name << ' ' << total << '\n';
    };
    blocks("visit_blocks", kb.visit_blocks);
    pending("pending_visits", kb.pending_visits);
    blocks("ticket_blocks", kb.ticket_blocks);
    pending("pending_tickets", kb.pending_tickets);
    os << "ticket_window " << kb.ticket_window.size();
    for (const auto& t : kb.ticket_window)
        os << ' ' << t.booking_slot << ':' << t.visit_slot << ':' << t.group_size << ':' << t.showed;
    os << '\n';
    os << "noshow_edges";
    for (int e : kb.noshow.bucket_edges)
        os << ' ' << e;
    os << "\nnoshow_rates";
    for (double r : kb.noshow.rates)
        os << ' ' << r;
    os << '\n';
    for (int s = 0; s < kb.durations.num_slots(); ++s) {
        os << "duration " << s << ' ' << kb.durations.samples(s);
        for (double p : kb.durations.row(s))
            os << ' ' << p;
        os << '\n';
    }
    return os.str();
}

}  // namespace slotflow
