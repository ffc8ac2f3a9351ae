#include "slotflow/simulator.hpp"

#include "slotflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <queue>
#include <random>

namespace slotflow {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t day_seed(std::uint64_t base, int day)
{
    return splitmix64(base ^ splitmix64(static_cast<std::uint64_t>(day) + 0x51f7u));
}

int draw_pmf(std::mt19937_64& rng, const std::vector<double>& pmf)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double r = u(rng);
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        r -= pmf[i];
        if (r < 0.0)
            return static_cast<int>(i) + 1;
    }
    return static_cast<int>(pmf.size());
}

int draw_party_size(std::mt19937_64& rng, const ScenarioConfig& c)
{
    std::bernoulli_distribution is_group(c.group_fraction);
    if (!is_group(rng))
        return 1;
    std::uniform_int_distribution<int> size(c.group_min, c.group_max);
    return size(rng);
}

// Dwell in slots for a party entering at `slot`, with the ground-truth
// perturbations applied.
int draw_dwell(std::mt19937_64& rng, const ScenarioConfig& c, const SlotClassMap& classes,
               const std::array<std::vector<double>, kNumSlotClasses>& pmfs, int slot, int group_size)
{
    const int cls = static_cast<int>(classes.label_of(slot));
    double d = draw_pmf(rng, pmfs[cls]);
    if (c.drift_start_slot >= 0 && slot >= c.drift_start_slot)
        d *= c.drift_multiplier;
    if (group_size > 1)
        d *= c.group_dwell_multiplier;
    return std::clamp(static_cast<int>(std::lround(d)), 1, c.d_max);
}

// Uniform time in [lo, hi) on the millisecond grid.
double draw_time(std::mt19937_64& rng, double lo, double hi)
{
    std::uniform_real_distribution<double> u(lo, hi);
    double t = to_log_time(u(rng));
    const double last = to_log_time(hi - 0.001);
    return std::clamp(t, to_log_time(lo), std::max(to_log_time(lo), last));
}

enum class Happening { boundary, booking, entry, exit };

struct Pending {
    double time;
    int prio;  // boundaries first at equal times
    std::uint64_t seq;
    Happening what;
    int index;  // boundary number, party or ticket index

    bool operator>(const Pending& o) const
    {
        if (time != o.time)
            return time > o.time;
        if (prio != o.prio)
            return prio > o.prio;
        return seq > o.seq;
    }
};

struct Party {
    double arrival = 0.0;
    double served = 0.0;  // service completion, when the booking is made
    int size = 1;
};

struct Ticket {
    int booking_slot = 0;
    int visit_slot = 0;
    int size = 1;
    bool shows = true;
    int exit_slot = 0;
    double entry_time = 0.0;
    std::string tag;
};

class DaySim {
public:
    DaySim(const ScenarioConfig& config, KnowledgeBase& kb, int day, std::uint64_t seed)
        : c_(config), kb_(kb), classes_(config.class_map()), pmfs_(config.dwell_pmfs()), rng_(seed),
          n_(config.grid.num_slots), slot_sec_(config.grid.slot_seconds())
    {
        r_.day = day;
        r_.seed = seed;
        r_.date = config.context.date;
        r_.release = kb.config.release;
        r_.lead_window_slots = kb.config.lead_window_slots;
        const auto un = static_cast<std::size_t>(n_);
        for (auto* v : {&r_.availability, &r_.sales, &r_.entries, &r_.exits, &r_.occupancy, &r_.noshows,
                        &r_.kiosk_arrivals})
            v->assign(un, 0);
        by_slot_.resize(un);
    }

    SimResult run()
    {
        kb_.begin_day();
        draw_arrivals();
        for (int k = 0; k <= n_; ++k)
            push(k * slot_sec_, Happening::boundary, k);
        for (std::size_t i = 0; i < parties_.size(); ++i)
            push(parties_[i].served, Happening::booking, static_cast<int>(i));

        while (!queue_.empty()) {
            const Pending p = queue_.top();
            queue_.pop();
            switch (p.what) {
            case Happening::boundary: on_boundary(p.index); break;
            case Happening::booking: on_booking(p.time, p.index); break;
            case Happening::entry: on_entry(p.time, p.index); break;
            case Happening::exit: on_exit(p.time, p.index); break;
            }
        }

        for (const auto& t : tickets_) {
            r_.tickets.push_back({t.booking_slot, t.visit_slot, t.size, t.shows});
            if (t.shows) {
                r_.visits.push_back({t.visit_slot, t.exit_slot - t.visit_slot + 1, t.size});
                for (int s = t.visit_slot; s <= t.exit_slot; ++s)
                    r_.occupancy[s] += t.size;
            }
        }
        r_.waits = summarize_waits(r_.kiosk_waits);
        r_.final_version = kb_.version;
        return std::move(r_);
    }

private:
    void push(double time, Happening what, int index)
    {
        queue_.push(Pending{time, what == Happening::boundary ? 0 : 1, seq_++, what, index});
    }

    void emit(const Event& ev)
    {
        monitor(kb_, ev);
        r_.events.push_back(ev);
    }

    void draw_arrivals()
    {
        const double mean_party =
            (1.0 - c_.group_fraction) + c_.group_fraction * 0.5 * (c_.group_min + c_.group_max);
        std::vector<double> times;
        std::vector<int> sizes;
        for (int s = 0; s < n_; ++s) {
            const double persons = c_.arrivals_per_slot[s] * c_.context.demand_multiplier;
            std::poisson_distribution<int> count(std::max(persons / mean_party, 0.0));
            const int k = persons > 0.0 ? count(rng_) : 0;
            r_.kiosk_arrivals[s] = k;
            for (int i = 0; i < k; ++i)
                times.push_back(draw_time(rng_, s * slot_sec_, (s + 1) * slot_sec_));
        }
        std::sort(times.begin(), times.end());
        for (std::size_t i = 0; i < times.size(); ++i)
            sizes.push_back(draw_party_size(rng_, c_));

        const auto queue = simulate_kiosk_queue(times, c_.fleet);
        parties_.resize(times.size());
        for (std::size_t i = 0; i < times.size(); ++i) {
            parties_[i].arrival = times[i];
            parties_[i].size = sizes[i];
            parties_[i].served = to_log_time(times[i] + queue.waits[i] + c_.fleet.service_seconds);
        }
        r_.kiosk_waits = queue.waits;
    }

    void on_boundary(int k)
    {
        const double now = k * slot_sec_;
        if (k > 0) {
            for (int idx : by_slot_[k - 1]) {
                const auto& t = tickets_[idx];
                if (t.shows)
                    continue;
                emit(Event{now, EventKind::noshow, t.visit_slot, t.size, t.visit_slot - t.booking_slot, {}});
                r_.noshows[t.visit_slot] += t.size;
                r_.noshow_total += t.size;
            }
            emit(Event{now, EventKind::count_update, k - 1, static_cast<int>(inside_), 0, {}});
        }
        if (k >= n_)
            return;
        const auto res = tick(kb_, k);
        r_.availability[k] = res.snapshot.availability[k];
        const std::int64_t offered =
            std::accumulate(res.snapshot.availability.begin(), res.snapshot.availability.end(), std::int64_t{0});
        r_.ticks.push_back(TickTrace{k, res.snapshot.version, res.verdict, res.snapshot.feasible, offered});
    }

    void on_booking(double now, int index)
    {
        const Party& party = parties_[index];
        const int current = static_cast<int>(std::floor(now / slot_sec_));
        if (current >= n_) {
            ++r_.rejected;
            return;
        }
        int chosen = -1;
        for (int s = current; s < n_; ++s) {
            if (kb_.availability(s) >= party.size) {
                chosen = s;
                break;
            }
        }
        if (chosen < 0) {
            ++r_.rejected;
            return;
        }
        ++r_.bookings;
        const int gap = chosen - current;
        emit(Event{now, EventKind::booking, chosen, party.size, gap, {}});
        r_.sales[chosen] += party.size;
        r_.issued += party.size;

        Ticket t;
        t.booking_slot = current;
        t.visit_slot = chosen;
        t.size = party.size;
        std::bernoulli_distribution noshow(predict_noshow(c_.noshow_truth, gap, chosen, &classes_));
        t.shows = !noshow(rng_);
        const int idx = static_cast<int>(tickets_.size());
        by_slot_[chosen].push_back(idx);
        if (t.shows) {
            const double lo = std::max(now, chosen * slot_sec_);
            t.entry_time = draw_time(rng_, lo, (chosen + 1) * slot_sec_);
            const int d = draw_dwell(rng_, c_, classes_, pmfs_, chosen, t.size);
            t.exit_slot = std::min(chosen + d - 1, n_ - 1);
            char tag[24];
            std::snprintf(tag, sizeof tag, "v%06d", idx);
            t.tag = tag;
            tickets_.push_back(std::move(t));
            push(tickets_.back().entry_time, Happening::entry, idx);
        } else {
            tickets_.push_back(std::move(t));
        }
    }

    void on_entry(double now, int idx)
    {
        const auto& t = tickets_[idx];
        emit(Event{now, EventKind::show, t.visit_slot, t.size, t.visit_slot - t.booking_slot, {}});
        emit(Event{now, EventKind::entry, t.visit_slot, t.size, 0, t.tag});
        r_.shows += t.size;
        r_.entries[t.visit_slot] += t.size;
        inside_ += t.size;
        const double lo = t.exit_slot == t.visit_slot ? now : t.exit_slot * slot_sec_;
        push(draw_time(rng_, lo, (t.exit_slot + 1) * slot_sec_), Happening::exit, idx);
    }

    void on_exit(double now, int idx)
    {
        const auto& t = tickets_[idx];
        emit(Event{now, EventKind::exit, t.exit_slot, t.size, 0, t.tag});
        r_.exits[t.exit_slot] += t.size;
        inside_ -= t.size;
    }

    const ScenarioConfig& c_;
    KnowledgeBase& kb_;
    SlotClassMap classes_;
    std::array<std::vector<double>, kNumSlotClasses> pmfs_;
    std::mt19937_64 rng_;
    int n_;
    double slot_sec_;

    SimResult r_;
    std::vector<Party> parties_;
    std::vector<Ticket> tickets_;
    std::vector<std::vector<int>> by_slot_;
    std::int64_t inside_ = 0;
    std::uint64_t seq_ = 0;
    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue_;
};

}  // namespace

QoeSummary qoe_summary(const SimResult& r)
{
    QoeSummary q;
    if (r.bookings == 0)
        return q;
    q.empty = false;
    q.mean_wait = r.waits.mean;
    q.max_wait = r.waits.max;
    q.p95_wait = r.waits.p95;
    q.rejection_fraction = static_cast<double>(r.rejected) / static_cast<double>(r.bookings + r.rejected);
    double gaps = 0.0;
    for (const auto& t : r.tickets)
        gaps += t.gap();
    q.mean_gap_slots = r.tickets.empty() ? 0.0 : gaps / static_cast<double>(r.tickets.size());
    q.noshow_rate = daily_noshow_rate(r.tickets);
    return q;
}

KnowledgeBase truthful_knowledge(const ScenarioConfig& config)
{
    config.validate();
    return KnowledgeBase(config.loop_config(), config.truth_durations(), config.truth_noshow());
}

SimResult run_day(const ScenarioConfig& config, KnowledgeBase& kb, int day_index)
{
    config.validate();
    if (kb.config.grid != config.grid)
        throw Error(ErrorCode::shape_mismatch, "knowledge base grid differs from scenario grid");
    DaySim sim(config, kb, day_index, day_seed(config.seed, day_index));
    return sim.run();
}

SimResult run_day(const ScenarioConfig& config)
{
    auto kb = truthful_knowledge(config);
    return run_day(config, kb, 0);
}

std::vector<SimResult> run_days(const ScenarioConfig& config, KnowledgeBase& kb, int num_days,
                                const std::vector<DayOverride>& overrides)
{
    if (num_days < 0)
        throw Error(ErrorCode::invalid_argument, "number of days must be >= 0");
    std::vector<SimResult> out;
    out.reserve(static_cast<std::size_t>(num_days));
    for (int d = 0; d < num_days; ++d) {
        ScenarioConfig day = config;
        if (static_cast<std::size_t>(d) < overrides.size()) {
            const auto& o = overrides[d];
            if (o.release)
                day.release = *o.release;
            if (o.lead_window_slots)
                day.lead_window_slots = *o.lead_window_slots;
            if (o.demand_multiplier)
                day.context.demand_multiplier = *o.demand_multiplier;
            if (o.date)
                day.context.date = *o.date;
        }
        kb.config.release = day.release;
        kb.config.lead_window_slots = day.lead_window_slots;
        out.push_back(run_day(day, kb, d));
    }
    return out;
}

std::vector<SimResult> run_days(const ScenarioConfig& config, int num_days, const std::vector<DayOverride>& overrides)
{
    auto kb = truthful_knowledge(config);
    return run_days(config, kb, num_days, overrides);
}

RecordCorpus generate_records(const ScenarioConfig& config, std::uint64_t seed, int n)
{
    config.validate();
    if (n < 0)
        throw Error(ErrorCode::invalid_argument, "record count must be >= 0");
    const auto classes = config.class_map();
    const auto pmfs = config.dwell_pmfs();
    const int slots = config.grid.num_slots;
    const auto& edges = config.noshow_truth.bucket_edges;
    std::mt19937_64 rng(splitmix64(seed));
    std::uniform_int_distribution<int> slot(0, slots - 1);
    std::uniform_int_distribution<std::size_t> bucket(0, edges.size() - 1);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    RecordCorpus out;
    out.visits.reserve(static_cast<std::size_t>(n));
    out.tickets.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const int s = slot(rng);
        const int size = draw_party_size(rng, config);
        out.visits.push_back({s, draw_pmf(rng, pmfs[static_cast<int>(classes.label_of(s))]), size});
    }
    for (int i = 0; i < n; ++i) {
        // Equal share per gap bucket; the open last bucket spans 12 slots.
        const std::size_t b = bucket(rng);
        const int lo = std::min(edges[b], slots - 1);
        const int hi = std::min(b + 1 < edges.size() ? edges[b + 1] - 1 : edges[b] + 11, slots - 1);
        const int g = std::uniform_int_distribution<int>(lo, hi)(rng);
        const int v = std::uniform_int_distribution<int>(g, slots - 1)(rng);
        const int size = draw_party_size(rng, config);
        const bool noshow = u(rng) < predict_noshow(config.noshow_truth, g, v, &classes);
        out.tickets.push_back({v - g, v, size, !noshow});
    }
    return out;
}

std::string check_conservation(const SimResult& r)
{
    const auto n = r.sales.size();
    auto sum = [](const std::vector<std::int64_t>& v) {
        return std::accumulate(v.begin(), v.end(), std::int64_t{0});
    };
    if (sum(r.sales) != r.issued)
        return "per-slot sales do not add up to tickets issued";
    if (r.shows + r.noshow_total != r.issued)
        return "shows plus no-shows differ from tickets issued";
    if (sum(r.entries) != r.shows)
        return "entries differ from shows";
    if (sum(r.exits) != sum(r.entries))
        return "exits differ from entries at closing";
    if (sum(r.noshows) != r.noshow_total)
        return "per-slot no-shows do not add up";
    if (r.bookings + r.rejected != sum(r.kiosk_arrivals))
        return "bookings plus rejections differ from kiosk arrivals";
    for (std::size_t s = 0; s < n; ++s) {
        if (r.entries[s] + r.noshows[s] != r.sales[s])
            return "slot " + std::to_string(s) + ": entries plus no-shows differ from sales";
        if (r.availability[s] < 0 || r.occupancy[s] < 0)
            return "slot " + std::to_string(s) + ": negative availability or occupancy";
        const std::int64_t carried = s == 0 ? 0 : r.occupancy[s - 1] - r.exits[s - 1];
        if (r.occupancy[s] != carried + r.entries[s])
            return "slot " + std::to_string(s) + ": occupancy does not follow entries and exits";
    }
    if (r.kiosk_waits.size() != static_cast<std::size_t>(sum(r.kiosk_arrivals)))
        return "kiosk wait count differs from kiosk arrivals";
    return {};
}

}  // namespace slotflow
