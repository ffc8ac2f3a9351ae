#include "slotflow/io.hpp"

#include "slotflow/error.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#ifndef SLOTFLOW_VERSION
#define SLOTFLOW_VERSION "unknown"
#endif

namespace slotflow {

namespace {

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fixed(double v, int decimals)
{
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

template <class T>
std::string join(const std::vector<T>& v)
{
    std::string out;
    for (const auto& x : v) {
        out += ' ';
        if constexpr (std::is_floating_point_v<T>)
            out += num(x);
        else
            out += std::to_string(x);
    }
    return out;
}

struct Line {
    int number = 0;
    std::string key;
    std::vector<std::string> values;
};

// Splits a document into keyed lines and checks the header.
class Document {
public:
    Document(const std::string& text, const std::string& kind)
    {
        std::istringstream in(text);
        std::string raw;
        int number = 0;
        bool header = false;
        while (std::getline(in, raw)) {
            ++number;
            if (!raw.empty() && raw.back() == '\r')
                raw.pop_back();
            std::istringstream ls(raw);
            Line line;
            line.number = number;
            if (!(ls >> line.key) || line.key[0] == '#')
                continue;
            std::string tok;
            while (ls >> tok)
                line.values.push_back(tok);
            if (!header) {
                if (line.key != "slotflow-" + kind || line.values.size() != 1 || line.values[0] != "1")
                    fail(number, "expected header 'slotflow-" + kind + " 1'");
                header = true;
                continue;
            }
            lines_.push_back(std::move(line));
        }
        if (!header)
            fail(number, "empty " + kind + " file");
        last_ = number;
    }

    [[noreturn]] static void fail(int line, const std::string& what)
    {
        throw Error(ErrorCode::parse_error, "line " + std::to_string(line) + ": " + what);
    }

    const Line* find(const std::string& key) const
    {
        for (const auto& l : lines_)
            if (l.key == key)
                return &l;
        return nullptr;
    }

    const Line& need(const std::string& key) const
    {
        if (const auto* l = find(key))
            return *l;
        fail(last_, "missing field '" + key + "'");
    }

    std::vector<const Line*> all(const std::string& key) const
    {
        std::vector<const Line*> out;
        for (const auto& l : lines_)
            if (l.key == key)
                out.push_back(&l);
        return out;
    }

    void only(std::initializer_list<const char*> keys) const
    {
        for (const auto& l : lines_) {
            bool known = false;
            for (const char* k : keys)
                known = known || l.key == k;
            if (!known)
                fail(l.number, "unknown field '" + l.key + "'");
        }
    }

private:
    std::vector<Line> lines_;
    int last_ = 0;
};

template <class T>
T parse_value(const Line& line, const std::string& tok)
{
    T v{};
    if constexpr (std::is_floating_point_v<T>) {
        char* end = nullptr;
        v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0')
            Document::fail(line.number, "field '" + line.key + "' has non-numeric value '" + tok + "'");
    } else {
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || p != tok.data() + tok.size())
            Document::fail(line.number, "field '" + line.key + "' has non-integer value '" + tok + "'");
    }
    return v;
}

template <class T>
std::vector<T> values_of(const Line& line, std::size_t from = 0)
{
    std::vector<T> out;
    for (std::size_t i = from; i < line.values.size(); ++i)
        out.push_back(parse_value<T>(line, line.values[i]));
    return out;
}

template <class T>
T single(const Line& line)
{
    if (line.values.size() != 1)
        Document::fail(line.number, "field '" + line.key + "' takes one value");
    return parse_value<T>(line, line.values[0]);
}

std::string duration_rows(const DurationMatrix& m)
{
    std::string out;
    for (int s = 0; s < m.num_slots(); ++s) {
        out += "row " + std::to_string(s) + ' ' + std::to_string(m.samples(s));
        for (double p : m.row(s))
            out += ' ' + num(p);
        out += '\n';
    }
    return out;
}

DurationMatrix rows_to_matrix(const Document& doc)
{
    const auto rows = doc.all("row");
    std::vector<std::vector<double>> probs;
    std::vector<std::int64_t> counts;
    for (const auto* l : rows) {
        if (l->values.size() < 3)
            Document::fail(l->number, "row needs an index, a sample count and probabilities");
        if (parse_value<int>(*l, l->values[0]) != static_cast<int>(probs.size()))
            Document::fail(l->number, "rows must be numbered 0, 1, 2, ...");
        counts.push_back(parse_value<std::int64_t>(*l, l->values[1]));
        probs.push_back(values_of<double>(*l, 2));
    }
    if (probs.empty())
        Document::fail(1, "duration matrix has no rows");
    try {
        return DurationMatrix(std::move(probs), std::move(counts));
    } catch (const Error& e) {
        throw Error(ErrorCode::parse_error, std::string("duration matrix: ") + e.what());
    }
}

}  // namespace

std::string format_duration_matrix(const DurationMatrix& m)
{
    std::string out = "slotflow-durations 1\n";
    out += "# row <slot> <samples> <P(d=1)> ... <P(d=d_max)>\n";
    out += "d_max " + std::to_string(m.d_max()) + '\n';
    out += duration_rows(m);
    return out;
}

DurationMatrix parse_duration_matrix(const std::string& text)
{
    Document doc(text, "durations");
    doc.only({"d_max", "row"});
    const auto& dl = doc.need("d_max");
    auto m = rows_to_matrix(doc);
    if (m.d_max() != single<int>(dl))
        Document::fail(dl.number, "d_max differs from row length");
    return m;
}

std::string format_noshow_model(const NoShowModel& m)
{
    std::string out = "slotflow-noshow 1\n";
    out += "edges" + join(m.bucket_edges) + '\n';
    out += "rates" + join(m.rates) + '\n';
    out += "counts" + join(m.counts) + '\n';
    out += "class_offsets" + join(std::vector<double>(m.class_offsets.begin(), m.class_offsets.end())) + '\n';
    return out;
}

NoShowModel parse_noshow_model(const std::string& text)
{
    Document doc(text, "noshow");
    doc.only({"edges", "rates", "counts", "class_offsets"});
    NoShowModel m;
    m.bucket_edges = values_of<int>(doc.need("edges"));
    m.rates = values_of<double>(doc.need("rates"));
    m.counts = values_of<std::int64_t>(doc.need("counts"));
    if (const auto* l = doc.find("class_offsets")) {
        const auto v = values_of<double>(*l);
        if (v.size() != m.class_offsets.size())
            Document::fail(l->number, "class_offsets needs one value per slot class");
        std::copy(v.begin(), v.end(), m.class_offsets.begin());
    }
    try {
        m.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::invariant_violation, std::string("no-show model: ") + e.what());
    }
    return m;
}

std::string format_problem(const AllocationProblem& p)
{
    std::string out = "slotflow-problem 1\n";
    out += "grid " + std::to_string(p.grid.slot_length_minutes) + ' ' + std::to_string(p.grid.num_slots) + ' ' +
           std::to_string(p.grid.opening_minute) + '\n';
    out += "occupancy_cap " + num(p.occupancy_cap) + '\n';
    out += "entry_cap " + num(p.entry_cap) + '\n';
    out += "show_rate" + join(p.show_rate) + '\n';
    out += "committed" + join(p.committed) + '\n';
    out += "upper_bound" + join(p.upper_bound) + '\n';
    if (!p.background.empty())
        out += "background" + join(p.background) + '\n';
    out += "d_max " + std::to_string(p.durations.d_max()) + '\n';
    out += duration_rows(p.durations);
    return out;
}

AllocationProblem parse_problem(const std::string& text)
{
    Document doc(text, "problem");
    doc.only({"grid", "occupancy_cap", "entry_cap", "show_rate", "committed", "upper_bound", "background", "d_max",
              "row"});
    const auto& gl = doc.need("grid");
    const auto g = values_of<int>(gl);
    if (g.size() != 3)
        Document::fail(gl.number, "grid takes slot_length_minutes num_slots opening_minute");
    AllocationProblem p{.grid = SlotGrid{g[0], g[1], g[2]},
                        .occupancy_cap = single<double>(doc.need("occupancy_cap")),
                        .entry_cap = single<double>(doc.need("entry_cap")),
                        .durations = rows_to_matrix(doc),
                        .show_rate = values_of<double>(doc.need("show_rate")),
                        .committed = values_of<std::int64_t>(doc.need("committed")),
                        .upper_bound = values_of<std::int64_t>(doc.need("upper_bound")),
                        .background = {}};
    if (const auto* l = doc.find("background"))
        p.background = values_of<double>(*l);
    const auto& dl = doc.need("d_max");
    if (p.durations.d_max() != single<int>(dl))
        Document::fail(dl.number, "d_max differs from row length");
    if (p.occupancy_cap < 0.0)
        throw Error(ErrorCode::invariant_violation, "occupancy_cap (C_max) must be >= 0");
    p.validate();
    return p;
}

std::string format_plan(const AllocationPlan& plan)
{
    std::string out = "slotflow-plan 1\n";
    out += std::string("feasible ") + (plan.feasible ? "1" : "0") + '\n';
    out += "objective " + num(plan.objective) + '\n';
    out += "bound " + num(plan.bound) + '\n';
    out += "issuable" + join(plan.issuable) + '\n';
    out += "predicted_occupancy";
    for (double v : plan.predicted_occupancy)
        out += ' ' + fixed(v, 3);
    out += '\n';
    return out;
}

AllocationPlan parse_plan(const std::string& text)
{
    Document doc(text, "plan");
    doc.only({"feasible", "objective", "bound", "issuable", "predicted_occupancy"});
    AllocationPlan plan;
    plan.feasible = single<int>(doc.need("feasible")) != 0;
    plan.objective = single<double>(doc.need("objective"));
    plan.bound = single<double>(doc.need("bound"));
    plan.issuable = values_of<std::int64_t>(doc.need("issuable"));
    plan.predicted_occupancy = values_of<double>(doc.need("predicted_occupancy"));
    return plan;
}

std::vector<CompletedVisit> visits_from_events(const std::vector<Event>& events, int num_slots)
{
    std::map<std::string, const Event*> open;
    std::vector<CompletedVisit> out;
    for (const auto& ev : events) {
        if (ev.kind == EventKind::entry) {
            open[ev.anon_tag] = &ev;
        } else if (ev.kind == EventKind::exit) {
            auto it = open.find(ev.anon_tag);
            if (it == open.end() || ev.slot < it->second->slot)
                continue;
            const Event& in = *it->second;
            out.push_back({VisitRecord{in.slot, ev.slot - in.slot + 1, in.group_size}, ev.slot == num_slots - 1});
            open.erase(it);
        }
    }
    return out;
}

std::vector<TicketRecord> tickets_from_events(const std::vector<Event>& events)
{
    std::vector<TicketRecord> out;
    for (const auto& ev : events)
        if (ev.kind == EventKind::show || ev.kind == EventKind::noshow)
            out.push_back({ev.slot - ev.gap_slots, ev.slot, ev.group_size, ev.kind == EventKind::show});
    return out;
}

std::string wall_time(const SlotGrid& grid, int slot)
{
    const int m = grid.wall_minute_of(slot);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d:%02d", (m / 60) % 24, m % 60);
    return buf;
}

std::string format_availability(const SlotGrid& grid, const AvailabilitySnapshot& snap)
{
    std::string out = "slot,time,availability\n";
    for (std::size_t s = 0; s < snap.availability.size(); ++s)
        out += std::to_string(s) + ',' + wall_time(grid, static_cast<int>(s)) + ',' +
               std::to_string(snap.availability[s]) + '\n';
    return out;
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::io_error, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::io_error, "cannot write " + path.string());
    out << text;
    if (!out)
        throw Error(ErrorCode::io_error, "write failed for " + path.string());
}

const std::vector<DailyNoShow>& builtin_noshow_table()
{
    static const std::vector<DailyNoShow> table = {
        {"2019-03-05", 7496, 1480, 19.7},
        {"2019-03-06", 7290, 1360, 18.9},
        {"2019-03-07", 7214, 1257, 17.4},
        {"2019-03-09", 7434, 961, 12.9},
        {"2019-03-10", 7334, 870, 11.9},
    };
    return table;
}

std::vector<DailyNoShow> parse_noshow_table(const std::string& csv)
{
    std::istringstream in(csv);
    std::string raw;
    std::vector<DailyNoShow> out;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (!raw.empty() && raw.back() == '\r')
            raw.pop_back();
        if (raw.empty())
            continue;
        if (number == 1) {
            if (raw != "date,issued,noshow,percent")
                Document::fail(number, "expected header 'date,issued,noshow,percent'");
            continue;
        }
        std::vector<std::string> cells;
        std::istringstream ls(raw);
        std::string cell;
        while (std::getline(ls, cell, ','))
            cells.push_back(cell);
        if (cells.size() != 4)
            Document::fail(number, "expected 4 columns");
        Line line{number, "row", cells};
        DailyNoShow d;
        d.date = cells[0];
        d.issued = parse_value<std::int64_t>(line, cells[1]);
        d.noshow = parse_value<std::int64_t>(line, cells[2]);
        d.percent = parse_value<double>(line, cells[3]);
        if (d.issued < 0 || d.noshow < 0 || d.noshow > d.issued)
            throw Error(ErrorCode::invariant_violation,
                        "line " + std::to_string(number) + ": need 0 <= noshow <= issued");
        out.push_back(std::move(d));
    }
    if (out.empty())
        throw Error(ErrorCode::empty_input, "no-show table has no rows");
    return out;
}

std::vector<TicketRecord> tickets_from_daily(const DailyNoShow& day)
{
    std::vector<TicketRecord> out(static_cast<std::size_t>(day.issued));
    for (std::int64_t i = 0; i < day.noshow; ++i)
        out[static_cast<std::size_t>(i)].showed = false;
    return out;
}

std::string format_slots_csv(const ScenarioConfig& config, const SimResult& d)
{
    std::string out = "slot,time,availability,sales,entries,exits,occupancy,occupancy_ratio,noshows,kiosk_arrivals\n";
    for (std::size_t s = 0; s < d.sales.size(); ++s) {
        const double ratio =
            config.occupancy_cap > 0.0 ? static_cast<double>(d.occupancy[s]) / config.occupancy_cap : 0.0;
        out += std::to_string(s) + ',' + wall_time(config.grid, static_cast<int>(s)) + ',' +
               std::to_string(d.availability[s]) + ',' + std::to_string(d.sales[s]) + ',' +
               std::to_string(d.entries[s]) + ',' + std::to_string(d.exits[s]) + ',' +
               std::to_string(d.occupancy[s]) + ',' + fixed(ratio, 4) + ',' + std::to_string(d.noshows[s]) + ',' +
               std::to_string(d.kiosk_arrivals[s]) + '\n';
    }
    return out;
}

std::string format_daily_summary_csv(const std::vector<SimResult>& days)
{
    std::string out =
        "day,date,seed,release,lead_window_slots,issued,shows,noshows,noshow_rate,bookings,rejected,"
        "rejection_fraction,mean_gap_slots,mean_wait_s,max_wait_s,p95_wait_s,peak_occupancy,model_version\n";
    for (const auto& d : days) {
        const auto q = qoe_summary(d);
        const auto peak = d.occupancy.empty() ? 0 : *std::max_element(d.occupancy.begin(), d.occupancy.end());
        out += std::to_string(d.day + 1) + ',' + d.date + ',' + std::to_string(d.seed) + ',' +
               std::string(to_string(d.release)) + ',' + std::to_string(d.lead_window_slots) + ',' +
               std::to_string(d.issued) + ',' + std::to_string(d.shows) + ',' + std::to_string(d.noshow_total) + ',' +
               fixed(q.noshow_rate, 4) + ',' + std::to_string(d.bookings) + ',' + std::to_string(d.rejected) + ',' +
               fixed(q.rejection_fraction, 4) + ',' + fixed(q.mean_gap_slots, 4) + ',' + fixed(q.mean_wait, 3) + ',' +
               fixed(q.max_wait, 3) + ',' + fixed(q.p95_wait, 3) + ',' + std::to_string(peak) + ',' +
               std::to_string(d.final_version) + '\n';
    }
    return out;
}

std::string format_ticks_csv(const SimResult& d)
{
    std::string out = "boundary,version,verdict,feasible,offered\n";
    for (const auto& t : d.ticks)
        out += std::to_string(t.boundary) + ',' + std::to_string(t.version) + ',' + std::string(to_string(t.verdict)) +
               ',' + (t.feasible ? "1" : "0") + ',' + std::to_string(t.offered) + '\n';
    return out;
}

void write_report_bundle(const std::filesystem::path& dir, const ScenarioConfig& config,
                         const std::vector<SimResult>& days, const KnowledgeBase& kb)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw Error(ErrorCode::io_error, "cannot create " + dir.string() + ": " + ec.message());
    const fs::path marker = dir / "FAILED";
    const fs::path manifest = dir / "manifest.txt";
    fs::remove(manifest, ec);
    write_text_file(marker, "report bundle incomplete\n");

    std::vector<std::string> files;
    auto put = [&](const std::string& name, const std::string& text) {
        write_text_file(dir / name, text);
        files.push_back(name);
    };
    put("scenario.json", scenario_to_json(config));
    for (const auto& d : days) {
        const std::string n = std::to_string(d.day + 1);
        put("slots_day" + n + ".csv", format_slots_csv(config, d));
        put("ticks_day" + n + ".csv", format_ticks_csv(d));
        std::ostringstream log;
        write_event_log(log, d.events);
        put("events_day" + n + ".jsonl", log.str());
    }
    put("daily_summary.csv", format_daily_summary_csv(days));
    put("durations.txt", format_duration_matrix(kb.durations));
    put("noshow.txt", format_noshow_model(kb.noshow));

    std::string m = "slotflow-manifest 1\n";
    m += "artifact_version " SLOTFLOW_VERSION "\n";
    m += "scenario " + config.name + '\n';
    m += "config_hash " + scenario_hash(config) + '\n';
    m += "seed " + std::to_string(config.seed) + '\n';
    m += "days " + std::to_string(days.size()) + '\n';
    m += "model_version " + std::to_string(kb.version) + '\n';
    for (const auto& f : files)
        m += "file " + f + '\n';
    write_text_file(manifest, m);
    fs::remove(marker, ec);
}

}  // namespace slotflow
