#include "slotflow/error.hpp"
#include "slotflow/events.hpp"
#include "slotflow/io.hpp"
#include "slotflow/kiosk_queue.hpp"
#include "slotflow/mapek.hpp"
#include "slotflow/scenario.hpp"
#include "slotflow/simulator.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace slotflow;

namespace {

struct Common {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> policy;
};

ScenarioConfig load_config(const Common& c)
{
    ScenarioConfig cfg = c.scenario.empty() ? default_scenario() : load_scenario(c.scenario);
    if (c.seed)
        cfg.seed = *c.seed;
    if (c.policy) {
        auto p = parse_release_policy(*c.policy);
        if (!p)
            throw Error(ErrorCode::invalid_argument,
                        "unknown policy '" + *c.policy + "' (expected all_at_open or spread_over_day)");
        cfg.release = *p;
    }
    cfg.validate();
    return cfg;
}

std::vector<Event> load_events(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::io_error, "cannot open " + path);
    try {
        return read_event_log(in);
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.what());
    }
}

std::string default_out()
{
    if (const char* env = std::getenv("SLOTFLOW_OUT"); env && *env)
        return env;
    return "slotflow_out";
}

void emit(const std::string& text, const std::string& out_path)
{
    if (out_path.empty())
        std::cout << text;
    else
        write_text_file(out_path, text);
}

int cmd_simulate(const Common& common, const std::string& out, int days)
{
    const auto cfg = load_config(common);
    auto kb = truthful_knowledge(cfg);
    std::vector<DayOverride> overrides;
    const auto results = run_days(cfg, kb, days, overrides);
    for (const auto& r : results) {
        const auto why = check_conservation(r);
        if (!why.empty())
            throw Error(ErrorCode::invariant_violation, "day " + std::to_string(r.day + 1) + ": " + why);
    }
    write_report_bundle(out, cfg, results, kb);
    std::cout << format_daily_summary_csv(results);
    std::cout << "report written to " << out << '\n';
    return 0;
}

int cmd_allocate(const std::string& problem_path, const std::string& out)
{
    const auto problem = parse_problem(read_text_file(problem_path));
    const auto plan = solve_allocation(problem);
    emit(format_plan(plan), out);
    return 0;
}

int cmd_fit_duration(const Common& common, const std::vector<std::string>& logs, const std::string& out,
                     bool keep_censored)
{
    const auto cfg = load_config(common);
    std::vector<VisitRecord> records;
    for (const auto& path : logs)
        for (const auto& v : visits_from_events(load_events(path), cfg.grid.num_slots))
            if (keep_censored || !v.censored)
                records.push_back(v.record);
    const auto classes = cfg.class_map();
    const auto m = fit_duration_matrix(records, cfg.grid, classes, cfg.d_max, cfg.min_row_samples);
    std::string text = format_duration_matrix(m);
    text += "# visits " + std::to_string(records.size()) + '\n';
    for (const auto& c : classes.classes()) {
        if (c.begin == c.end)
            continue;
        char buf[96];
        std::snprintf(buf, sizeof buf, "# mean_minutes %s %.1f\n", std::string(to_string(c.label)).c_str(),
                      mean_duration(m, c, cfg.grid));
        text += buf;
    }
    emit(text, out);
    return 0;
}

bool looks_like_table(const std::string& text)
{
    return text.rfind("date,issued,noshow,percent", 0) == 0;
}

int cmd_fit_noshow(const Common& common, const std::vector<std::string>& inputs, const std::string& out)
{
    std::string text;
    if (inputs.size() == 1 && looks_like_table(read_text_file(inputs[0]))) {
        const auto table = parse_noshow_table(read_text_file(inputs[0]));
        text = "date,issued,noshow,noshow_percent\n";
        for (const auto& day : table) {
            const auto tickets = tickets_from_daily(day);
            char buf[128];
            std::snprintf(buf, sizeof buf, "%s,%lld,%lld,%.4f\n", day.date.c_str(), static_cast<long long>(day.issued),
                          static_cast<long long>(day.noshow), 100.0 * daily_noshow_rate(tickets));
            text += buf;
        }
        emit(text, out);
        return 0;
    }
    const auto cfg = load_config(common);
    std::vector<TicketRecord> tickets;
    for (const auto& path : inputs) {
        const auto t = tickets_from_events(load_events(path));
        tickets.insert(tickets.end(), t.begin(), t.end());
    }
    const auto model = fit_noshow(tickets, cfg.noshow_truth.bucket_edges);
    text = format_noshow_model(model);
    char buf[96];
    std::snprintf(buf, sizeof buf, "# tickets %zu person_rate %.4f\n", tickets.size(), daily_noshow_rate(tickets));
    text += buf;
    emit(text, out);
    return 0;
}

int cmd_size_kiosks(std::int64_t arrivals, double tau, double max_wait)
{
    const int k = min_kiosks(arrivals, tau, max_wait);
    std::cout << "kiosks " << k << '\n';
    std::cout << "kiosks,worst_case_wait_s,within_limit\n";
    for (int j = std::max(1, k - 1); j <= k + 1; ++j) {
        const double w = worst_case_wait(arrivals, KioskFleet{j, tau});
        std::printf("%d,%.0f,%s\n", j, w, w <= max_wait ? "yes" : "no");
    }
    return 0;
}

int cmd_replay(const Common& common, const std::vector<std::string>& logs, const std::string& out)
{
    const auto cfg = load_config(common);
    auto kb = truthful_knowledge(cfg);
    std::string text = "day,boundary,version,verdict,feasible,offered\n";
    for (std::size_t d = 0; d < logs.size(); ++d) {
        const auto ticks = replay_day(kb, load_events(logs[d]));
        for (const auto& t : ticks) {
            std::int64_t offered = 0;
            for (auto a : t.snapshot.availability)
                offered += a;
            text += std::to_string(d + 1) + ',' + std::to_string(t.snapshot.boundary) + ',' +
                    std::to_string(t.snapshot.version) + ',' + std::string(to_string(t.verdict)) + ',' +
                    (t.snapshot.feasible ? "1" : "0") + ',' + std::to_string(offered) + '\n';
        }
    }
    emit(text, out);
    if (!out.empty())
        std::cout << serialize(kb);
    return 0;
}

std::vector<std::map<std::string, std::string>> read_csv(const fs::path& path)
{
    std::istringstream in(read_text_file(path));
    std::string line;
    std::vector<std::string> header;
    std::vector<std::map<std::string, std::string>> rows;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            cells.push_back(cell);
        if (header.empty()) {
            header = cells;
            continue;
        }
        if (cells.size() != header.size())
            throw Error(ErrorCode::parse_error, path.string() + ": row width differs from header");
        std::map<std::string, std::string> row;
        for (std::size_t i = 0; i < cells.size(); ++i)
            row[header[i]] = cells[i];
        rows.push_back(std::move(row));
    }
    return rows;
}

int cmd_report(const std::string& dir)
{
    const fs::path root(dir);
    if (fs::exists(root / "FAILED"))
        throw Error(ErrorCode::io_error, dir + " holds an incomplete report bundle");
    const auto cfg = load_scenario(root / "scenario.json");
    const auto durations = parse_duration_matrix(read_text_file(root / "durations.txt"));
    const auto summary = read_csv(root / "daily_summary.csv");
    const int n = cfg.grid.num_slots;

    // Daily visitors.
    std::string visitors = "day,date,issued,shows,noshow_rate\n";
    for (const auto& r : summary)
        visitors += r.at("day") + ',' + r.at("date") + ',' + r.at("issued") + ',' + r.at("shows") + ',' +
                    r.at("noshow_rate") + '\n';

    // Duration histogram, predicted vs simulated exits and no-shows by slot, pooled over days.
    std::vector<std::int64_t> hist(cfg.d_max, 0);
    std::vector<double> entries(n, 0.0), exits(n, 0.0), noshows(n, 0.0), sales(n, 0.0);
    for (std::size_t d = 1; d <= summary.size(); ++d) {
        for (const auto& v : visits_from_events(load_events((root / ("events_day" + std::to_string(d) + ".jsonl")).string()), n))
            hist[std::min(v.record.duration_slots, cfg.d_max) - 1] += v.record.group_size;
        for (const auto& r : read_csv(root / ("slots_day" + std::to_string(d) + ".csv"))) {
            const int s = std::stoi(r.at("slot"));
            entries[s] += std::stod(r.at("entries"));
            exits[s] += std::stod(r.at("exits"));
            noshows[s] += std::stod(r.at("noshows"));
            sales[s] += std::stod(r.at("sales"));
        }
    }
    const double days = std::max<double>(1.0, static_cast<double>(summary.size()));
    std::string histogram = "duration_slots,duration_minutes,persons\n";
    for (int d = 1; d <= cfg.d_max; ++d)
        histogram += std::to_string(d) + ',' + std::to_string(d * cfg.grid.slot_length_minutes) + ',' +
                     std::to_string(hist[d - 1]) + '\n';

    for (auto& e : entries)
        e /= days;
    const auto predicted = fold_after_closing(predict_exits(entries, durations), n);
    std::string exit_table = "slot,time,predicted_exits,simulated_exits\n";
    char buf[128];
    for (int s = 0; s < n; ++s) {
        std::snprintf(buf, sizeof buf, "%d,%s,%.3f,%.3f\n", s, wall_time(cfg.grid, s).c_str(), predicted[s],
                      exits[s] / days);
        exit_table += buf;
    }
    std::string noshow_table = "slot,time,sales,noshows,noshow_rate\n";
    for (int s = 0; s < n; ++s) {
        std::snprintf(buf, sizeof buf, "%d,%s,%.3f,%.3f,%.4f\n", s, wall_time(cfg.grid, s).c_str(), sales[s] / days,
                      noshows[s] / days, sales[s] > 0 ? noshows[s] / sales[s] : 0.0);
        noshow_table += buf;
    }

    const std::pair<const char*, const std::string*> tables[] = {
        {"report_daily_visitors.csv", &visitors},
        {"report_duration_histogram.csv", &histogram},
        {"report_exits.csv", &exit_table},
        {"report_noshow_by_slot.csv", &noshow_table},
    };
    for (const auto& [name, text] : tables) {
        write_text_file(root / name, *text);
        std::cout << "== " << name << '\n' << *text << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"slotflow: timed-entry allocation, behavior models and visitor simulation"};
    app.set_version_flag("--version", SLOTFLOW_VERSION);
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--scenario", common.scenario, "Scenario JSON file (default: built-in scenario)");
        sub->add_option("--seed", common.seed, "Override the scenario seed");
        sub->add_option("--policy", common.policy, "Release policy: all_at_open or spread_over_day");
    };

    std::string out;
    int days = 1;
    auto* simulate = app.add_subcommand("simulate", "Simulate days and write a report bundle");
    add_common(simulate);
    simulate->add_option("--out", out, "Output directory (default: $SLOTFLOW_OUT or ./slotflow_out)");
    simulate->add_option("--days", days, "Consecutive days sharing one knowledge base")->check(CLI::PositiveNumber);

    std::string problem;
    auto* allocate = app.add_subcommand("allocate", "Solve an allocation problem file");
    allocate->add_option("problem", problem, "Problem file")->required();
    allocate->add_option("--out", out, "Write the plan here instead of stdout");

    std::vector<std::string> inputs;
    bool keep_censored = false;
    auto* fit_dur = app.add_subcommand("fit-duration", "Fit a duration matrix from event logs");
    add_common(fit_dur);
    fit_dur->add_option("logs", inputs, "Event logs")->required();
    fit_dur->add_option("--out", out, "Write the model here instead of stdout");
    fit_dur->add_flag("--keep-censored", keep_censored, "Keep visits that exit in the final slot");

    auto* fit_ns = app.add_subcommand("fit-noshow", "Fit a no-show model from event logs or a daily table");
    add_common(fit_ns);
    fit_ns->add_option("inputs", inputs, "Event logs, or one CSV with date,issued,noshow,percent")->required();
    fit_ns->add_option("--out", out, "Write the result here instead of stdout");

    std::int64_t arrivals = 0;
    double tau = 0.0;
    double max_wait = 0.0;
    auto* size = app.add_subcommand("size-kiosks", "Smallest kiosk fleet for a simultaneous batch");
    size->add_option("arrivals", arrivals, "Simultaneous arrivals A")->required();
    size->add_option("service", tau, "Service time per booking, seconds")->required();
    size->add_option("max_wait", max_wait, "Longest acceptable wait, seconds")->required();

    auto* replay = app.add_subcommand("replay", "Replay event logs through the control loop");
    add_common(replay);
    replay->add_option("logs", inputs, "Event logs, one per day in order")->required();
    replay->add_option("--out", out, "Write the tick trace here; the final state goes to stdout");

    std::string dir;
    auto* report = app.add_subcommand("report", "Summarize a report bundle");
    report->add_option("dir", dir, "Report bundle directory")->required();

    auto* dump = app.add_subcommand("print-scenario", "Print a scenario as canonical JSON");
    add_common(dump);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*simulate)
            return cmd_simulate(common, out.empty() ? default_out() : out, days);
        if (*allocate)
            return cmd_allocate(problem, out);
        if (*fit_dur)
            return cmd_fit_duration(common, inputs, out, keep_censored);
        if (*fit_ns)
            return cmd_fit_noshow(common, inputs, out);
        if (*size)
            return cmd_size_kiosks(arrivals, tau, max_wait);
        if (*replay)
            return cmd_replay(common, inputs, out);
        if (*report)
            return cmd_report(dir);
        if (*dump) {
            std::cout << scenario_to_json(load_config(common));
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "slotflow: " << to_string(e.code()) << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "slotflow: " << e.what() << '\n';
        return 3;
    }
    return 1;
}
