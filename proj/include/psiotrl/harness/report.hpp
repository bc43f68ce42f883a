#pragma once

// Result tables, stored reports and the on-disk output layout of a suite run:
//
//   <out>/manifest.json                  config hashes and seeds
//   <out>/reports.json                   per-seed outcomes, re-renderable
//   <out>/table_<allocator>.csv          one row per scenario
//   <out>/aggregates_<allocator>.csv     means and 95% half-widths
//   <out>/tables.txt                     all tables, human-readable
//   <out>/traces/<NN>_<scenario>__<allocator>__seed<S>.jsonl

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "psiotrl/harness/suite.hpp"
#include "psiotrl/orchestrator.hpp"

namespace psiotrl::harness {

inline constexpr std::array<const char*, 5> kTableColumns{"Initial QS", "Final QS", "Final TR",
                                                          "Packet Loss", "Link Occupation"};

struct TableRow {
    std::string initial;
    std::array<long long, 3> occupancy{};
    std::array<long long, 3> rates{};
    std::array<long long, 3> loss{};
    long long link_occupation = 0;  // sum of the rounded rates
};

inline long long to_table_int(double v) { return static_cast<long long>(orch::round_half_up(v)); }

inline TableRow table_row(const RunReport& r) {
    TableRow row;
    row.initial = r.initial_label;
    const auto& a = r.aggregates;
    for (std::size_t i = 0; i < 3; ++i) {
        row.occupancy[i] = to_table_int(a.occupancy[i].mean);
        row.rates[i] = to_table_int(a.rates[i].mean);
        row.loss[i] = to_table_int(a.loss[i].mean);
    }
    row.link_occupation = row.rates[0] + row.rates[1] + row.rates[2];
    return row;
}

inline std::string tuple_str(const std::array<long long, 3>& v) {
    return "(" + std::to_string(v[0]) + "," + std::to_string(v[1]) + "," + std::to_string(v[2]) + ")";
}

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline std::string slug(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-') out += c;
        else if (c == '+') out += 'p';
        else out += '_';
    }
    return out;
}

}  // namespace detail

/// Five-column CSV, one row per report, in the given order.
inline std::string render_table_csv(std::span<const RunReport> reports) {
    std::string out;
    for (std::size_t i = 0; i < kTableColumns.size(); ++i) {
        if (i) out += ',';
        out += kTableColumns[i];
    }
    out += '\n';
    for (const auto& r : reports) {
        const TableRow row = table_row(r);
        out += detail::csv_field(row.initial) + ',' + detail::csv_field(tuple_str(row.occupancy)) + ',' +
               detail::csv_field(tuple_str(row.rates)) + ',' + detail::csv_field(tuple_str(row.loss)) +
               ',' + std::to_string(row.link_occupation) + '\n';
    }
    return out;
}

inline std::string render_table_text(const std::string& title, std::span<const RunReport> reports) {
    std::ostringstream os;
    char line[160];
    os << title << '\n';
    std::snprintf(line, sizeof line, "%-12s %-14s %-14s %-14s %s\n", kTableColumns[0], kTableColumns[1],
                  kTableColumns[2], kTableColumns[3], kTableColumns[4]);
    os << line;
    for (const auto& r : reports) {
        const TableRow row = table_row(r);
        std::snprintf(line, sizeof line, "%-12s %-14s %-14s %-14s %lld\n", row.initial.c_str(),
                      tuple_str(row.occupancy).c_str(), tuple_str(row.rates).c_str(),
                      tuple_str(row.loss).c_str(), row.link_occupation);
        os << line;
    }
    return os.str();
}

inline std::string render_aggregates_csv(std::span<const RunReport> reports) {
    std::string out = "scenario,metric,mean,half_width,n\n";
    auto emit = [&](const std::string& scenario, const std::string& metric, const stats::Summary& s) {
        out += detail::csv_field(scenario) + ',' + metric + ',' + detail::fixed6(s.mean) + ',' +
               (s.half_width ? detail::fixed6(*s.half_width) : std::string("n/a")) + ',' +
               std::to_string(s.count) + '\n';
    };
    for (const auto& r : reports) {
        const auto& a = r.aggregates;
        for (std::size_t i = 0; i < 3; ++i) emit(r.scenario, "occupancy_B" + std::to_string(i + 1), a.occupancy[i]);
        for (std::size_t i = 0; i < 3; ++i) emit(r.scenario, "rate_T" + std::to_string(i + 1), a.rates[i]);
        for (std::size_t i = 0; i < 3; ++i) emit(r.scenario, "loss_P" + std::to_string(i + 1), a.loss[i]);
        emit(r.scenario, "link_occupation", a.link_occupation);
        emit(r.scenario, "steps", a.steps);
    }
    return out;
}

/// Reports grouped by allocator, groups in first-appearance order.
inline std::vector<std::pair<std::string, std::vector<RunReport>>> group_by_allocator(
    std::span<const RunReport> reports) {
    std::vector<std::pair<std::string, std::vector<RunReport>>> groups;
    for (const auto& r : reports) {
        auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == r.allocator; });
        if (it == groups.end()) {
            groups.push_back({r.allocator, {}});
            it = std::prev(groups.end());
        }
        it->second.push_back(r);
    }
    return groups;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << content;
}

/// Writes table_*.csv, aggregates_*.csv and tables.txt into `dir`.
inline std::vector<std::filesystem::path> render_tables(std::span<const RunReport> reports,
                                                        const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    std::string text;
    for (const auto& [label, group] : group_by_allocator(reports)) {
        const auto table = dir / ("table_" + detail::slug(label) + ".csv");
        write_file(table, render_table_csv(group));
        written.push_back(table);
        const auto agg = dir / ("aggregates_" + detail::slug(label) + ".csv");
        write_file(agg, render_aggregates_csv(group));
        written.push_back(agg);
        if (!text.empty()) text += '\n';
        text += render_table_text(label, group);
    }
    write_file(dir / "tables.txt", text);
    written.push_back(dir / "tables.txt");
    return written;
}

// ---------------------------------------------------------------------------
// reports.json

inline nlohmann::json to_json(const RunReport& r) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& s : r.runs) {
        nlohmann::json j = {{"seed", s.seed}, {"episodes", s.episodes}};
        if (s.error) {
            j["error"] = *s.error;
        } else {
            const auto& f = s.result.final_state;
            j["steps"] = s.result.steps_taken;
            j["reason"] = std::string(orch::to_string(s.result.terminal_reason));
            j["final_occupancy"] = f.occupancy;
            j["final_rates"] = f.rates;
            j["loss"] = f.loss;
            j["drained"] = f.drained;
            j["link_occupation"] = f.link_occupation();
        }
        runs.push_back(std::move(j));
    }
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(r.config_hash));
    return {{"scenario", r.scenario}, {"allocator", r.allocator}, {"initial", r.initial_label},
            {"config_hash", hash},    {"runs", runs}};
}

inline RunReport report_from_json(const nlohmann::json& j) {
    RunReport r;
    r.scenario = j.at("scenario").get<std::string>();
    r.allocator = j.at("allocator").get<std::string>();
    r.initial_label = j.at("initial").get<std::string>();
    r.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
    for (const auto& s : j.at("runs")) {
        SeedOutcome o;
        o.seed = s.at("seed").get<std::uint64_t>();
        o.episodes = s.at("episodes").get<int>();
        if (s.contains("error")) {
            o.error = s.at("error").get<std::string>();
        } else {
            o.result.steps_taken = s.at("steps").get<int>();
            o.result.terminal_reason = orch::terminal_reason_from_string(s.at("reason").get<std::string>());
            auto& f = o.result.final_state;
            f.occupancy = s.at("final_occupancy").get<env::PerQueue>();
            f.rates = s.at("final_rates").get<env::PerQueue>();
            f.loss = s.at("loss").get<env::PerQueue>();
            f.drained = s.at("drained").get<env::PerQueue>();
        }
        r.runs.push_back(std::move(o));
    }
    r.aggregates = aggregate_runs(r.runs);
    return r;
}

inline std::vector<RunReport> load_reports(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    const auto j = nlohmann::json::parse(in);
    std::vector<RunReport> out;
    for (const auto& r : j.at("reports")) out.push_back(report_from_json(r));
    return out;
}

inline std::string trace_file_name(std::size_t index, const RunReport& r, std::uint64_t seed) {
    char prefix[32];
    std::snprintf(prefix, sizeof prefix, "%02zu_", index);
    return prefix + detail::slug(r.scenario) + "__" + detail::slug(r.allocator) + "__seed" +
           std::to_string(seed) + ".jsonl";
}

/// Everything a `run` produces. Byte-identical for identical configs and seeds.
inline void write_outputs(std::span<const RunReport> reports, std::span<const ScenarioConfig> cfgs,
                          const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "traces");

    nlohmann::json all = nlohmann::json::array();
    for (const auto& r : reports) all.push_back(to_json(r));
    write_file(dir / "reports.json", nlohmann::json{{"reports", all}}.dump(2) + "\n");

    nlohmann::json manifest = nlohmann::json::array();
    for (std::size_t i = 0; i < cfgs.size(); ++i) {
        char hash[17];
        std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(cfgs[i])));
        manifest.push_back({{"scenario", cfgs[i].name},
                            {"allocator", allocator_label(cfgs[i].allocator)},
                            {"config_hash", hash},
                            {"seeds", cfgs[i].seeds},
                            {"config", to_json(cfgs[i])}});
    }
    write_file(dir / "manifest.json", nlohmann::json{{"runs", manifest}}.dump(2) + "\n");

    for (std::size_t i = 0; i < reports.size(); ++i) {
        for (const auto& s : reports[i].runs) {
            std::ofstream f(dir / "traces" / trace_file_name(i, reports[i], s.seed),
                            std::ios::binary | std::ios::trunc);
            msg::write_trace(f, s.trace);
        }
    }
    render_tables(reports, dir);
}

}  // namespace psiotrl::harness
