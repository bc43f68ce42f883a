// psiotrl: run allocation scenarios, render result tables, inspect traces.
//
//   psiotrl run configs/*.json -o results [--seed N]... [--allocator fixed|sarsa] [--factor F]...
//   psiotrl tables results [-o other_dir]
//   psiotrl trace results/traces/00_AL_BL_BL__sarsa__seed1.jsonl [--kind Step]

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "psiotrl/psiotrl.hpp"

namespace fs = std::filesystem;
using namespace psiotrl;

namespace {

std::string triple(const env::PerQueue& v) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "(%.2f,%.2f,%.2f)", v[0], v[1], v[2]);
    return buf;
}

std::string describe(const msg::TraceRecord& r) {
    std::string out = std::to_string(msg::timestamp_of(r)) + "\t" + msg::kind_name(r) + "\t";
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, msg::Message>) {
                std::visit(
                    [&](const auto& p) {
                        using P = std::decay_t<decltype(p)>;
                        if constexpr (std::is_same_v<P, msg::Subscribe>) {
                            out += "topic=B" + std::to_string(static_cast<int>(p.topic)) +
                                   " qos=" + std::string(env::to_string(p.qos));
                        } else if constexpr (std::is_same_v<P, msg::Metadata>) {
                            out += "subscribers=(" + std::to_string(p.subscribers[0]) + "," +
                                   std::to_string(p.subscribers[1]) + "," +
                                   std::to_string(p.subscribers[2]) + ") occupancy=" + triple(p.occupancy);
                        } else if constexpr (std::is_same_v<P, msg::BandwidthNotify>) {
                            out += "rates=" + triple(p.rates);
                        } else {
                            char buf[64];
                            std::snprintf(buf, sizeof buf, " volume=%.3f", p.volume);
                            out += "topic=B" + std::to_string(static_cast<int>(p.topic)) + buf;
                        }
                    },
                    v.payload);
            } else if constexpr (std::is_same_v<T, msg::AlarmRecord>) {
                char buf[96];
                std::snprintf(buf, sizeof buf, "queue=B%d occupancy=%.2f threshold=%.2f",
                              static_cast<int>(v.event.queue), v.event.occupancy, v.event.threshold);
                out += buf;
            } else if constexpr (std::is_same_v<T, msg::EpisodeStart>) {
                out += "episode=" + std::to_string(v.episode) + " state=" + v.state;
            } else if constexpr (std::is_same_v<T, msg::StepEntry>) {
                char buf[64];
                std::snprintf(buf, sizeof buf, " reward=%.3f", v.reward);
                out += "episode=" + std::to_string(v.episode) + " step=" + std::to_string(v.step) +
                       " state=" + v.state + " action=" +
                       (v.action ? env::decode_action(static_cast<std::size_t>(*v.action)).label() : "fixed") +
                       buf + " rates=" + triple(v.rates) + " occupancy=" + triple(v.occupancy) +
                       (v.rejected ? " REJECTED" : "");
            } else {
                out += "episode=" + std::to_string(v.episode) + " steps=" + std::to_string(v.steps) +
                       " reason=" + v.reason;
            }
        },
        r);
    return out;
}

int cmd_run(const std::vector<std::string>& paths, const std::string& out_dir,
            const std::vector<std::uint64_t>& seeds, const std::string& allocator,
            const std::vector<double>& factors) {
    std::vector<harness::ScenarioConfig> cfgs;
    for (const auto& p : paths) {
        harness::ScenarioConfig base = harness::load_config(p);
        if (!seeds.empty()) base.seeds = seeds;
        if (allocator == "fixed") {
            const int horizon = std::holds_alternative<harness::FixedRule>(base.allocator)
                                    ? std::get<harness::FixedRule>(base.allocator).horizon_steps
                                    : harness::FixedRule{}.horizon_steps;
            for (double f : factors) {
                harness::ScenarioConfig c = base;
                c.allocator = harness::FixedRule{f, horizon};
                cfgs.push_back(std::move(c));
            }
        } else {
            if (allocator == "sarsa" && !std::holds_alternative<harness::SarsaAllocator>(base.allocator)) {
                base.allocator = harness::SarsaAllocator{};
            }
            cfgs.push_back(std::move(base));
        }
    }

    const auto reports = harness::run_suite(cfgs);
    harness::write_outputs(reports, cfgs, out_dir);

    std::ifstream text(fs::path(out_dir) / "tables.txt");
    std::cout << text.rdbuf();

    int failures = 0;
    for (const auto& r : reports) {
        for (const auto* f : r.failures()) {
            std::cerr << "FAILED " << r.scenario << " [" << r.allocator << "] seed " << f->seed << ": "
                      << *f->error << '\n';
            ++failures;
        }
    }
    std::cout << "\n" << reports.size() << " scenario(s), " << failures << " failed run(s); outputs in "
              << out_dir << '\n';
    return failures == 0 ? 0 : 1;
}

int cmd_tables(const std::string& source, const std::string& out_dir) {
    fs::path file = source;
    if (fs::is_directory(file)) file /= "reports.json";
    const auto reports = harness::load_reports(file);
    const fs::path dir = out_dir.empty() ? file.parent_path() : fs::path(out_dir);
    harness::render_tables(reports, dir);
    std::ifstream text(dir / "tables.txt");
    std::cout << text.rdbuf();
    return 0;
}

int cmd_trace(const std::string& file, const std::string& kind, bool raw) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file);
    const msg::Trace trace = msg::read_trace(in);
    for (const auto& r : trace.records()) {
        if (!kind.empty() && msg::kind_name(r) != kind) continue;
        std::cout << (raw ? msg::to_json(r).dump() : describe(r)) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pub/Sub aggregator bandwidth allocation: fixed rule vs. SARSA"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run scenario configs and write tables, traces and a manifest");
    std::vector<std::string> configs;
    std::string out_dir = "results";
    std::vector<std::uint64_t> seeds;
    std::string allocator;
    std::vector<double> factors;
    run->add_option("configs", configs, "Scenario config files (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("-o,--out", out_dir, "Output directory")->capture_default_str();
    run->add_option("--seed", seeds, "Override the configured seeds (repeatable)");
    run->add_option("--allocator", allocator, "Override the configured allocator")
        ->check(CLI::IsMember({"fixed", "sarsa"}));
    run->add_option("--factor", factors, "Fixed-rule factor(s) when --allocator fixed (default 1.15)");

    auto* tables = app.add_subcommand("tables", "Re-render result tables from stored reports");
    std::string source;
    std::string tables_out;
    tables->add_option("source", source, "Run output directory or reports.json")->required();
    tables->add_option("-o,--out", tables_out, "Where to write the tables (default: next to the reports)");

    auto* trace = app.add_subcommand("trace", "Dump a run's message and step trace");
    std::string trace_file;
    std::string kind;
    bool raw = false;
    trace->add_option("file", trace_file, "Trace file (.jsonl)")->required()->check(CLI::ExistingFile);
    trace->add_option("--kind", kind, "Only records of this kind (Subscribe, Step, Alarm, ...)");
    trace->add_flag("--json", raw, "Print the raw JSON records");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            if (factors.empty()) factors.push_back(1.15);
            return cmd_run(configs, out_dir, seeds, allocator, factors);
        }
        if (*tables) return cmd_tables(source, tables_out);
        if (*trace) return cmd_trace(trace_file, kind, raw);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
