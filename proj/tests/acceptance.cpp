// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "psiotrl/psiotrl.hpp"
#include "toy_mdp.hpp"

using namespace psiotrl;
using namespace psiotrl::harness;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) detail = what;
        ok = ok && cond;
    }
};

int failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.ok = false;
        o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.ok && secs >= budget_s) {
        o.ok = false;
        o.detail = "over time budget";
    }
    std::printf("%s  %d  %-34s %7.3fs / %.0fs%s%s\n", o.ok ? "PASS" : "FAIL", id, title, secs, budget_s,
                o.detail.empty() ? "" : "  ", o.detail.c_str());
    failures += !o.ok;
}

ScenarioConfig scenario(const std::string& label) {
    ScenarioConfig c;
    c.name = label;
    c.initial_occupancies = *preload_from_label(label);
    return c;
}

ScenarioConfig fixed(const std::string& label, double factor) {
    ScenarioConfig c = scenario(label);
    c.allocator = FixedRule{factor, 2};
    return c;
}

const std::vector<std::string> kNormal{"AL,BL,BL", "AL,AL,BL", "AL,AL,AL"};
const std::vector<std::string> kAll{"AL,BL,BL", "AL,AL,BL", "AL,AL,AL", "+AL,BL,BL"};

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

int main() {
    criterion(1, "fixed rule exactness", 1, [] {
        Outcome o;
        const std::vector<std::pair<double, env::PerQueue>> want{
            {1.15, {40, 30, 30}}, {1.25, {44, 28, 28}}, {1.50, {53, 24, 23}}};
        for (const auto& label : kAll) {
            for (const auto& [factor, rates] : want) {
                const auto rep = run_scenario(fixed(label, factor));
                for (const auto& run : rep.runs) {
                    o.require(run.ok(), label + ": " + run.error.value_or(""));
                    const auto& s = run.result.final_state;
                    o.require(s.rates == rates, label + " factor " + std::to_string(factor) + " rates");
                    o.require(s.link_occupation() == 100.0, label + " link occupation");
                }
            }
        }
        return o;
    });

    std::vector<ScenarioConfig> sarsa_cfgs;
    for (const auto& label : kAll) sarsa_cfgs.push_back(scenario(label));
    std::vector<RunReport> sarsa;

    criterion(2, "SARSA success property", 30, [&] {
        Outcome o;
        sarsa = run_suite(sarsa_cfgs);
        for (std::size_t i = 0; i < kNormal.size(); ++i) {
            int good = 0;
            for (const auto& run : sarsa[i].runs) {
                const auto& s = run.result.final_state;
                const auto flags = env::encode_state(s, 50).flags;
                const bool no_loss = s.loss == env::PerQueue{0, 0, 0};
                const bool bl = kNormal[i] == "AL,AL,AL"
                                    ? flags[0] == env::Flag::BL && flags[1] == env::Flag::BL
                                    : env::EnvState{flags}.all_below();
                good += run.ok() && bl && (kNormal[i] == "AL,AL,AL" || no_loss);
            }
            o.require(good == 10, kNormal[i] + ": " + std::to_string(good) + "/10");
        }
        return o;
    });

    criterion(3, "priority ordering T1>T2>T3", 30, [&] {
        Outcome o;
        for (std::size_t i = 0; i < kNormal.size(); ++i) {
            int ordered = 0;
            for (const auto& run : sarsa[i].runs) {
                const auto& r = run.result.final_state.rates;
                ordered += r[0] > r[1] && r[1] > r[2];
            }
            o.require(ordered >= 9, kNormal[i] + ": " + std::to_string(ordered) + "/10");
        }
        return o;
    });

    criterion(4, "link occupation efficiency", 30, [&] {
        Outcome o;
        for (std::size_t i = 0; i < kAll.size(); ++i) {
            for (const auto& run : sarsa[i].runs) {
                o.require(run.result.final_state.link_occupation() <= 100.0 + env::kCapacityTolerance,
                          kAll[i] + " above capacity");
            }
            const double mean = sarsa[i].aggregates.link_occupation.mean;
            o.require(mean >= 85.0 && mean <= 100.0, kAll[i] + " mean " + std::to_string(mean));
        }
        return o;
    });

    criterion(5, "overload loss on B1 only", 30, [&] {
        Outcome o;
        std::vector<RunReport> reports{sarsa[3]};
        for (double f : {1.15, 1.25, 1.50}) reports.push_back(run_scenario(fixed("+AL,BL,BL", f)));
        for (const auto& rep : reports) {
            for (const auto& run : rep.runs) {
                const auto& loss = run.result.final_state.loss;
                o.require(loss[0] > 0 && loss[1] == 0 && loss[2] == 0, rep.allocator + " loss pattern");
            }
        }
        return o;
    });

    criterion(6, "toy MDP matches value iteration", 30, [] {
        Outcome o;
        const auto vi = toy::value_iteration(0.9);
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto policy = rl::greedy_policy(toy::train_sarsa(seed, 10000, rl::RlParams{0.1, 0.9, 0.1}));
            o.require(policy[0] == vi.policy[0] && policy[1] == vi.policy[1], "seed " + std::to_string(seed));
        }
        return o;
    });

    criterion(7, "unit and property checks", 10, [] {
        Outcome o;
        using Table = orch::AllocatorTable;
        const rl::RlParams p{0.2, 0.8, 0.0};
        o.require(rl::sarsa_update(Table{}, {4, 0, 1.0, 0, 0}, p).at(4, 0) == 0.2, "sarsa 0.2");
        Table q;
        q.set(4, 3, 0.5);
        q.set(0, 7, 0.25);
        o.require(std::abs(rl::sarsa_update(q, {4, 3, 1.0, 0, 7}, p).at(4, 3) - 0.64) < 1e-12, "sarsa 0.64");

        std::set<std::string> labels;
        for (std::size_t i = 0; i < env::kActionCount; ++i) {
            o.require(env::encode_action(env::decode_action(i)) == i, "action round trip");
            labels.insert(env::decode_action(i).label());
        }
        o.require(labels.size() == 27, "27 distinct actions");

        std::set<std::size_t> states;
        for (int m = 0; m < 8; ++m) {
            const auto s = env::AggregatorState::preloaded(
                {m & 4 ? 80.0 : 20.0, m & 2 ? 80.0 : 20.0, m & 1 ? 80.0 : 20.0}, {35, 25, 15});
            const std::size_t idx = env::encode_state(s, 50).index();
            o.require(idx == static_cast<std::size_t>(m), "state index");
            states.insert(idx);
        }
        o.require(states.size() == 8 && Table::size == 216, "state space cardinality");

        Rng rng(2718);
        for (int i = 0; i < 100000; ++i) {
            env::TrafficProfile tp;
            tp.inflow = {rng.uniform() * 15, rng.uniform() * 15, rng.uniform() * 15};
            const auto before = env::AggregatorState::preloaded(
                {rng.uniform() * 130, rng.uniform() * 100, rng.uniform() * 100},
                {rng.uniform() * 60, rng.uniform() * 60, rng.uniform() * 60});
            const auto after = env::simulate_ticks(before, tp, 1);
            for (std::size_t k = 0; k < 3; ++k) {
                const double balance = after.occupancy[k] + (after.drained[k] - before.drained[k]) +
                                       (after.loss[k] - before.loss[k]) - tp.inflow[k];
                if (std::abs(balance - before.occupancy[k]) > 1e-9) o.require(false, "volume conservation");
            }
        }

        std::vector<ScenarioConfig> cfgs{scenario("AL,AL,BL"), fixed("AL,BL,BL", 1.25)};
        const fs::path base = fs::temp_directory_path() / "psiotrl_acceptance";
        fs::remove_all(base);
        write_outputs(run_suite(cfgs), cfgs, base / "a");
        write_outputs(run_suite(cfgs), cfgs, base / "b");
        int csvs = 0;
        for (const auto& e : fs::directory_iterator(base / "a")) {
            if (e.path().extension() != ".csv") continue;
            ++csvs;
            o.require(slurp(e.path()) == slurp(base / "b" / e.path().filename()), "CSV differs");
        }
        o.require(csvs > 0, "no CSV written");
        fs::remove_all(base);
        return o;
    });

    std::printf("%s\n", failures ? "acceptance: FAILED" : "acceptance: all criteria passed");
    return failures ? 1 : 0;
}
