#pragma once

// Runs scenarios over their seeds and turns the outcomes into reports.

#include <array>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "psiotrl/aggregator_env.hpp"
#include "psiotrl/harness/config.hpp"
#include "psiotrl/orchestrator.hpp"
#include "psiotrl/pubsub_msg.hpp"
#include "psiotrl/random.hpp"
#include "psiotrl/stats.hpp"

namespace psiotrl::harness {

struct SeedOutcome {
    std::uint64_t seed = 0;
    orch::EpisodeResult result;  // last episode of the run
    int episodes = 0;
    msg::Trace trace;
    std::optional<std::string> error;

    bool ok() const { return !error.has_value(); }
};

struct Aggregates {
    std::array<stats::Summary, env::kQueueCount> occupancy{};
    std::array<stats::Summary, env::kQueueCount> rates{};
    std::array<stats::Summary, env::kQueueCount> loss{};
    stats::Summary link_occupation{};
    stats::Summary steps{};
};

struct RunReport {
    std::string scenario;
    std::string allocator;
    std::string initial_label;
    std::uint64_t config_hash = 0;
    std::vector<SeedOutcome> runs;
    Aggregates aggregates;

    std::vector<const SeedOutcome*> failures() const {
        std::vector<const SeedOutcome*> out;
        for (const auto& r : runs) {
            if (!r.ok()) out.push_back(&r);
        }
        return out;
    }
};

/// Mean and 95% Student-t half-width of every reported metric.
inline Aggregates aggregate(std::span<const orch::EpisodeResult> results) {
    Aggregates a;
    const std::size_t n = results.size();
    std::vector<double> xs(n);
    auto column = [&](auto&& get) {
        for (std::size_t k = 0; k < n; ++k) xs[k] = get(results[k]);
        return stats::summarize(xs);
    };
    for (std::size_t i = 0; i < env::kQueueCount; ++i) {
        a.occupancy[i] = column([i](const auto& r) { return r.final_state.occupancy[i]; });
        a.rates[i] = column([i](const auto& r) { return r.final_state.rates[i]; });
        a.loss[i] = column([i](const auto& r) { return r.final_state.loss[i]; });
    }
    a.link_occupation = column([](const auto& r) { return r.final_state.link_occupation(); });
    a.steps = column([](const auto& r) { return static_cast<double>(r.steps_taken); });
    return a;
}

inline Aggregates aggregate_runs(const std::vector<SeedOutcome>& runs) {
    std::vector<orch::EpisodeResult> ok;
    for (const auto& r : runs) {
        if (r.ok()) ok.push_back(r.result);
    }
    return aggregate(ok);
}

namespace detail {

inline msg::StepEntry step_entry(const orch::StepRecord& rec, msg::Tick now, int episode) {
    msg::StepEntry e;
    e.timestamp = now;
    e.episode = episode;
    e.step = rec.step;
    e.state = rec.state.label();
    if (rec.action) e.action = static_cast<int>(rec.action->index());
    e.reward = rec.reward;
    e.rates = rec.rates;
    e.occupancy = rec.occupancy;
    e.rejected = rec.rejected;
    return e;
}

}  // namespace detail

/// One seed of one scenario: subscriptions, then per episode the alarm
/// check, metadata to the orchestrator and the allocation loop itself, all
/// recorded in the trace.
inline SeedOutcome run_seed(const ScenarioConfig& cfg, std::uint64_t seed) {
    SeedOutcome out;
    out.seed = seed;
    msg::Broker broker;
    msg::Tick now = 0;

    try {
        const orch::EpisodeConfig ecfg = cfg.episode_config();
        ecfg.validate();
        cfg.traffic.validate();
        const env::AggregatorState s0 = cfg.initial_state();

        for (env::QueueId q : env::kQueues) {
            for (int k = 0; k < cfg.subscribers[env::slot(q)]; ++k) {
                broker.subscribe(q, env::qos_class(q), now);
            }
        }

        Rng rng(seed);
        orch::AllocatorTable q;
        const int episodes = std::visit(
            [](const auto& a) {
                if constexpr (std::is_same_v<std::decay_t<decltype(a)>, SarsaAllocator>) return a.episodes;
                else return 1;
            },
            cfg.allocator);

        for (int ep = 1; ep <= episodes; ++ep) {
            env::AggregatorState aggregator = s0;
            const auto alarms = broker.raise_alarms(aggregator, cfg.threshold, now);
            broker.metadata(aggregator, now);
            if (alarms.empty()) {
                orch::EpisodeResult idle;
                idle.initial_state = s0;
                idle.final_state = s0;
                idle.terminal_reason = orch::TerminalReason::NotTriggered;
                out.result = std::move(idle);
                out.episodes = ep;
                continue;
            }
            broker.record(msg::EpisodeStart{now, ep, env::encode_state(s0, cfg.threshold).label()});

            auto observe = [&](const orch::StepRecord& rec, const env::AggregatorState& before,
                               const env::AggregatorState& after) {
                if (!rec.rejected) {
                    broker.notify_bandwidth(aggregator, rec.rates, now);
                    const int ticks = std::holds_alternative<FixedRule>(cfg.allocator)
                                          ? cfg.traffic.ticks_per_step *
                                                std::get<FixedRule>(cfg.allocator).horizon_steps
                                          : cfg.traffic.ticks_per_step;
                    now += static_cast<msg::Tick>(ticks);
                    for (env::QueueId tq : env::kQueues) {
                        const std::size_t i = env::slot(tq);
                        broker.publish(tq, after.drained[i] - before.drained[i], now);
                    }
                    aggregator.occupancy = after.occupancy;
                }
                broker.record(detail::step_entry(rec, now, ep));
            };

            orch::EpisodeResult result;
            if (const auto* fixed = std::get_if<FixedRule>(&cfg.allocator)) {
                result = orch::run_fixed_episode(s0, cfg.traffic, fixed->factor, ecfg,
                                                 fixed->horizon_steps, observe);
            } else {
                auto episode = orch::run_sarsa_episode(s0, cfg.traffic, std::move(q), ecfg, rng, observe);
                q = std::move(episode.q);
                result = std::move(episode.result);
            }
            broker.record(msg::EpisodeEnd{now, ep, result.steps_taken,
                                          std::string(orch::to_string(result.terminal_reason))});
            out.result = std::move(result);
            out.episodes = ep;
        }
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    out.trace = broker.trace();
    return out;
}

inline RunReport run_scenario(const ScenarioConfig& cfg) {
    RunReport rep;
    rep.scenario = cfg.name;
    rep.allocator = allocator_label(cfg.allocator);
    rep.initial_label = occupancy_label(cfg.initial_occupancies, cfg.threshold);
    rep.config_hash = config_hash(cfg);
    for (std::uint64_t seed : cfg.seeds) rep.runs.push_back(run_seed(cfg, seed));
    rep.aggregates = aggregate_runs(rep.runs);
    return rep;
}

/// Every (scenario, seed) pair, in config order then seed order. A failing
/// seed is recorded in its report and does not stop its siblings.
inline std::vector<RunReport> run_suite(std::span<const ScenarioConfig> cfgs) {
    std::vector<RunReport> reports;
    reports.reserve(cfgs.size());
    for (const auto& c : cfgs) reports.push_back(run_scenario(c));
    return reports;
}

}  // namespace psiotrl::harness
