#pragma once

// Allocation policies acting on one aggregator: the fixed-rule baseline and
// the SARSA episode loop.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "psiotrl/aggregator_env.hpp"
#include "psiotrl/errors.hpp"
#include "psiotrl/random.hpp"
#include "psiotrl/rl_core.hpp"

namespace psiotrl::orch {

using env::AggregatorState;
using env::PerQueue;

using AllocatorTable = rl::QTable<env::kStateCount, env::kActionCount>;

enum class TerminalReason {
    ConstraintLimit,    // the chosen action would exceed link capacity
    PrioritySatisfied,  // T1 > T2 > T3 with every queue below threshold
    MaxAttempts,
    NotTriggered,  // harness only: no alarm, so no episode ran
};

constexpr std::string_view to_string(TerminalReason r) {
    switch (r) {
        case TerminalReason::ConstraintLimit: return "ConstraintLimit";
        case TerminalReason::PrioritySatisfied: return "PrioritySatisfied";
        case TerminalReason::MaxAttempts: return "MaxAttempts";
        case TerminalReason::NotTriggered: return "NotTriggered";
    }
    return "?";
}

inline TerminalReason terminal_reason_from_string(std::string_view s) {
    for (auto r : {TerminalReason::ConstraintLimit, TerminalReason::PrioritySatisfied,
                   TerminalReason::MaxAttempts, TerminalReason::NotTriggered}) {
        if (to_string(r) == s) return r;
    }
    throw ValidationError("unknown terminal reason '" + std::string(s) + "'");
}

struct EpisodeConfig {
    int max_attempts = 400;
    double threshold = 50.0;
    double step_fraction = 0.10;
    rl::RlParams rl{};
    env::RewardWeights reward{};

    void validate() const {
        if (max_attempts < 1) throw ValidationError("max_attempts must be >= 1");
        if (!(threshold > 0.0 && threshold < 100.0)) {
            throw ValidationError("threshold must be in (0,100)");
        }
        if (!(step_fraction > 0.0 && step_fraction < 1.0)) {
            throw ValidationError("step_fraction must be in (0,1)");
        }
        rl.validate();
        reward.validate();
    }
};

/// One decision of an episode. `rates` is always the allocation in force
/// after the step; for a rejected action it is the previous allocation.
struct StepRecord {
    int step = 0;
    env::EnvState state{};
    std::optional<env::Action> action;  // empty for fixed-rule allocations
    double reward = 0.0;
    PerQueue rates{};
    PerQueue occupancy{};
    bool rejected = false;
};

struct EpisodeResult {
    AggregatorState initial_state{};
    AggregatorState final_state{};
    int steps_taken = 0;
    TerminalReason terminal_reason = TerminalReason::MaxAttempts;
    std::vector<StepRecord> trace;
    std::optional<PerQueue> rejected_rates;  // set on ConstraintLimit
};

/// Called once per step with the state before the step and after it.
using StepObserver =
    std::function<void(const StepRecord&, const AggregatorState& before, const AggregatorState& after)>;

inline double round_half_up(double v) { return std::floor(v + 0.5 + 1e-9); }

/// T1 = round(T1i * factor); the other two split what is left, with the odd
/// point going to T2.
inline PerQueue fixed_rule_allocate(const PerQueue& initial_rates, double factor) {
    if (!(factor > 0.0) || !std::isfinite(factor)) throw ValidationError("factor must be > 0");
    if (initial_rates[0] + initial_rates[1] + initial_rates[2] > env::kLinkCapacity + env::kCapacityTolerance) {
        throw ValidationError("initial rates exceed link capacity");
    }
    const double t1 = round_half_up(initial_rates[0] * factor);
    if (t1 > env::kLinkCapacity) {
        throw ValidationError("infeasible factor: T1 = " + std::to_string(t1) + " exceeds link capacity");
    }
    const double remaining = env::kLinkCapacity - t1;
    return {t1, std::ceil(remaining / 2.0), std::floor(remaining / 2.0)};
}

/// Terminal test on a candidate state. Order of precedence: capacity breach,
/// priority satisfied, attempt budget.
inline std::optional<TerminalReason> check_terminal(const AggregatorState& s, const env::EnvState& e,
                                                    int steps, const EpisodeConfig& cfg) {
    if (!env::constraint_check(s)) return TerminalReason::ConstraintLimit;
    const auto& r = s.rates;
    if (r[0] > r[1] && r[1] > r[2] && e.all_below()) return TerminalReason::PrioritySatisfied;
    if (steps >= cfg.max_attempts) return TerminalReason::MaxAttempts;
    return std::nullopt;
}

struct SarsaEpisode {
    EpisodeResult result;
    AllocatorTable q;
};

/// One allocation episode driven by SARSA. The table passed in is the
/// agent's accumulated knowledge; the updated table is returned with the
/// result.
///
/// A capacity-breaching action ends the episode: the breaching allocation is
/// never applied, the step is charged the violation penalty and treated as
/// absorbing. A successful end is absorbing too. Running out of attempts is a
/// truncation, so that last update still bootstraps from the next action.
inline SarsaEpisode run_sarsa_episode(const AggregatorState& s0, const env::TrafficProfile& tp,
                                      AllocatorTable q, const EpisodeConfig& cfg, Rng& rng,
                                      const StepObserver& observer = {}) {
    cfg.validate();
    tp.validate();

    EpisodeResult res;
    res.initial_state = s0;
    AggregatorState state = s0;
    env::EnvState obs = env::encode_state(state, cfg.threshold);

    if (auto t = check_terminal(state, obs, 0, cfg)) {
        res.final_state = state;
        res.terminal_reason = *t;
        return {std::move(res), std::move(q)};
    }

    std::size_t action = rl::select_action(q, obs.index(), cfg.rl, rng);
    int steps = 0;
    for (;;) {
        const env::Action decoded = env::decode_action(action);
        AggregatorState candidate = env::apply_action(state, decoded, cfg.step_fraction);
        ++steps;

        StepRecord rec;
        rec.step = steps;
        rec.state = obs;
        rec.action = decoded;

        if (!env::constraint_check(candidate)) {
            const double reward = env::compute_reward(state, candidate, cfg.threshold, cfg.reward);
            q = rl::terminal_update(std::move(q), obs.index(), action, reward, cfg.rl);
            rec.reward = reward;
            rec.rates = state.rates;
            rec.occupancy = state.occupancy;
            rec.rejected = true;
            if (observer) observer(rec, state, state);
            res.trace.push_back(rec);
            res.rejected_rates = candidate.rates;
            res.terminal_reason = TerminalReason::ConstraintLimit;
            break;
        }

        const AggregatorState next = env::simulate_ticks(candidate, tp, tp.ticks_per_step);
        const env::EnvState next_obs = env::encode_state(next, cfg.threshold);
        const auto term = check_terminal(next, next_obs, steps, cfg);
        const bool success = term == TerminalReason::PrioritySatisfied;
        const double reward = env::compute_reward(state, next, cfg.threshold, cfg.reward, success);

        rec.reward = reward;
        rec.rates = next.rates;
        rec.occupancy = next.occupancy;
        if (observer) observer(rec, state, next);
        res.trace.push_back(rec);

        if (success) {
            q = rl::terminal_update(std::move(q), obs.index(), action, reward, cfg.rl);
            state = next;
            res.terminal_reason = *term;
            break;
        }
        const std::size_t next_action = rl::select_action(q, next_obs.index(), cfg.rl, rng);
        q = rl::sarsa_update(std::move(q),
                             rl::Transition{obs.index(), action, reward, next_obs.index(), next_action},
                             cfg.rl);
        state = next;
        obs = next_obs;
        action = next_action;
        if (term) {
            res.terminal_reason = *term;
            break;
        }
    }

    res.final_state = state;
    res.steps_taken = steps;
    return {std::move(res), std::move(q)};
}

/// The fixed-rule baseline: one allocation, then `horizon_steps` steps'
/// worth of ticks with that allocation held.
inline EpisodeResult run_fixed_episode(const AggregatorState& s0, const env::TrafficProfile& tp,
                                       double factor, const EpisodeConfig& cfg, int horizon_steps,
                                       const StepObserver& observer = {}) {
    tp.validate();
    if (horizon_steps < 1) throw ValidationError("horizon_steps must be >= 1");

    EpisodeResult res;
    res.initial_state = s0;
    AggregatorState allocated = s0;
    allocated.rates = fixed_rule_allocate(s0.rates, factor);
    const AggregatorState next = env::simulate_ticks(allocated, tp, tp.ticks_per_step * horizon_steps);

    StepRecord rec;
    rec.step = 1;
    rec.state = env::encode_state(s0, cfg.threshold);
    rec.reward = env::compute_reward(s0, next, cfg.threshold, cfg.reward);
    rec.rates = next.rates;
    rec.occupancy = next.occupancy;
    if (observer) observer(rec, s0, next);
    res.trace.push_back(rec);

    res.final_state = next;
    res.steps_taken = 1;
    const auto t = check_terminal(next, env::encode_state(next, cfg.threshold), cfg.max_attempts, cfg);
    res.terminal_reason = t.value_or(TerminalReason::MaxAttempts);
    return res;
}

}  // namespace psiotrl::orch
