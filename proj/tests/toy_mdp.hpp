#pragma once

// A two-state, two-action MDP with known dynamics, plus a value-iteration
// solver used as an oracle for the tabular learners. Test-only.
//
//   state 0: a0 pays 1 and mostly stays; a1 pays 0 and mostly moves to 1
//   state 1: a0 pays 0 and mostly moves to 0; a1 pays 2 and mostly stays
//
// A myopic agent prefers a0 in state 0; with enough discounting weight the
// optimal policy is a1 in both states.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>

#include "psiotrl/random.hpp"
#include "psiotrl/rl_core.hpp"

namespace toy {

inline constexpr std::size_t kStates = 2;
inline constexpr std::size_t kActions = 2;

// kNext[s][a][s'] and kReward[s][a]
inline constexpr std::array<std::array<std::array<double, kStates>, kActions>, kStates> kNext{{
    {{{0.9, 0.1}, {0.2, 0.8}}},
    {{{0.8, 0.2}, {0.1, 0.9}}},
}};
inline constexpr std::array<std::array<double, kActions>, kStates> kReward{{{1.0, 0.0}, {0.0, 2.0}}};

struct ValueIterationResult {
    std::array<double, kStates> value{};
    std::array<std::size_t, kStates> policy{};
    int sweeps = 0;
};

inline ValueIterationResult value_iteration(double gamma, double tol = 1e-12) {
    ValueIterationResult out;
    for (;;) {
        ++out.sweeps;
        double delta = 0.0;
        std::array<double, kStates> next{};
        for (std::size_t s = 0; s < kStates; ++s) {
            double best = -1e300;
            for (std::size_t a = 0; a < kActions; ++a) {
                double q = kReward[s][a];
                for (std::size_t s2 = 0; s2 < kStates; ++s2) q += gamma * kNext[s][a][s2] * out.value[s2];
                if (q > best) {
                    best = q;
                    out.policy[s] = a;
                }
            }
            next[s] = best;
            delta = std::max(delta, std::abs(best - out.value[s]));
        }
        out.value = next;
        if (delta < tol) break;
    }
    return out;
}

inline std::size_t step(std::size_t s, std::size_t a, psiotrl::Rng& rng) {
    return rng.uniform() < kNext[s][a][0] ? 0 : 1;
}

/// Continuing-task SARSA for `steps` transitions using the library's
/// selection and update rules.
inline psiotrl::rl::QTable<kStates, kActions> train_sarsa(std::uint64_t seed, int steps,
                                                         const psiotrl::rl::RlParams& p) {
    psiotrl::Rng rng(seed);
    psiotrl::rl::QTable<kStates, kActions> q;
    std::size_t s = 0;
    std::size_t a = psiotrl::rl::select_action(q, s, p, rng);
    for (int t = 0; t < steps; ++t) {
        const std::size_t s2 = step(s, a, rng);
        const double r = kReward[s][a];
        const std::size_t a2 = psiotrl::rl::select_action(q, s2, p, rng);
        q = psiotrl::rl::sarsa_update(std::move(q), {s, a, r, s2, a2}, p);
        s = s2;
        a = a2;
    }
    return q;
}

}  // namespace toy
