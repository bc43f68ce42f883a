#pragma once

// Tabular temporal-difference learning: a dense action-value table, the
// epsilon-greedy behaviour policy, the on-policy SARSA update and the
// off-policy Q-learning update (kept as a baseline). Nothing in here knows
// about queues or bandwidth.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "psiotrl/errors.hpp"
#include "psiotrl/random.hpp"

namespace psiotrl::rl {

struct RlParams {
    double alpha = 0.2;     // learning rate
    double gamma = 0.8;     // discount factor
    double epsilon = 0.02;  // exploration probability, constant for a run

    void validate() const {
        check("alpha", alpha);
        check("gamma", gamma);
        check("epsilon", epsilon);
    }

private:
    static void check(const char* name, double v) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ValidationError(std::string(name) + " must be in [0,1], got " + std::to_string(v));
        }
    }
};

/// Dense Q(state, action) table. Every entry starts at zero.
template <std::size_t States, std::size_t Actions>
class QTable {
    static_assert(States > 0 && Actions > 0);

public:
    static constexpr std::size_t state_count = States;
    static constexpr std::size_t action_count = Actions;
    static constexpr std::size_t size = States * Actions;

    double at(std::size_t state, std::size_t action) const {
        return values_[offset(state, action)];
    }

    void set(std::size_t state, std::size_t action, double value) {
        if (!std::isfinite(value)) {
            throw ValidationError("q-value must be finite");
        }
        values_[offset(state, action)] = value;
    }

    std::span<const double, Actions> row(std::size_t state) const {
        check_state(state);
        return std::span<const double, Actions>(values_.data() + state * Actions, Actions);
    }

    std::span<const double, States * Actions> values() const { return values_; }

    static void check_state(std::size_t state) {
        if (state >= States) {
            throw BoundsError("state index " + std::to_string(state) + " outside [0," +
                              std::to_string(States) + ")");
        }
    }

    static void check_action(std::size_t action) {
        if (action >= Actions) {
            throw BoundsError("action index " + std::to_string(action) + " outside [0," +
                              std::to_string(Actions) + ")");
        }
    }

    friend bool operator==(const QTable&, const QTable&) = default;

private:
    static std::size_t offset(std::size_t state, std::size_t action) {
        check_state(state);
        check_action(action);
        return state * Actions + action;
    }

    std::array<double, States * Actions> values_{};
};

/// One SARSA experience tuple <x_t, a_t, r_{t+1}, x_{t+1}, a_{t+1}>.
struct Transition {
    std::size_t state = 0;
    std::size_t action = 0;
    double reward = 0.0;
    std::size_t next_state = 0;
    std::size_t next_action = 0;
};

namespace detail {

inline void check_reward(double reward) {
    if (!std::isfinite(reward)) throw ValidationError("reward must be finite");
}

template <std::size_t S, std::size_t A>
QTable<S, A> move_toward(QTable<S, A> q, std::size_t state, std::size_t action, double target,
                         const RlParams& p) {
    const double old = q.at(state, action);
    q.set(state, action, old + p.alpha * (target - old));
    return q;
}

}  // namespace detail

/// Q(s,a) <- Q(s,a) + alpha * (r + gamma * Q(s',a') - Q(s,a)).
template <std::size_t S, std::size_t A>
QTable<S, A> sarsa_update(QTable<S, A> q, const Transition& t, const RlParams& p) {
    QTable<S, A>::check_state(t.state);
    QTable<S, A>::check_action(t.action);
    detail::check_reward(t.reward);
    const double target = t.reward + p.gamma * q.at(t.next_state, t.next_action);
    return detail::move_toward(std::move(q), t.state, t.action, target, p);
}

/// Update for a transition into an absorbing state: the bootstrap term is zero.
template <std::size_t S, std::size_t A>
QTable<S, A> terminal_update(QTable<S, A> q, std::size_t state, std::size_t action, double reward,
                             const RlParams& p) {
    detail::check_reward(reward);
    return detail::move_toward(std::move(q), state, action, reward, p);
}

/// Q(s,a) <- Q(s,a) + alpha * (r + gamma * max_b Q(s',b) - Q(s,a)).
template <std::size_t S, std::size_t A>
QTable<S, A> q_learning_update(QTable<S, A> q, std::size_t state, std::size_t action,
                               double reward, std::size_t next_state, const RlParams& p) {
    QTable<S, A>::check_state(state);
    QTable<S, A>::check_action(action);
    detail::check_reward(reward);
    const auto next = q.row(next_state);
    const double target = reward + p.gamma * *std::max_element(next.begin(), next.end());
    return detail::move_toward(std::move(q), state, action, target, p);
}

/// Argmax over one row; ties go to the lowest action index.
template <std::size_t S, std::size_t A>
std::size_t argmax_action(const QTable<S, A>& q, std::size_t state) {
    const auto row = q.row(state);
    return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

/// Epsilon-greedy selection. Always consumes one uniform draw, plus one index
/// draw when exploring, so the random stream does not depend on q-values.
template <std::size_t S, std::size_t A>
std::size_t select_action(const QTable<S, A>& q, std::size_t state, const RlParams& p, Rng& rng) {
    QTable<S, A>::check_state(state);
    if (rng.uniform() < p.epsilon) {
        return static_cast<std::size_t>(rng.index(A));
    }
    return argmax_action(q, state);
}

template <std::size_t S, std::size_t A>
std::array<std::size_t, S> greedy_policy(const QTable<S, A>& q) {
    std::array<std::size_t, S> policy{};
    for (std::size_t s = 0; s < S; ++s) policy[s] = argmax_action(q, s);
    return policy;
}

}  // namespace psiotrl::rl
