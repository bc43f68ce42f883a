#pragma once

// The aggregator: three prioritized topic buffers drained over one shared
// link. Occupancies are percent of buffer capacity, rates are percent of link
// capacity. All transitions are pure functions on AggregatorState.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "psiotrl/errors.hpp"

namespace psiotrl::env {

inline constexpr std::size_t kQueueCount = 3;
inline constexpr std::size_t kStateCount = 8;    // 2 flags ^ 3 queues
inline constexpr std::size_t kActionCount = 27;  // 3 adjustments ^ 3 queues
inline constexpr double kLinkCapacity = 100.0;
inline constexpr double kCapacityTolerance = 1e-9;
inline constexpr double kBufferCapacity = 100.0;
inline constexpr double kMinRate = 1.0;

using PerQueue = std::array<double, kQueueCount>;

/// B1 > B2 > B3 in priority.
enum class QueueId : std::uint8_t { B1 = 1, B2 = 2, B3 = 3 };

inline constexpr std::array<QueueId, kQueueCount> kQueues{QueueId::B1, QueueId::B2, QueueId::B3};

constexpr std::size_t slot(QueueId q) { return static_cast<std::size_t>(q) - 1; }

inline QueueId queue_from_number(int n) {
    if (n < 1 || n > 3) throw BoundsError("queue id must be 1, 2 or 3, got " + std::to_string(n));
    return static_cast<QueueId>(n);
}

/// Pub/Sub QoS classes: b0 priority, b1 sensitive, b2 insensitive.
enum class QosClass : std::uint8_t { b0 = 0, b1 = 1, b2 = 2 };

constexpr QosClass qos_class(QueueId q) { return static_cast<QosClass>(slot(q)); }

constexpr std::string_view to_string(QosClass c) {
    switch (c) {
        case QosClass::b0: return "b0";
        case QosClass::b1: return "b1";
        case QosClass::b2: return "b2";
    }
    return "?";
}

inline QosClass qos_from_string(std::string_view s) {
    if (s == "b0") return QosClass::b0;
    if (s == "b1") return QosClass::b1;
    if (s == "b2") return QosClass::b2;
    throw ValidationError("unknown QoS class '" + std::string(s) + "'");
}

struct AggregatorState {
    PerQueue occupancy{};
    PerQueue rates{35.0, 25.0, 15.0};
    PerQueue loss{};     // cumulative volume dropped on overflow
    PerQueue drained{};  // cumulative volume flushed onto the link
    double link_capacity = kLinkCapacity;

    static AggregatorState preloaded(const PerQueue& occupancy, const PerQueue& rates) {
        AggregatorState s;
        s.occupancy = occupancy;
        s.rates = rates;
        return s;
    }

    double link_occupation() const { return rates[0] + rates[1] + rates[2]; }

    friend bool operator==(const AggregatorState&, const AggregatorState&) = default;
};

enum class Flag : std::uint8_t { BL = 0, AL = 1 };

/// Agent-visible state: one below/above-threshold flag per queue.
struct EnvState {
    std::array<Flag, kQueueCount> flags{};

    std::size_t index() const {
        return 4 * static_cast<std::size_t>(flags[0]) + 2 * static_cast<std::size_t>(flags[1]) +
               static_cast<std::size_t>(flags[2]);
    }

    static EnvState from_index(std::size_t index) {
        if (index >= kStateCount) throw BoundsError("state index " + std::to_string(index));
        return EnvState{{static_cast<Flag>((index >> 2) & 1), static_cast<Flag>((index >> 1) & 1),
                         static_cast<Flag>(index & 1)}};
    }

    bool all_below() const {
        return std::all_of(flags.begin(), flags.end(), [](Flag f) { return f == Flag::BL; });
    }

    std::string label() const {
        std::string out;
        for (std::size_t i = 0; i < kQueueCount; ++i) {
            if (i) out += ',';
            out += flags[i] == Flag::AL ? "AL" : "BL";
        }
        return out;
    }

    friend bool operator==(const EnvState&, const EnvState&) = default;
};

/// Flag is AL iff occupancy is strictly above the threshold. Overload (>= 100%)
/// is still AL; it shows up in the loss counters instead.
inline EnvState encode_state(const AggregatorState& s, double threshold) {
    if (!(threshold > 0.0 && threshold < 100.0)) {
        throw ValidationError("threshold must be in (0,100)");
    }
    EnvState e;
    for (std::size_t i = 0; i < kQueueCount; ++i) {
        e.flags[i] = s.occupancy[i] > threshold ? Flag::AL : Flag::BL;
    }
    return e;
}

enum class Adjustment : std::uint8_t { Increase = 0, Decrease = 1, Null = 2 };

constexpr std::string_view to_string(Adjustment a) {
    switch (a) {
        case Adjustment::Increase: return "T+";
        case Adjustment::Decrease: return "T-";
        case Adjustment::Null: return "N";
    }
    return "?";
}

/// One adjustment per queue; index = 9*B1 + 3*B2 + B3 in base 3.
struct Action {
    std::array<Adjustment, kQueueCount> adjust{Adjustment::Null, Adjustment::Null, Adjustment::Null};

    std::size_t index() const {
        return 9 * static_cast<std::size_t>(adjust[0]) + 3 * static_cast<std::size_t>(adjust[1]) +
               static_cast<std::size_t>(adjust[2]);
    }

    std::string label() const {
        std::string out = "(";
        for (std::size_t i = 0; i < kQueueCount; ++i) {
            if (i) out += ',';
            out += to_string(adjust[i]);
        }
        return out + ")";
    }

    friend bool operator==(const Action&, const Action&) = default;
};

inline std::size_t encode_action(const Action& a) { return a.index(); }

inline Action decode_action(std::size_t index) {
    if (index >= kActionCount) {
        throw BoundsError("action index " + std::to_string(index) + " outside [0,27)");
    }
    return Action{{static_cast<Adjustment>(index / 9), static_cast<Adjustment>((index / 3) % 3),
                   static_cast<Adjustment>(index % 3)}};
}

/// Traffic between two agent decisions.
struct TrafficProfile {
    PerQueue inflow{};         // percent-points of buffer arriving per tick
    double drain_coeff = 0.1;  // percent-points drained per tick per unit of rate
    int ticks_per_step = 5;

    void validate() const {
        for (double v : inflow) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("inflow must be >= 0");
        }
        if (!(drain_coeff >= 0.0) || !std::isfinite(drain_coeff)) {
            throw ValidationError("drain_coeff must be >= 0");
        }
        if (ticks_per_step < 1) throw ValidationError("ticks_per_step must be >= 1");
    }
};

inline double round_to_cents(double v) { return std::round(v * 100.0) / 100.0; }

/// Multiplicative +/- step per queue, rounded to 2 decimals, floored at kMinRate.
/// Capacity is not enforced here; see constraint_check.
inline AggregatorState apply_action(AggregatorState s, const Action& a, double step_fraction = 0.10) {
    if (!(step_fraction > 0.0 && step_fraction < 1.0)) {
        throw ValidationError("step_fraction must be in (0,1)");
    }
    for (std::size_t i = 0; i < kQueueCount; ++i) {
        double r = s.rates[i];
        switch (a.adjust[i]) {
            case Adjustment::Increase: r *= 1.0 + step_fraction; break;
            case Adjustment::Decrease: r *= 1.0 - step_fraction; break;
            case Adjustment::Null: continue;
        }
        s.rates[i] = std::max(kMinRate, round_to_cents(r));
    }
    return s;
}

/// Link capacity must cover the sum of the per-queue flushing rates.
inline bool constraint_check(const AggregatorState& s) {
    return s.link_occupation() <= s.link_capacity + kCapacityTolerance;
}

/// Advances the buffers n ticks. Per tick and queue: add inflow, remove
/// drain_coeff * rate; anything above 100 is dropped into loss, anything
/// below 0 was never drained.
inline AggregatorState simulate_ticks(AggregatorState s, const TrafficProfile& tp, int n) {
    if (n < 1) throw ValidationError("tick count must be >= 1");
    for (int t = 0; t < n; ++t) {
        for (std::size_t i = 0; i < kQueueCount; ++i) {
            const double available = s.occupancy[i] + tp.inflow[i];
            const double drained = std::min(tp.drain_coeff * s.rates[i], available);
            double occ = available - drained;
            if (occ > kBufferCapacity) {
                s.loss[i] += occ - kBufferCapacity;
                occ = kBufferCapacity;
            }
            s.occupancy[i] = std::max(0.0, occ);
            s.drained[i] += drained;
        }
    }
    return s;
}

struct RewardWeights {
    PerQueue priority{3.0, 2.0, 1.0};  // per-queue threshold-crossing weight
    double violation_penalty = 10.0;
    double loss_penalty = 1.0;  // per percent-point newly lost
    double success_bonus = 10.0;

    void validate() const {
        for (double w : priority) {
            if (!std::isfinite(w)) throw ValidationError("reward weights must be finite");
        }
        for (double w : {violation_penalty, loss_penalty, success_bonus}) {
            if (!std::isfinite(w)) throw ValidationError("reward weights must be finite");
        }
    }
};

/// +w_i for a queue dropping AL->BL, -w_i for BL->AL, minus the capacity
/// penalty, minus the newly lost volume, plus the bonus on a successful end.
inline double compute_reward(const AggregatorState& prev, const AggregatorState& next,
                             double threshold, const RewardWeights& w = {},
                             bool terminal_success = false) {
    const EnvState before = encode_state(prev, threshold);
    const EnvState after = encode_state(next, threshold);
    double r = 0.0;
    for (std::size_t i = 0; i < kQueueCount; ++i) {
        if (before.flags[i] == Flag::AL && after.flags[i] == Flag::BL) r += w.priority[i];
        if (before.flags[i] == Flag::BL && after.flags[i] == Flag::AL) r -= w.priority[i];
        r -= w.loss_penalty * (next.loss[i] - prev.loss[i]);
    }
    if (!constraint_check(next)) r -= w.violation_penalty;
    if (terminal_success) r += w.success_bonus;
    return r;
}

}  // namespace psiotrl::env
