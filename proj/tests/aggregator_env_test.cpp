#include <gtest/gtest.h>

#include <set>
#include <string>

#include "psiotrl/aggregator_env.hpp"
#include "psiotrl/random.hpp"

using namespace psiotrl;
using namespace psiotrl::env;

namespace {

AggregatorState with(PerQueue occ, PerQueue rates = {35, 25, 15}) {
    return AggregatorState::preloaded(occ, rates);
}

Action act(Adjustment a, Adjustment b, Adjustment c) { return Action{{a, b, c}}; }

constexpr auto Inc = Adjustment::Increase;
constexpr auto Dec = Adjustment::Decrease;
constexpr auto Nul = Adjustment::Null;

}  // namespace

TEST(QueueId, QosMappingAndPriority) {
    EXPECT_EQ(qos_class(QueueId::B1), QosClass::b0);
    EXPECT_EQ(qos_class(QueueId::B2), QosClass::b1);
    EXPECT_EQ(qos_class(QueueId::B3), QosClass::b2);
    EXPECT_LT(slot(QueueId::B1), slot(QueueId::B2));
    EXPECT_THROW(queue_from_number(4), BoundsError);
}

TEST(EncodeState, TableExamples) {
    const auto a = encode_state(with({80, 20, 20}), 50);
    EXPECT_EQ(a.label(), "AL,BL,BL");
    EXPECT_EQ(a.index(), 4u);
    EXPECT_EQ(encode_state(with({20, 20, 20}), 50).index(), 0u);
    const auto overload = encode_state(with({120, 20, 20}), 50);
    EXPECT_EQ(overload.label(), "AL,BL,BL");
    EXPECT_EQ(overload.index(), 4u);
}

TEST(EncodeState, ThresholdIsStrict) {
    EXPECT_EQ(encode_state(with({50, 50.0001, 49.9}), 50).label(), "BL,AL,BL");
    EXPECT_THROW(encode_state(with({0, 0, 0}), 0), ValidationError);
    EXPECT_THROW(encode_state(with({0, 0, 0}), 100), ValidationError);
}

TEST(EncodeState, AllEightCombinations) {
    std::set<std::size_t> seen;
    for (int b1 = 0; b1 < 2; ++b1) {
        for (int b2 = 0; b2 < 2; ++b2) {
            for (int b3 = 0; b3 < 2; ++b3) {
                const auto e = encode_state(with({b1 ? 80.0 : 20.0, b2 ? 80.0 : 20.0, b3 ? 80.0 : 20.0}), 50);
                EXPECT_EQ(e.index(), static_cast<std::size_t>(4 * b1 + 2 * b2 + b3));
                EXPECT_EQ(EnvState::from_index(e.index()), e);
                seen.insert(e.index());
            }
        }
    }
    EXPECT_EQ(seen.size(), kStateCount);
    EXPECT_THROW(EnvState::from_index(8), BoundsError);
}

TEST(EncodeState, MonotoneInOccupancy) {
    Rng rng(3);
    for (int i = 0; i < 20000; ++i) {
        PerQueue occ{rng.uniform() * 130, rng.uniform() * 130, rng.uniform() * 130};
        const auto base = encode_state(with(occ), 50);
        const std::size_t q = rng.index(3);
        occ[q] += rng.uniform() * 50;
        const auto raised = encode_state(with(occ), 50);
        ASSERT_FALSE(base.flags[q] == Flag::AL && raised.flags[q] == Flag::BL);
        ASSERT_LT(raised.index(), kStateCount);
    }
}

TEST(DecodeAction, FixedEncoding) {
    EXPECT_EQ(decode_action(0), act(Inc, Inc, Inc));
    EXPECT_EQ(decode_action(26), act(Nul, Nul, Nul));
    EXPECT_EQ(decode_action(9 * 0 + 3 * 2 + 1), act(Inc, Nul, Dec));
    EXPECT_THROW(decode_action(27), BoundsError);
}

TEST(DecodeAction, BijectionOverAllActions) {
    std::set<std::string> labels;
    for (std::size_t i = 0; i < kActionCount; ++i) {
        const Action a = decode_action(i);
        EXPECT_EQ(encode_action(a), i);
        labels.insert(a.label());
    }
    EXPECT_EQ(labels.size(), kActionCount);
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            for (int c = 0; c < 3; ++c) {
                const Action x{{static_cast<Adjustment>(a), static_cast<Adjustment>(b), static_cast<Adjustment>(c)}};
                EXPECT_EQ(decode_action(encode_action(x)), x);
            }
        }
    }
}

TEST(ApplyAction, Examples) {
    const auto s = apply_action(with({0, 0, 0}, {40, 30, 30}), act(Inc, Nul, Dec), 0.10);
    EXPECT_EQ(s.rates, (PerQueue{44, 30, 27}));

    const auto base = with({10, 20, 30}, {12.34, 56.78, 9.1});
    EXPECT_EQ(apply_action(base, act(Nul, Nul, Nul)), base);

    EXPECT_EQ(apply_action(with({0, 0, 0}, {1.0, 1.0, 1.0}), act(Dec, Dec, Dec)).rates, (PerQueue{1, 1, 1}));
    EXPECT_THROW(apply_action(base, act(Inc, Inc, Inc), 0.0), ValidationError);
}

TEST(ApplyAction, RoundsToCentsAndNeverNegative) {
    Rng rng(11);
    for (int i = 0; i < 20000; ++i) {
        AggregatorState s = with({0, 0, 0}, {1 + rng.uniform() * 60, 1 + rng.uniform() * 60, 1 + rng.uniform() * 60});
        for (int k = 0; k < 10; ++k) s = apply_action(s, decode_action(rng.index(27)), 0.01 + 0.9 * rng.uniform());
        for (double r : s.rates) {
            ASSERT_GE(r, kMinRate);
            ASSERT_NEAR(r * 100, std::round(r * 100), 1e-6);
        }
    }
}

TEST(ConstraintCheck, Examples) {
    EXPECT_TRUE(constraint_check(with({0, 0, 0}, {40, 30, 30})));
    EXPECT_FALSE(constraint_check(with({0, 0, 0}, {44, 30, 30})));
    EXPECT_TRUE(constraint_check(with({0, 0, 0}, {35, 25, 15})));
    EXPECT_TRUE(constraint_check(with({0, 0, 0}, {33.3, 33.3, 33.4})));
}

TEST(SimulateTicks, Examples) {
    TrafficProfile tp;
    auto s = simulate_ticks(with({80, 0, 0}, {35, 0, 0}), tp, 1);
    EXPECT_DOUBLE_EQ(s.occupancy[0], 76.5);

    s = simulate_ticks(with({0, 0, 0}, {50, 30, 20}), tp, 7);
    EXPECT_EQ(s.occupancy, (PerQueue{0, 0, 0}));

    tp.inflow = {5, 0, 0};
    s = simulate_ticks(with({99, 0, 0}, {0, 0, 0}), tp, 1);
    EXPECT_DOUBLE_EQ(s.occupancy[0], 100.0);
    EXPECT_DOUBLE_EQ(s.loss[0], 4.0);

    EXPECT_THROW(simulate_ticks(s, tp, 0), ValidationError);
}

TEST(SimulateTicks, PreloadAboveCapacityIsLostOnFirstTick) {
    const auto s = simulate_ticks(with({120, 20, 20}, {40, 30, 30}), TrafficProfile{}, 1);
    EXPECT_DOUBLE_EQ(s.loss[0], 16.0);  // 120 - 4 -> 116, 16 over capacity
    EXPECT_DOUBLE_EQ(s.occupancy[0], 100.0);
    EXPECT_EQ(s.loss[1], 0.0);
}

// Randomized volume balance: after + drained + lost - inflow == before, per
// queue, with drained clipped at what was available.
TEST(SimulateTicks, ConservesVolume) {
    Rng rng(777);
    for (int i = 0; i < 100000; ++i) {
        TrafficProfile tp;
        tp.inflow = {rng.uniform() * 15, rng.uniform() * 15, rng.uniform() * 15};
        tp.drain_coeff = rng.uniform() * 0.5;
        const int n = 1 + static_cast<int>(rng.index(5));
        const AggregatorState before = with({rng.uniform() * 130, rng.uniform() * 100, rng.uniform() * 100},
                                            {rng.uniform() * 60, rng.uniform() * 60, rng.uniform() * 60});
        const AggregatorState after = simulate_ticks(before, tp, n);
        for (std::size_t q = 0; q < 3; ++q) {
            const double inflow = tp.inflow[q] * n;
            const double drained = after.drained[q] - before.drained[q];
            const double lost = after.loss[q] - before.loss[q];
            ASSERT_NEAR(after.occupancy[q] + drained + lost - inflow, before.occupancy[q], 1e-9);
            ASSERT_GE(lost, 0.0);
            ASSERT_GE(after.occupancy[q], 0.0);
            ASSERT_LE(after.occupancy[q], kBufferCapacity);
        }
    }
}

TEST(ComputeReward, Examples) {
    const AggregatorState prev = with({80, 20, 20});
    EXPECT_DOUBLE_EQ(compute_reward(prev, with({40, 20, 20}), 50), 3.0);
    EXPECT_DOUBLE_EQ(compute_reward(prev, prev, 50), 0.0);
    EXPECT_DOUBLE_EQ(compute_reward(prev, with({80, 20, 20}, {50, 40, 30}), 50), -10.0);
}

TEST(ComputeReward, CrossingsLossAndBonus) {
    const AggregatorState prev = with({80, 80, 20});
    AggregatorState next = with({40, 70, 60});
    next.loss = {2.5, 0, 0};
    // +3 (B1 down) -1 (B3 up) -2.5 (loss)
    EXPECT_DOUBLE_EQ(compute_reward(prev, next, 50), -0.5);
    EXPECT_DOUBLE_EQ(compute_reward(prev, next, 50, RewardWeights{}, true), 9.5);

    RewardWeights w;
    w.priority = {10, 0, 0};
    w.loss_penalty = 0;
    EXPECT_DOUBLE_EQ(compute_reward(prev, next, 50, w), 10.0);
}
