#include <shipland/pid.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace shipland;

namespace {

// Conditions the frozen baseline gains were tuned under: one step of
// observation delay, no noise, no wind.
StepTest frozen_test() {
    StepTest t;
    t.observation.delay = 1;
    return t;
}

const PidGains kFrozen{0.5, 0.0, 0.5, 1.0, 1.0};

}  // namespace

TEST(PidStep, ZeroErrorZeroAction) {
    PidController pid({1.0, 0.5, 0.3});
    for (int i = 0; i < 20; ++i) EXPECT_EQ(pid.act(0.0, 0.1), 0.0);
}

TEST(PidStep, Proportional) {
    const auto [a, s] = pid_step(0.5, 0.1, PidState{}, PidGains{1.0, 0.0, 0.0});
    EXPECT_DOUBLE_EQ(a, 0.5);
    EXPECT_EQ(s.prev_error, 0.5);
}

TEST(PidStep, IntegralRectangleRule) {
    const PidGains g{0.0, 1.0, 0.0};
    PidState s;
    double a = 0.0;
    for (int i = 0; i < 10; ++i) std::tie(a, s) = pid_step(0.1, 0.1, s, g);
    EXPECT_NEAR(a, 0.1, 1e-15);
    EXPECT_NEAR(s.integral, 0.1, 1e-15);
}

TEST(PidStep, DerivativeGuardOnFirstStep) {
    const PidGains g{0.0, 0.0, 1.0};
    auto [a0, s0] = pid_step(0.3, 0.1, PidState{}, g);
    EXPECT_EQ(a0, 0.0);
    auto [a1, s1] = pid_step(0.35, 0.1, s0, g);
    EXPECT_NEAR(a1, 0.5, 1e-12);
}

TEST(PidStep, RejectsNonPositiveDt) {
    EXPECT_THROW(pid_step(0.1, 0.0, PidState{}, PidGains{1, 0, 0}), std::invalid_argument);
}

TEST(PidGains, Validation) {
    EXPECT_THROW(PidController(PidGains{-1.0, 0.0, 0.0}), ConfigError);
    EXPECT_THROW(PidController(PidGains{1.0, 0.0, 0.0, 0.0, 1.0}), ConfigError);
    EXPECT_THROW(PidController(PidGains{1.0, 0.0, 0.0, 1.0, -1.0}), ConfigError);
}

TEST(PidProperty, OutputAndIntegralClamped) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> e(-5.0, 5.0), gain(0.0, 4.0);
    for (int trial = 0; trial < 50; ++trial) {
        const PidGains g{gain(rng), gain(rng) + 0.01, gain(rng), 1.0, 0.3};
        PidController pid(g);
        for (int i = 0; i < 200; ++i) {
            const double a = pid.act(e(rng), 0.1);
            ASSERT_LE(std::abs(a), 1.0);
            ASSERT_LE(std::abs(g.ki * pid.state().integral), 0.3 + 1e-12);
        }
    }
}

TEST(PidProperty, ZeroGainsZeroAction) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> e(-5.0, 5.0);
    PidController pid({0.0, 0.0, 0.0});
    for (int i = 0; i < 500; ++i) ASSERT_EQ(pid.act(e(rng), 0.1), 0.0);
}

TEST(PidProperty, LinearBelowSaturation) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> e(-0.1, 0.1), gain(0.0, 2.0);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const PidGains g{gain(rng), gain(rng), gain(rng), 1.0, 10.0};
        const double err = e(rng);
        PidState s1;
        s1.prev_error = 0.5 * err;
        s1.integral = 0.02;
        PidState s2;
        s2.prev_error = 2.0 * s1.prev_error.value();
        s2.integral = 2.0 * s1.integral;
        const double a1 = pid_step(err, 0.1, s1, g).first;
        const double a2 = pid_step(2.0 * err, 0.1, s2, g).first;
        if (std::abs(a2) >= 1.0) continue;
        ++checked;
        ASSERT_DOUBLE_EQ(a2, 2.0 * a1);
        // Fresh state.
        ASSERT_DOUBLE_EQ(pid_step(2.0 * err, 0.1, PidState{}, g).first, 2.0 * pid_step(err, 0.1, PidState{}, g).first);
    }
    EXPECT_GT(checked, 100);
}

TEST(PidController, ResetClearsState) {
    PidController pid({1.0, 0.5, 0.5});
    pid.act(0.4, 0.1);
    pid.act(0.3, 0.1);
    pid.reset();
    EXPECT_EQ(pid.state().integral, 0.0);
    EXPECT_FALSE(pid.state().prev_error.has_value());
}

TEST(SettlingTime, LastEntryIntoBand) {
    const std::vector<double> t{0.1, 0.2, 0.3, 0.4, 0.5};
    EXPECT_EQ(settling_time(t, {1.0, 0.04, 0.2, 0.03, 0.01}, 0.05), 0.4);
    EXPECT_EQ(settling_time(t, {0.0, 0.0, 0.0, 0.0, 0.0}, 0.05), 0.1);
    EXPECT_FALSE(settling_time(t, {0.0, 0.0, 0.0, 0.0, 0.5}, 0.05).has_value());
}

TEST(Tuning, FrozenGainsAreTheGridOptimum) {
    const TuneResult r = tune_gains(frozen_test());
    EXPECT_EQ(r.gains, kFrozen);
    EXPECT_NEAR(r.itae, simulate_step(kFrozen, frozen_test()).itae, 1e-12);
}

TEST(Tuning, Deterministic) {
    PidSearchSpace small;
    small.kp = {0.25, 1.0};
    small.ki = {0.0, 0.1};
    small.kd = {0.5, 1.0};
    const TuneResult a = tune_gains(frozen_test(), small), b = tune_gains(frozen_test(), small);
    EXPECT_EQ(a.gains, b.gains);
    EXPECT_EQ(a.itae, b.itae);
}

TEST(Tuning, FrozenControllerSettlesOneMetreStep) {
    const StepResponse r = simulate_step(kFrozen, frozen_test());
    ASSERT_TRUE(r.settling_time.has_value());
    EXPECT_LT(*r.settling_time, frozen_test().duration);
    EXPECT_LT(std::abs(r.error.back()), 0.05);
    EXPECT_NEAR(r.error.front(), 1.0, 0.05);
}

TEST(Tuning, DoubledProportionalGainRaisesItae) {
    const double base = simulate_step(kFrozen, frozen_test()).itae;
    PidGains doubled = kFrozen;
    doubled.kp *= 2.0;
    EXPECT_GT(simulate_step(doubled, frozen_test()).itae, base);
    doubled.kp *= 2.0;
    EXPECT_GT(simulate_step(doubled, frozen_test()).itae, base);
}
