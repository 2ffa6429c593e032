#include <shipland/wind.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace shipland;

TEST(WindAt, SinusoidalHeadPeak) {
    const Eigen::Vector3d w = wind_at(wind::Sinusoidal{5.0, 20.0, kHeadwindDir, 0.0}, 5.0);
    EXPECT_NEAR(w.x(), 5.0, 1e-12);
    EXPECT_NEAR(w.y(), 0.0, 1e-12);
    EXPECT_EQ(w.z(), 0.0);
}

TEST(WindAt, SuddenCrossSwitchAtEightSeconds) {
    const WindScenario s = wind::SuddenChange{0.0, 5.0, 8.0, kCrosswindDir};
    EXPECT_NEAR(wind_at(s, 7.9).norm(), 0.0, 1e-12);
    const Eigen::Vector3d after = wind_at(s, 8.1);
    EXPECT_NEAR(after.y(), 5.0, 1e-12);
    EXPECT_NEAR(after.x(), 0.0, 1e-12);
}

TEST(WindAt, TimeVaryingHalfRevolution) {
    const WindScenario s = wind::TimeVarying{5.0, 20.0, 40.0, 0.0};
    EXPECT_NEAR(wind_direction(s, 20.0), std::numbers::pi, 1e-12);
    // Magnitude sin(2 pi t / 20) at t = 5 is 1, heading 45 degrees.
    const Eigen::Vector3d w = wind_at(s, 5.0);
    EXPECT_NEAR(w.x(), 5.0 * std::cos(std::numbers::pi / 4), 1e-12);
    EXPECT_NEAR(w.y(), 5.0 * std::sin(std::numbers::pi / 4), 1e-12);
}

TEST(WindAt, ConstantAndNone) {
    EXPECT_NEAR((wind_at(wind::Constant{-3.0, kCrosswindDir}, 17.0) - Eigen::Vector3d(0, -3, 0)).norm(), 0.0, 1e-12);
    EXPECT_EQ(wind_at(WindScenario{}, 3.0), Eigen::Vector3d::Zero());
}

TEST(WindProperty, BoundedByLargestSpeed) {
    const std::vector<WindScenario> all{wind::Constant{-7, 1.0}, wind::SuddenChange{2, -4.5, 3, 0.5},
                                        wind::Sinusoidal{-5, 30, 2.0, 0.3}, wind::TimeVarying{5, 20, 40, 0.0}};
    for (const auto& s : all) {
        for (int i = 0; i < 2000; ++i) EXPECT_LE(wind_at(s, 0.05 * i).norm(), wind_bound(s) + 1e-12);
    }
}

TEST(WindProperty, Deterministic) {
    const WindScenario s = wind::TimeVarying{5, 20, 40, 0.2};
    for (int i = 0; i < 100; ++i) EXPECT_EQ(wind_at(s, 0.37 * i), wind_at(s, 0.37 * i));
}

TEST(WindProperty, ContinuousExceptSuddenSwitch) {
    const double h = 1e-7;
    const std::vector<WindScenario> smooth{wind::Sinusoidal{5, 20, 0, 0}, wind::TimeVarying{5, 20, 40, 0}};
    for (const auto& s : smooth)
        for (int i = 0; i < 400; ++i) EXPECT_LT((wind_at(s, 0.1 * i + h) - wind_at(s, 0.1 * i)).norm(), 1e-5);
    const WindScenario jump = wind::SuddenChange{1, 4, 8, 0};
    EXPECT_NEAR((wind_at(jump, 8.0) - wind_at(jump, 8.0 - h)).norm(), 3.0, 1e-12);
    EXPECT_LT((wind_at(jump, 5.0) - wind_at(jump, 5.0 - h)).norm(), 1e-12);
}

TEST(WindProperty, OneRevolutionPerDirPeriod) {
    for (double dp : {10.0, 40.0, 55.0}) {
        const WindScenario s = wind::TimeVarying{5, 20, dp, 0.4};
        EXPECT_NEAR(std::remainder(wind_direction(s, 3.0 + dp) - wind_direction(s, 3.0), 2 * std::numbers::pi), 0.0,
                    1e-9);
        EXPECT_NEAR(std::abs(std::remainder(wind_direction(s, 3.0 + dp / 2) - wind_direction(s, 3.0),
                                            2 * std::numbers::pi)),
                    std::numbers::pi, 1e-9);
        // The heading advances monotonically: unwrap and count.
        double total = 0.0, prev = wind_direction(s, 0.0);
        for (int i = 1; i <= 1000; ++i) {
            const double cur = wind_direction(s, dp * i / 1000.0);
            const double step = std::remainder(cur - prev, 2 * std::numbers::pi);
            EXPECT_GT(step, 0.0);
            total += step;
            prev = cur;
        }
        EXPECT_NEAR(total, 2 * std::numbers::pi, 1e-9);
    }
}

TEST(Sample, RollGetsCrossPitchGetsHead) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 500; ++i) {
        const WindScenario r = sample_scenario(rng, Axis::Roll);
        const WindScenario p = sample_scenario(rng, Axis::Pitch);
        for (double t : {0.0, 3.3, 12.0, 31.0}) {
            EXPECT_NEAR(wind_at(r, t).x(), 0.0, 1e-12);
            EXPECT_NEAR(wind_at(p, t).y(), 0.0, 1e-12);
        }
    }
}

TEST(Sample, FamiliesAndRanges) {
    std::mt19937_64 rng(2);
    std::array<int, 3> counts{};
    for (int i = 0; i < 6000; ++i) {
        const WindScenario s = sample_scenario(rng, Axis::Roll);
        if (auto* c = std::get_if<wind::Constant>(&s)) {
            ++counts[0];
            EXPECT_LE(std::abs(c->speed), 10.0);
        } else if (auto* c = std::get_if<wind::SuddenChange>(&s)) {
            ++counts[1];
            EXPECT_LE(std::abs(c->before), 5.0);
            EXPECT_LE(std::abs(c->after), 5.0);
        } else if (auto* c = std::get_if<wind::Sinusoidal>(&s)) {
            ++counts[2];
            EXPECT_EQ(std::abs(c->amplitude), 5.0);
            EXPECT_EQ(std::fmod(c->period, 10.0), 0.0);
            EXPECT_GE(c->period, 10.0);
            EXPECT_LE(c->period, 50.0);
        } else {
            ADD_FAILURE() << "unexpected family";
        }
    }
    for (int c : counts) EXPECT_NEAR(c, 2000, 150);
}

TEST(Sample, ConstantSpeedsUniformKs) {
    std::mt19937_64 rng(3);
    std::vector<double> v;
    while (v.size() < 10000) {
        const WindScenario s = sample_scenario(rng, Axis::Pitch);
        if (auto* c = std::get_if<wind::Constant>(&s)) v.push_back(c->speed);
    }
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f = (v[i] + 10.0) / 20.0;
        d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
    }
    // Critical value at the 1% level.
    EXPECT_LT(d, 1.628 / std::sqrt(n));
}

TEST(Scenario, ParseNamedAliases) {
    const WindScenario s = parse_scenario("sudden_cross_5");
    ASSERT_TRUE(std::holds_alternative<wind::SuddenChange>(s));
    const auto& sc = std::get<wind::SuddenChange>(s);
    EXPECT_EQ(sc.before, 0.0);
    EXPECT_EQ(sc.after, 5.0);
    EXPECT_EQ(sc.t_switch, 8.0);
    EXPECT_EQ(sc.dir, kCrosswindDir);

    const auto sin = std::get<wind::Sinusoidal>(parse_scenario("sin_head_5_20"));
    EXPECT_EQ(sin.amplitude, 5.0);
    EXPECT_EQ(sin.period, 20.0);
    const auto tv = std::get<wind::TimeVarying>(parse_scenario("time_varying"));
    EXPECT_EQ(tv.amplitude, 5.0);
    EXPECT_EQ(tv.period, 20.0);
    EXPECT_EQ(tv.dir_period, 40.0);
    EXPECT_TRUE(std::holds_alternative<std::monostate>(parse_scenario("none")));
    EXPECT_EQ(std::get<wind::Constant>(parse_scenario("constant_head_-7.5")).speed, -7.5);
}

TEST(Scenario, ParseErrors) {
    for (const char* bad : {"", "gale", "sudden_up_5", "constant_head_fast", "sin_head_5_20_1_2", "none_1"})
        EXPECT_THROW(parse_scenario(bad), std::invalid_argument) << bad;
}

TEST(Scenario, TagsRoundTripThroughParser) {
    for (const char* name : {"constant_cross_3", "sin_head_5_20", "time_varying_5_20_40"}) {
        const WindScenario s = parse_scenario(name);
        EXPECT_EQ(scenario_tag(s), name);
        EXPECT_EQ(scenario_tag(parse_scenario(scenario_tag(s))), scenario_tag(s));
    }
}
