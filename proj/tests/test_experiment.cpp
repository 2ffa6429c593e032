#include <shipland/experiment.hpp>

#include <gtest/gtest.h>

#include <sstream>

using namespace shipland;

namespace {

Settings defaults() { return settings_from_config(Config{}); }

RunSpec hover_spec(const std::string& scenario, std::uint64_t seed, double duration = 20.0) {
    RunSpec spec;
    spec.wind = parse_scenario(scenario);
    spec.scenario_name = scenario;
    spec.seed = seed;
    spec.duration = duration;
    return spec;
}

}  // namespace

TEST(Settings, DefaultsMatchShippedConfig) {
    const Settings a = defaults();
    const Settings b = settings_from_config(Config::load(SHIPLAND_SOURCE_DIR "/configs/default.cfg"));
    EXPECT_EQ(a.sim.drag, b.sim.drag);
    EXPECT_EQ(a.pid, b.pid);
    EXPECT_EQ(a.obs.delay, b.obs.delay);
    EXPECT_EQ(a.obs.noise_pos, b.obs.noise_pos);
    EXPECT_EQ(a.train.episodes, b.train.episodes);
    EXPECT_EQ(a.train.td3.hidden, b.train.td3.hidden);
    EXPECT_EQ(a.landing_runs, b.landing_runs);
}

TEST(Settings, OverridesApply) {
    const Settings s = settings_from_config(Config::parse_string("sim.drag = 0.5\npid.kp = 2\ntd3.hidden = 32, 16\n"));
    EXPECT_EQ(s.sim.drag, 0.5);
    EXPECT_EQ(s.train.sim.drag, 0.5);
    EXPECT_EQ(s.pid.kp, 2.0);
    EXPECT_EQ(s.train.td3.hidden, (std::vector<int>{32, 16}));
}

TEST(Settings, RejectsBadInput) {
    for (const char* text : {"sim.dragg = 1\n", "obs.mode = sonar\n", "reward.inner = 0.5\n", "td3.hidden = 1.5\n",
                             "deck.period = 1, 2, 3\n", "camera.fx = -1\n", "pid.kp = -1\n", "sim.dt = 0\n"})
        EXPECT_THROW(settings_from_config(Config::parse_string(text)), ConfigError) << text;
}

TEST(Settings, HashTracksContent) {
    EXPECT_EQ(Config::parse_string("a = 1\nb = 2\n").hash(), Config::parse_string("b = 2\n a = 1\n").hash());
    EXPECT_NE(Config::parse_string("a = 1\n").hash(), Config::parse_string("a = 2\n").hash());
}

TEST(Run, NoWindNoNoiseStaysExactlyOnTarget) {
    Settings s = defaults();
    s.obs.noise_pos = 0.0;
    const RunResult r = run_episode(s, pid_controllers(s.pid), hover_spec("none", 1));
    EXPECT_EQ(r.metrics.max_dev(), 0.0);
    EXPECT_TRUE(r.metrics.recovered_x && r.metrics.recovered_y);
}

TEST(Run, NoWindPidStaysWithinTwoCentimetres) {
    const Settings s = defaults();
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const RunResult r = run_hover(s, pid_controllers(s.pid), WindScenario{}, "none", seed);
        EXPECT_LT(r.metrics.max_dev(), 0.02) << seed;
    }
}

TEST(Run, SuddenCrossWindDisplacesSidewardOnly) {
    Settings s = defaults();
    s.obs.noise_pos = 0.0;
    const RunResult r = run_episode(s, pid_controllers(s.pid), hover_spec("sudden_cross_5", 1));
    EXPECT_GT(r.metrics.max_dev_y, 0.3);
    EXPECT_LT(r.metrics.max_dev_x, 1e-12);
    for (const auto& row : r.rows)
        if (row.t < 8.0 - 1e-9) EXPECT_EQ(row.y, 0.0);
}

TEST(Run, Bookkeeping) {
    const Settings s = defaults();
    const RunSpec spec = hover_spec("sin_head_5_20", 3, 12.0);
    const RunResult r = run_episode(s, pid_controllers(s.pid), spec);
    ASSERT_EQ(r.rows.size(), 121u);
    for (std::size_t i = 0; i < r.rows.size(); ++i) EXPECT_NEAR(r.rows[i].t, 0.1 * i, 1e-12);
    double ret = 0.0;
    for (const auto& row : r.rows) ret += row.reward;
    EXPECT_EQ(r.metrics.episode_return, ret);
    EXPECT_EQ(r.rows.front().reward, 0.0);
    EXPECT_NEAR(r.rows[51].wind_x, wind_at(spec.wind, 5.0).x(), 1e-12);
}

TEST(Run, Deterministic) {
    const Settings s = defaults();
    const RunSpec spec = hover_spec("time_varying", 9);
    const RunResult a = run_episode(s, pid_controllers(s.pid), spec);
    const RunResult b = run_episode(s, pid_controllers(s.pid), spec);
    EXPECT_EQ(a.rows, b.rows);
    EXPECT_EQ(trajectory_csv(a, s, spec, ControllerKind::Pid), trajectory_csv(b, s, spec, ControllerKind::Pid));
    const RunResult c = run_episode(s, pid_controllers(s.pid), hover_spec("time_varying", 10));
    EXPECT_NE(a.rows, c.rows);
}

TEST(Run, ZeroDurationIsConfigError) {
    const Settings s = defaults();
    EXPECT_THROW(run_episode(s, pid_controllers(s.pid), hover_spec("none", 1, 0.0)), ConfigError);
}

TEST(Run, LeavingOuterBandStopsEarly) {
    Settings s = defaults();
    s.pid = PidGains{0.0, 0.0, 0.0};
    const RunResult r = run_episode(s, pid_controllers(s.pid), hover_spec("constant_cross_8", 1, 40.0));
    EXPECT_TRUE(r.metrics.left_outer_band);
    EXPECT_LT(r.rows.size(), 401u);
    EXPECT_GT(std::abs(r.rows.back().y), s.reward.outer);
}

TEST(Landing, PidFromOriginInCalmAirTouchesDownInsideZone) {
    Settings s = defaults();
    const RunResult r = run_landing(s, pid_controllers(s.pid), WindScenario{}, "none", {0.0, 0.0}, 1);
    ASSERT_TRUE(r.metrics.touchdown_offset.has_value());
    EXPECT_TRUE(r.metrics.success);
    EXPECT_EQ(r.rows.back().phase, Phase::TouchedDown);
    // Dwell 1 s then 1.5 m at 0.3 m/s.
    EXPECT_NEAR(*r.metrics.touchdown_time, 6.0, 0.5);
}

TEST(Landing, StartGrid) {
    EXPECT_EQ(landing_starts().size(), 6u);
    for (const auto& p : landing_starts()) EXPECT_LE(p.lpNorm<Eigen::Infinity>(), 1.5);
}

TEST(Csv, RoundTripReproducesMetrics) {
    const Settings s = defaults();
    for (const Task task : {Task::Hover, Task::Landing}) {
        RunSpec spec = hover_spec("sudden_cross_5", 4, 30.0);
        spec.task = task;
        spec.start = {1.0, -0.5};
        const RunResult r = run_episode(s, pid_controllers(s.pid), spec);
        std::istringstream in(trajectory_csv(r, s, spec, ControllerKind::Pid));
        const auto rows = parse_trajectory_csv(in);
        EXPECT_EQ(rows, r.rows);
        const RunMetrics m = metrics_from_rows(rows, task, s);
        EXPECT_EQ(m.max_dev_x, r.metrics.max_dev_x);
        EXPECT_EQ(m.max_dev_y, r.metrics.max_dev_y);
        EXPECT_EQ(m.recovery_y, r.metrics.recovery_y);
        EXPECT_EQ(m.episode_return, r.metrics.episode_return);
        EXPECT_EQ(m.success, r.metrics.success);
        EXPECT_EQ(m.touchdown_offset.has_value(), r.metrics.touchdown_offset.has_value());
    }
}

TEST(Csv, PreambleCarriesProvenance) {
    const Settings s = defaults();
    const RunSpec spec = hover_spec("none", 42, 1.0);
    const std::string csv = trajectory_csv(run_episode(s, pid_controllers(s.pid), spec), s, spec, ControllerKind::Pid);
    EXPECT_NE(csv.find("# config_hash=" + s.config_hash), std::string::npos);
    EXPECT_NE(csv.find("# seed=42"), std::string::npos);
    EXPECT_NE(csv.find("schema=1"), std::string::npos);
}

TEST(Csv, RejectsMalformed) {
    for (const char* text : {"", "t,x\n1,2\n", "t,x,y,z,vx,vy,vz,roll,pitch,wind_x,wind_y,action_roll,action_pitch,"
                                               "reward,phase\n0,0,0,0,0,0,0,0,0,0,0,0,0,0,flying\n",
                             "t,x,y,z,vx,vy,vz,roll,pitch,wind_x,wind_y,action_roll,action_pitch,reward,phase\n"
                             "0,0,0,0,0,0,0,0,0,0,0,0,0,abc,approach\n",
                             "t,x,y,z,vx,vy,vz,roll,pitch,wind_x,wind_y,action_roll,action_pitch,reward,phase\n0,0\n"}) {
        std::istringstream in(text);
        EXPECT_THROW(parse_trajectory_csv(in), ConfigError) << text;
    }
}

TEST(Recovery, FromRows) {
    std::vector<TrajectoryRow> rows(6);
    const double y[] = {0.0, 0.2, 0.3, 0.05, 0.15, 0.02};
    for (int i = 0; i < 6; ++i) {
        rows[i].t = 0.1 * i;
        rows[i].y = y[i];
    }
    const RunMetrics m = metrics_from_rows(rows, Task::Hover, defaults());
    EXPECT_NEAR(m.recovery_y, 0.4, 1e-12);
    EXPECT_TRUE(m.recovered_y);
    EXPECT_EQ(m.max_dev_y, 0.3);
    rows.back().y = 0.5;
    const RunMetrics censored = metrics_from_rows(rows, Task::Hover, defaults());
    EXPECT_FALSE(censored.recovered_y);
    EXPECT_NEAR(censored.recovery_y, 0.4, 1e-12);
}

TEST(Compare, PairsRunsPerScenarioAndSeed) {
    Settings s = defaults();
    s.hover_duration = 5.0;
    const auto pid = pid_controllers(s.pid);
    const HoverComparison c = compare_hover(s, pid, pid, {"none", "sudden_cross_5"}, 10, 2);
    ASSERT_EQ(c.rows.size(), 4u);
    EXPECT_EQ(c.rows[3].seed, 11u);
    EXPECT_EQ(c.rows[3].scenario, "sudden_cross_5");
    for (const auto& r : c.rows) EXPECT_EQ(r.rl.max_dev(), r.pid.max_dev());
    const std::string csv = comparison_csv(c, s, 10);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4 + 1 + 4);
}

TEST(Compare, DeviationAxisFollowsScenario) {
    RunMetrics m;
    m.max_dev_x = 1.0;
    m.max_dev_y = 2.0;
    EXPECT_EQ(ComparisonRow::deviation(m, parse_scenario("sudden_cross_5")), 2.0);
    EXPECT_EQ(ComparisonRow::deviation(m, parse_scenario("sin_head_5_20")), 1.0);
    EXPECT_EQ(ComparisonRow::deviation(m, parse_scenario("time_varying")), 2.0);
}

TEST(Controllers, RlCheckpointMissingIsConfigError) {
    EXPECT_THROW(rl_controllers("/nonexistent/dir"), ConfigError);
    EXPECT_THROW(parse_controller("lqr"), ConfigError);
}
