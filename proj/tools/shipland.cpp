// shipland: command-line driver for training, hover/landing studies and
// RL-versus-PID comparisons. Errors go to stderr as one JSON object.

#include <shipland/config.hpp>
#include <shipland/experiment.hpp>
#include <shipland/image.hpp>
#include <shipland/pid.hpp>
#include <shipland/rl.hpp>
#include <shipland/sim.hpp>
#include <shipland/vision.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace shipland;

namespace {

struct Common {
    std::string config;
    std::uint64_t seed = 1;
    std::string out = "out";
};

Config load_config(const std::string& path) { return path.empty() ? Config{} : Config::load(path); }

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
}

ControllerPair make_controllers(const Settings& s, const std::string& kind, const std::string& checkpoint) {
    if (parse_controller(kind) == ControllerKind::Pid) return pid_controllers(s.pid);
    if (checkpoint.empty()) throw ConfigError("--checkpoint is required for the rl controller");
    return rl_controllers(checkpoint);
}

void print_metrics(const std::string& label, const RunMetrics& m) {
    nlohmann::json j;
    j["run"] = label;
    j["max_dev_x"] = m.max_dev_x;
    j["max_dev_y"] = m.max_dev_y;
    j["recovery_x"] = m.recovery_x;
    j["recovery_y"] = m.recovery_y;
    j["recovered"] = m.recovered_x && m.recovered_y;
    j["return"] = m.episode_return;
    if (m.touchdown_offset) {
        j["touchdown_offset"] = {m.touchdown_offset->x(), m.touchdown_offset->y()};
        j["touchdown_time"] = *m.touchdown_time;
        j["success"] = m.success;
    }
    std::cout << j.dump() << '\n';
}

int cmd_train(const Common& c, const std::string& axis, int episodes) {
    const Config cfg = load_config(c.config);
    Settings s = settings_from_config(cfg);
    if (episodes > 0) s.train.episodes = episodes;
    ensure_dir(c.out);
    std::vector<Axis> axes;
    if (axis == "roll" || axis == "both") axes.push_back(Axis::Roll);
    if (axis == "pitch" || axis == "both") axes.push_back(Axis::Pitch);
    if (axes.empty()) throw ConfigError("--axis must be roll, pitch or both");
    for (Axis a : axes) {
        // Distinct streams per axis from one user seed.
        const std::uint64_t seed = c.seed * 2 + (a == Axis::Pitch ? 1 : 0);
        auto res = train(a, s.train, seed, [&](const EpisodeLog& e, const Td3Agent<float>&) {
            if ((e.episode + 1) % 50 == 0)
                std::fprintf(stderr, "[%s] episode %d return %.2f length %d\n", axis_name(a), e.episode + 1, e.ret,
                             e.length);
        });
        const std::string name = axis_name(a);
        save_checkpoint((fs::path(c.out) / (name + ".json")).string(), res.actor);
        write_text((fs::path(c.out) / (name + "_log.csv")).string(),
                   training_log_csv(res.log, s.config_hash, seed, a));
        std::printf("%s: %zu episodes, quartile improvement %.3f\n", name.c_str(), res.log.size(),
                    quartile_improvement(res.log));
    }
    return 0;
}

int cmd_tune_pid(const Common& c) {
    const Settings s = settings_from_config(load_config(c.config));
    StepTest test;
    test.sim = s.sim;
    test.observation = s.obs;
    test.observation.noise_pos = 0.0;  // tuning uses a clean step response
    const TuneResult r = tune_gains(test);
    const StepResponse resp = simulate_step(r.gains, test);
    nlohmann::json j{{"kp", r.gains.kp}, {"ki", r.gains.ki}, {"kd", r.gains.kd}, {"itae", r.itae},
                     {"settling_time", resp.settling_time ? nlohmann::json(*resp.settling_time) : nlohmann::json()}};
    std::cout << j.dump() << '\n';
    return 0;
}

int cmd_hover(const Common& c, const std::string& scenario, const std::string& controller,
              const std::string& checkpoint) {
    const Settings s = settings_from_config(load_config(c.config));
    ensure_dir(c.out);
    const ControllerPair ctl = make_controllers(s, controller, checkpoint);
    RunSpec spec;
    spec.task = Task::Hover;
    spec.wind = parse_scenario(scenario);
    spec.scenario_name = scenario;
    spec.seed = c.seed;
    spec.duration = s.hover_duration;
    const RunResult r = run_episode(s, ctl, spec);
    const std::string stem = "hover_" + controller + "_" + scenario + "_seed" + std::to_string(c.seed);
    write_text((fs::path(c.out) / (stem + ".csv")).string(), trajectory_csv(r, s, spec, ctl.kind()));
    print_metrics(stem, r.metrics);
    return 0;
}

int cmd_land(const Common& c, const std::string& scenario, const std::string& controller,
             const std::string& checkpoint, int runs) {
    const Settings s = settings_from_config(load_config(c.config));
    ensure_dir(c.out);
    const ControllerPair ctl = make_controllers(s, controller, checkpoint);
    if (runs <= 0) runs = s.landing_runs;
    std::string points = csv_preamble("landing_points", s.config_hash, c.seed,
                                      "controller=" + controller + " scenario=" + scenario);
    points += "run,seed,start_x,start_y,touched_down,offset_x,offset_y,touchdown_time,success\n";
    int ok = 0;
    for (int i = 0; i < runs; ++i) {
        RunSpec spec;
        spec.task = Task::Landing;
        spec.wind = parse_scenario(scenario);
        spec.scenario_name = scenario;
        spec.start = landing_starts()[static_cast<std::size_t>(i) % landing_starts().size()];
        spec.seed = c.seed + static_cast<std::uint64_t>(i);
        spec.duration = s.landing_max_time;
        const RunResult r = run_episode(s, ctl, spec);
        const std::string stem = "land_" + controller + "_" + scenario + "_run" + std::to_string(i);
        write_text((fs::path(c.out) / (stem + ".csv")).string(), trajectory_csv(r, s, spec, ctl.kind()));
        const auto& m = r.metrics;
        points += std::to_string(i) + "," + std::to_string(spec.seed) + "," + format_double(spec.start.x()) + "," +
                  format_double(spec.start.y()) + "," + (m.touchdown_offset ? "1" : "0") + "," +
                  (m.touchdown_offset ? format_double(m.touchdown_offset->x()) : "nan") + "," +
                  (m.touchdown_offset ? format_double(m.touchdown_offset->y()) : "nan") + "," +
                  (m.touchdown_time ? format_double(*m.touchdown_time) : "nan") + "," + (m.success ? "1" : "0") +
                  "\n";
        ok += m.success ? 1 : 0;
        print_metrics(stem, m);
    }
    write_text((fs::path(c.out) / ("landing_points_" + controller + "_" + scenario + ".csv")).string(), points);
    std::printf("{\"successes\": %d, \"runs\": %d}\n", ok, runs);
    return 0;
}

int cmd_compare(const Common& c, const std::string& checkpoint, std::vector<std::string> scenarios, int seeds) {
    const Settings s = settings_from_config(load_config(c.config));
    ensure_dir(c.out);
    if (seeds <= 0) seeds = s.compare_seeds;
    if (scenarios.empty()) scenarios = {"sudden_cross_5", "sin_head_5_20", "time_varying"};
    const ControllerPair rl = rl_controllers(checkpoint);
    const ControllerPair pid = pid_controllers(s.pid);
    const HoverComparison cmp = compare_hover(s, rl, pid, scenarios, c.seed, seeds);
    write_text((fs::path(c.out) / "comparison.csv").string(), comparison_csv(cmp, s, c.seed));

    for (std::size_t k = 0; k < scenarios.size(); ++k) {
        const std::size_t i = k * static_cast<std::size_t>(seeds);  // first seed of each scenario
        const WindScenario w = parse_scenario(scenarios[k]);
        const bool cross = !std::holds_alternative<wind::TimeVarying>(w) && wind_direction(w, 0.0) == kCrosswindDir;
        const auto axis = cross ? &TrajectoryRow::y : &TrajectoryRow::x;
        write_text((fs::path(c.out) / ("deviation_" + scenarios[k] + ".svg")).string(),
                   deviation_plot(cmp.rl_runs[i], cmp.pid_runs[i], "Hover, " + scenarios[k], axis,
                                  cross ? "sideward" : "forward", s.reward.inner));
    }

    // Landing scatter under rotating wind.
    std::vector<RunResult> rl_land, pid_land;
    for (int i = 0; i < s.landing_runs; ++i) {
        const auto start = landing_starts()[static_cast<std::size_t>(i) % landing_starts().size()];
        const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(i);
        rl_land.push_back(run_landing(s, rl, wind::TimeVarying{}, "time_varying", start, seed));
        pid_land.push_back(run_landing(s, pid, wind::TimeVarying{}, "time_varying", start, seed));
    }
    write_text((fs::path(c.out) / "landing_scatter.svg").string(),
               landing_scatter(rl_land, pid_land, "Landing points, time-varying wind", s.landing.safe_zone));

    std::printf("%-16s %6s %10s %10s %8s %10s %10s\n", "scenario", "seed", "rl_dev", "pid_dev", "ratio", "rl_rec",
                "pid_rec");
    for (const auto& r : cmp.rows) {
        const WindScenario w = parse_scenario(r.scenario);
        const double rd = ComparisonRow::deviation(r.rl, w), pd = ComparisonRow::deviation(r.pid, w);
        std::printf("%-16s %6llu %10.4f %10.4f %8.3f %10.2f %10.2f\n", r.scenario.c_str(),
                    static_cast<unsigned long long>(r.seed), rd, pd, pd > 0 ? rd / pd : 0.0,
                    ComparisonRow::recovery(r.rl, w), ComparisonRow::recovery(r.pid, w));
    }
    int rl_ok = 0, pid_ok = 0;
    for (const auto& r : rl_land) rl_ok += r.metrics.success;
    for (const auto& r : pid_land) pid_ok += r.metrics.success;
    std::printf("landing (time_varying): rl %d/%d, pid %d/%d\n", rl_ok, s.landing_runs, pid_ok, s.landing_runs);
    return 0;
}

int cmd_render_demo(const Common& c, const std::string& scenario, const std::string& controller,
                    const std::string& checkpoint, int stride) {
    const Settings s = settings_from_config(load_config(c.config));
    ensure_dir(c.out);
    if (stride < 1) throw ConfigError("--stride must be >= 1");
    const ControllerPair ctl = make_controllers(s, controller, checkpoint);
    const auto start = landing_starts().front();
    const RunResult r = run_landing(s, ctl, parse_scenario(scenario), scenario, start, c.seed);
    nlohmann::json records = nlohmann::json::array();
    int frame = 0;
    for (std::size_t i = 0; i < r.rows.size(); i += static_cast<std::size_t>(stride)) {
        const auto& row = r.rows[i];
        UavState u;
        u.position = {row.x, row.y, row.z};
        u.roll = row.roll;
        u.pitch = row.pitch;
        char name[32];
        std::snprintf(name, sizeof name, "frame_%04d.ppm", frame++);
        nlohmann::json rec;
        try {
            const RgbImage img = render_bar(s.rig.camera, u, s.rig.bar, s.scene, s.rig.image_width,
                                            s.rig.image_height, s.rig.style);
            write_ppm((fs::path(c.out) / name).string(), img);
            rec = to_json(detect_bar_record(img, s.rig.detector));
        } catch (const BarNotVisible& e) {
            rec = {{"corners", nlohmann::json::array()}, {"accepted", false}, {"reason", e.what()}};
        }
        rec["frame"] = name;
        rec["t"] = row.t;
        records.push_back(rec);
    }
    write_text((fs::path(c.out) / "detections.json").string(), records.dump(1) + "\n");
    print_metrics("render_demo", r.metrics);
    return 0;
}

void emit_error(const std::string& code, const std::string& message) {
    nlohmann::json j{{"error", code}, {"message", message}};
    std::cerr << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"shipland: vision-based ship landing with TD3 and PID controllers"};
    app.require_subcommand(1);
    app.set_version_flag("--version", SHIPLAND_VERSION);

    Common common;
    std::string scenario = "none", controller = "rl", checkpoint, axis = "both";
    std::vector<std::string> scenarios;
    int episodes = 0, runs = 0, seeds = 0, stride = 5;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config, "key = value configuration file");
        sub->add_option("--seed", common.seed, "random seed");
        sub->add_option("--out", common.out, "output directory");
    };
    auto add_run = [&](CLI::App* sub) {
        sub->add_option("--scenario", scenario, "wind scenario, e.g. sudden_cross_5, sin_head_5_20, time_varying");
        sub->add_option("--controller", controller, "rl or pid");
        sub->add_option("--checkpoint", checkpoint, "directory holding roll.json and pitch.json");
    };

    auto* train_cmd = app.add_subcommand("train", "train the roll and/or pitch agents");
    add_common(train_cmd);
    train_cmd->add_option("--axis", axis, "roll, pitch or both");
    train_cmd->add_option("--episodes", episodes, "override train.episodes");

    auto* tune_cmd = app.add_subcommand("tune-pid", "ITAE grid search for the PID baseline");
    add_common(tune_cmd);

    auto* hover_cmd = app.add_subcommand("hover", "hover over the target under a wind scenario");
    add_common(hover_cmd);
    add_run(hover_cmd);

    auto* land_cmd = app.add_subcommand("land", "landing runs from the default start grid");
    add_common(land_cmd);
    add_run(land_cmd);
    land_cmd->add_option("--runs", runs, "number of runs (default landing.runs)");

    auto* cmp_cmd = app.add_subcommand("compare", "RL versus PID hover table, plots and landing scatter");
    add_common(cmp_cmd);
    cmp_cmd->add_option("--checkpoint", checkpoint, "directory holding roll.json and pitch.json")->required();
    cmp_cmd->add_option("--scenarios", scenarios, "scenario names");
    cmp_cmd->add_option("--seeds", seeds, "seeds per scenario (default compare.seeds)");

    auto* demo_cmd = app.add_subcommand("render-demo", "rendered camera frames of one landing");
    add_common(demo_cmd);
    add_run(demo_cmd);
    demo_cmd->add_option("--stride", stride, "write every n-th control step");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        emit_error("UsageError", e.what());
        return 2;
    }

    try {
        if (*train_cmd) return cmd_train(common, axis, episodes);
        if (*tune_cmd) return cmd_tune_pid(common);
        if (*hover_cmd) return cmd_hover(common, scenario, controller, checkpoint);
        if (*land_cmd) return cmd_land(common, scenario, controller, checkpoint, runs);
        if (*cmp_cmd) return cmd_compare(common, checkpoint, scenarios, seeds);
        if (*demo_cmd) return cmd_render_demo(common, scenario, controller, checkpoint, stride);
    } catch (const Error& e) {
        emit_error(e.code(), e.what());
        return 1;
    } catch (const std::invalid_argument& e) {
        emit_error("InvalidArgument", e.what());
        return 1;
    } catch (const std::exception& e) {
        emit_error("InternalError", e.what());
        return 1;
    }
    return 0;
}
