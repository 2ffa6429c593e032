#pragma once
/**
 * @file experiment.hpp
 * @brief Hover and landing runs, metrics, trajectory CSV and comparisons.
 */

#include <shipland/config.hpp>
#include <shipland/errors.hpp>
#include <shipland/mlp.hpp>
#include <shipland/pid.hpp>
#include <shipland/rl.hpp>
#include <shipland/sim.hpp>
#include <shipland/svg.hpp>
#include <shipland/wind.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#ifndef SHIPLAND_VERSION
#define SHIPLAND_VERSION "unknown"
#endif

namespace shipland {

inline constexpr int kCsvSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Settings

/// Everything a run needs, decoded from a Config.
struct Settings {
    SimConfig sim;
    ObservationConfig obs{ObservationMode::DirectWithNoise, 0.01, 1};
    RewardParams reward;
    TrainConfig train;
    PidGains pid{0.5, 0.0, 0.5, 1.0, 1.0};
    LandingConfig landing;
    double landing_max_time = 60.0;
    double hover_duration = 40.0;
    SceneGeometry scene;
    DeckMotionParams deck;
    VisionRig rig;
    int compare_seeds = 5;
    int landing_runs = 20;
    std::string config_hash = Config{}.hash();
};

inline const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys{
        "sim.dt", "sim.substeps", "sim.mass", "sim.drag", "sim.lag", "sim.tilt_limit_deg", "sim.t_max",
        "obs.mode", "obs.noise_pos", "obs.delay",
        "reward.inner", "reward.safe", "reward.outer", "reward.coef_diff", "reward.coef_action",
        "reward.coef_distance",
        "td3.gamma", "td3.policy_delay", "td3.actor_lr", "td3.critic_lr", "td3.buffer", "td3.target_noise",
        "td3.target_noise_clip", "td3.explore_sigma", "td3.tau", "td3.batch", "td3.warmup", "td3.hidden",
        "train.episodes", "train.wind", "train.noise_min", "train.noise_max", "train.delay_min", "train.delay_max",
        "train.jitter", "train.init_pos", "train.init_vel", "train.constant_max", "train.sudden_max",
        "pid.kp", "pid.ki", "pid.kd", "pid.integral_limit",
        "landing.safe_zone", "landing.dwell", "landing.descent_rate", "landing.max_time", "landing.runs",
        "hover.duration", "compare.seeds",
        "scene.bar_distance", "scene.bar_height", "scene.hover_altitude", "scene.gimbal",
        "deck.amplitude", "deck.period", "deck.phase", "deck.forward_speed",
        "camera.fx", "camera.fy", "camera.cx", "camera.cy", "camera.width", "camera.height",
        "bar.rect_width", "bar.rect_height", "bar.gap",
        "vision.hue_min", "vision.hue_max", "vision.sat_min", "vision.val_min", "vision.line_polish"};
    return keys;
}

inline std::array<double, kDeckDofs> six(const Config& c, const std::string& key, const std::array<double, 6>& def) {
    const auto v = c.get_list(key, std::vector<double>(def.begin(), def.end()));
    if (v.size() != kDeckDofs) throw ConfigError("config key '" + key + "' expects 6 comma-separated values");
    std::array<double, kDeckDofs> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

inline Settings settings_from_config(const Config& c) {
    c.require_known(known_config_keys());
    Settings s;
    s.config_hash = c.hash();

    s.sim.dt = c.get_double("sim.dt", s.sim.dt);
    s.sim.substeps = static_cast<int>(c.get_int("sim.substeps", s.sim.substeps));
    s.sim.mass = c.get_double("sim.mass", s.sim.mass);
    s.sim.drag = c.get_double("sim.drag", s.sim.drag);
    s.sim.lag = c.get_double("sim.lag", s.sim.lag);
    s.sim.tilt_limit = deg2rad(c.get_double("sim.tilt_limit_deg", 20.0));
    s.sim.t_max = c.get_double("sim.t_max", s.sim.t_max);
    try {
        s.sim.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }

    const std::string mode = c.get_string("obs.mode", "direct");
    if (mode == "direct")
        s.obs.mode = ObservationMode::DirectWithNoise;
    else if (mode == "vision")
        s.obs.mode = ObservationMode::RenderedVision;
    else
        throw ConfigError("obs.mode must be 'direct' or 'vision'");
    s.obs.noise_pos = c.get_double("obs.noise_pos", s.obs.noise_pos);
    s.obs.delay = static_cast<int>(c.get_int("obs.delay", s.obs.delay));
    if (s.obs.noise_pos < 0.0 || s.obs.delay < 0) throw ConfigError("obs.noise_pos and obs.delay must be >= 0");

    s.reward.inner = c.get_double("reward.inner", s.reward.inner);
    s.reward.safe = c.get_double("reward.safe", s.reward.safe);
    s.reward.outer = c.get_double("reward.outer", s.reward.outer);
    s.reward.coef_diff = c.get_double("reward.coef_diff", s.reward.coef_diff);
    s.reward.coef_action = c.get_double("reward.coef_action", s.reward.coef_action);
    s.reward.coef_distance = c.get_double("reward.coef_distance", s.reward.coef_distance);
    if (!(0.0 < s.reward.inner && s.reward.inner < s.reward.safe && s.reward.safe < s.reward.outer))
        throw ConfigError("reward bands must satisfy 0 < inner < safe < outer");

    Td3Config& t = s.train.td3;
    t.gamma = c.get_double("td3.gamma", t.gamma);
    t.policy_delay = static_cast<int>(c.get_int("td3.policy_delay", t.policy_delay));
    t.actor_lr = c.get_double("td3.actor_lr", t.actor_lr);
    t.critic_lr = c.get_double("td3.critic_lr", t.critic_lr);
    t.buffer_capacity = static_cast<std::size_t>(c.get_int("td3.buffer", static_cast<long>(t.buffer_capacity)));
    t.target_noise = c.get_double("td3.target_noise", t.target_noise);
    t.target_noise_clip = c.get_double("td3.target_noise_clip", t.target_noise_clip);
    t.explore_sigma = c.get_double("td3.explore_sigma", t.explore_sigma);
    t.tau = c.get_double("td3.tau", t.tau);
    t.batch_size = static_cast<std::size_t>(c.get_int("td3.batch", static_cast<long>(t.batch_size)));
    t.warmup_steps = c.get_int("td3.warmup", t.warmup_steps);
    {
        const auto h = c.get_list("td3.hidden", {64.0, 64.0});
        t.hidden.clear();
        for (double v : h) {
            if (v < 1.0 || v != std::floor(v)) throw ConfigError("td3.hidden expects positive integers");
            t.hidden.push_back(static_cast<int>(v));
        }
    }
    t.validate();

    Randomization& r = s.train.randomization;
    s.train.episodes = static_cast<int>(c.get_int("train.episodes", s.train.episodes));
    r.wind = c.get_bool("train.wind", r.wind);
    r.noise_min = c.get_double("train.noise_min", r.noise_min);
    r.noise_max = c.get_double("train.noise_max", r.noise_max);
    r.delay_min = static_cast<int>(c.get_int("train.delay_min", r.delay_min));
    r.delay_max = static_cast<int>(c.get_int("train.delay_max", r.delay_max));
    r.jitter = c.get_double("train.jitter", r.jitter);
    r.init_pos = c.get_double("train.init_pos", r.init_pos);
    r.init_vel = c.get_double("train.init_vel", r.init_vel);
    r.wind_ranges.constant_max = c.get_double("train.constant_max", r.wind_ranges.constant_max);
    r.wind_ranges.sudden_max = c.get_double("train.sudden_max", r.wind_ranges.sudden_max);
    s.train.sim = s.sim;
    s.train.reward = s.reward;

    s.pid.kp = c.get_double("pid.kp", s.pid.kp);
    s.pid.ki = c.get_double("pid.ki", s.pid.ki);
    s.pid.kd = c.get_double("pid.kd", s.pid.kd);
    s.pid.integral_limit = c.get_double("pid.integral_limit", s.pid.integral_limit);
    s.pid.validate();

    s.landing.safe_zone = c.get_double("landing.safe_zone", s.landing.safe_zone);
    s.landing.dwell = c.get_double("landing.dwell", s.landing.dwell);
    s.landing.descent_rate = c.get_double("landing.descent_rate", s.landing.descent_rate);
    s.landing_max_time = c.get_double("landing.max_time", s.landing_max_time);
    s.landing_runs = static_cast<int>(c.get_int("landing.runs", s.landing_runs));
    s.hover_duration = c.get_double("hover.duration", s.hover_duration);
    s.compare_seeds = static_cast<int>(c.get_int("compare.seeds", s.compare_seeds));
    if (!(s.landing.descent_rate > 0.0) || !(s.landing.safe_zone > 0.0) || s.landing.dwell < 0.0)
        throw ConfigError("landing parameters out of range");

    s.scene.bar_distance = c.get_double("scene.bar_distance", s.scene.bar_distance);
    s.scene.bar_height = c.get_double("scene.bar_height", s.scene.bar_height);
    s.scene.hover_altitude = c.get_double("scene.hover_altitude", s.scene.hover_altitude);
    s.scene.gimbal = c.get_bool("scene.gimbal", s.scene.gimbal);

    s.deck.amplitude = six(c, "deck.amplitude", s.deck.amplitude);
    s.deck.period = six(c, "deck.period", s.deck.period);
    s.deck.phase = six(c, "deck.phase", s.deck.phase);
    s.deck.forward_speed = c.get_double("deck.forward_speed", s.deck.forward_speed);
    for (double p : s.deck.period)
        if (!(p > 0.0)) throw ConfigError("deck.period entries must be > 0");

    s.rig.camera.fx = c.get_double("camera.fx", s.rig.camera.fx);
    s.rig.camera.fy = c.get_double("camera.fy", s.rig.camera.fy);
    s.rig.camera.cx = c.get_double("camera.cx", s.rig.camera.cx);
    s.rig.camera.cy = c.get_double("camera.cy", s.rig.camera.cy);
    s.rig.image_width = static_cast<int>(c.get_int("camera.width", s.rig.image_width));
    s.rig.image_height = static_cast<int>(c.get_int("camera.height", s.rig.image_height));
    if (!s.rig.camera.valid(s.rig.image_width, s.rig.image_height)) throw ConfigError("invalid camera intrinsics");
    s.rig.bar.rect_width = c.get_double("bar.rect_width", s.rig.bar.rect_width);
    s.rig.bar.rect_height = c.get_double("bar.rect_height", s.rig.bar.rect_height);
    s.rig.bar.gap = c.get_double("bar.gap", s.rig.bar.gap);
    if (!s.rig.bar.valid()) throw ConfigError("bar dimensions must be > 0");
    s.rig.detector.hsv.hue_lo = c.get_double("vision.hue_min", s.rig.detector.hsv.hue_lo);
    s.rig.detector.hsv.hue_hi = c.get_double("vision.hue_max", s.rig.detector.hsv.hue_hi);
    s.rig.detector.hsv.sat_lo = c.get_double("vision.sat_min", s.rig.detector.hsv.sat_lo);
    s.rig.detector.hsv.val_lo = c.get_double("vision.val_min", s.rig.detector.hsv.val_lo);
    s.rig.detector.line_polish = c.get_bool("vision.line_polish", s.rig.detector.line_polish);
    return s;
}

// ---------------------------------------------------------------------------
// Controllers

enum class ControllerKind { Rl, Pid };

inline const char* controller_name(ControllerKind k) { return k == ControllerKind::Rl ? "rl" : "pid"; }

inline ControllerKind parse_controller(const std::string& s) {
    if (s == "rl") return ControllerKind::Rl;
    if (s == "pid") return ControllerKind::Pid;
    throw ConfigError("controller must be 'rl' or 'pid', got '" + s + "'");
}

/// One axis: either a trained actor over the estimate history or a PID on
/// the estimated position error.
class AxisController {
public:
    static AxisController rl(Mlp<float> actor) {
        if (actor.input_size() != kStateSize || actor.output_size() != 1)
            throw ShapeMismatch("actor must map the 12-dim state to one action");
        AxisController c;
        c.kind_ = ControllerKind::Rl;
        c.actor_ = std::move(actor);
        return c;
    }
    static AxisController pid(const PidGains& g) {
        AxisController c;
        c.kind_ = ControllerKind::Pid;
        c.pid_ = PidController(g);
        return c;
    }

    ControllerKind kind() const { return kind_; }

    void reset() {
        history_.reset();
        pid_.reset();
    }

    /// `p`, `v`: estimated position error (target at 0) and velocity.
    double act(double p, double v, double dt) {
        if (kind_ == ControllerKind::Pid) return pid_.act(-p, dt);
        history_.push(p, v);
        return std::clamp(actor_output(actor_, history_.assemble()), -1.0, 1.0);
    }

private:
    ControllerKind kind_ = ControllerKind::Pid;
    Mlp<float> actor_;
    StateHistory history_;
    PidController pid_;
};

struct ControllerPair {
    AxisController roll;   // lateral, y
    AxisController pitch;  // longitudinal, x
    ControllerKind kind() const { return roll.kind(); }
};

inline ControllerPair pid_controllers(const PidGains& g) { return {AxisController::pid(g), AxisController::pid(g)}; }

/// Loads roll.json and pitch.json from a checkpoint directory.
inline ControllerPair rl_controllers(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path base(dir);
    for (const char* f : {"roll.json", "pitch.json"})
        if (!fs::exists(base / f)) throw ConfigError("checkpoint directory " + dir + " lacks " + f);
    return {AxisController::rl(load_checkpoint<float>((base / "roll.json").string())),
            AxisController::rl(load_checkpoint<float>((base / "pitch.json").string()))};
}

// ---------------------------------------------------------------------------
// Runs

enum class Task { Hover, Landing };

struct TrajectoryRow {
    double t = 0.0;
    double x = 0.0, y = 0.0, z = 0.0;
    double vx = 0.0, vy = 0.0, vz = 0.0;
    double roll = 0.0, pitch = 0.0;
    double wind_x = 0.0, wind_y = 0.0;
    double action_roll = 0.0, action_pitch = 0.0;
    double reward = 0.0;
    Phase phase = Phase::Approach;

    friend bool operator==(const TrajectoryRow&, const TrajectoryRow&) = default;
};

struct RunMetrics {
    double max_dev_x = 0.0;  // m
    double max_dev_y = 0.0;
    double recovery_x = 0.0;  // s; time from first exit of the band to final re-entry
    double recovery_y = 0.0;
    bool recovered_x = true;  // false: never re-entered, recovery censored at the run end
    bool recovered_y = true;
    std::optional<Eigen::Vector2d> touchdown_offset;  // x, y relative to the deck centre
    std::optional<double> touchdown_time;
    bool success = false;
    double episode_return = 0.0;
    bool left_outer_band = false;

    double max_dev() const { return std::max(max_dev_x, max_dev_y); }
};

struct RunSpec {
    Task task = Task::Hover;
    WindScenario wind;
    std::string scenario_name = "none";
    Eigen::Vector2d start = Eigen::Vector2d::Zero();  // x, y in the target frame, m
    std::uint64_t seed = 0;
    double duration = 40.0;  // s; for landing the time limit
};

struct RunResult {
    RunMetrics metrics;
    std::vector<TrajectoryRow> rows;
};

namespace detail {

// Time from first exit of |d| <= band to the final re-entry.
inline std::pair<double, bool> recovery(const std::vector<TrajectoryRow>& rows, double TrajectoryRow::*axis,
                                        double band) {
    std::optional<std::size_t> first_out;
    std::optional<std::size_t> last_out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (std::abs(rows[i].*axis) > band) {
            if (!first_out) first_out = i;
            last_out = i;
        }
    }
    if (!first_out) return {0.0, true};
    // Exit instant: the start of the run if the first row is already outside.
    const double t_exit = rows[*first_out].t;
    if (*last_out + 1 >= rows.size()) return {rows.back().t - t_exit, false};
    return {rows[*last_out + 1].t - t_exit, true};
}

}  // namespace detail

/// Metrics are a pure function of the logged rows (plus the deck model used
/// to score touchdown), so they can be recomputed from a CSV.
inline RunMetrics metrics_from_rows(const std::vector<TrajectoryRow>& rows, Task task, const Settings& s) {
    if (rows.empty()) throw ConfigError("run produced no trajectory rows");
    RunMetrics m;
    for (const auto& r : rows) {
        m.max_dev_x = std::max(m.max_dev_x, std::abs(r.x));
        m.max_dev_y = std::max(m.max_dev_y, std::abs(r.y));
        m.episode_return += r.reward;
        if (std::abs(r.x) > s.reward.outer || std::abs(r.y) > s.reward.outer) m.left_outer_band = true;
    }
    std::tie(m.recovery_x, m.recovered_x) = detail::recovery(rows, &TrajectoryRow::x, s.reward.inner);
    std::tie(m.recovery_y, m.recovered_y) = detail::recovery(rows, &TrajectoryRow::y, s.reward.inner);
    if (task == Task::Landing) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].phase != Phase::TouchedDown) continue;
            const DeckState d = deck_motion(rows[i].t, s.deck);
            m.touchdown_offset = Eigen::Vector2d(rows[i].x - d.dof[kSurge], rows[i].y - d.dof[kSway]);
            const double surface = s.scene.deck_surface(d, rows[i].x, rows[i].y);
            m.touchdown_time = rows[i].t - std::min((surface - rows[i].z) / s.landing.descent_rate, s.sim.dt);
            break;
        }
        m.success = m.touchdown_offset && !m.left_outer_band &&
                    std::abs(m.touchdown_offset->x()) < s.landing.safe_zone &&
                    std::abs(m.touchdown_offset->y()) < s.landing.safe_zone;
    }
    return m;
}

/**
 * Closed-loop run. Each control step: observe (delayed, noisy, or through
 * the vision pipeline), act on both axes, integrate under the wind at the
 * start of the step. A failed vision estimate holds the previous actions.
 * The run stops early if either axis leaves the outer band or, for landing,
 * at touchdown.
 */
inline RunResult run_episode(const Settings& s, ControllerPair controllers, const RunSpec& spec) {
    if (!(spec.duration > 0.0)) throw ConfigError("run duration must be > 0");
    std::mt19937_64 rng(spec.seed);
    Observer observer(s.obs, s.sim.dt, s.scene, s.rig);
    LandingLogic landing(s.landing);
    controllers.roll.reset();
    controllers.pitch.reset();

    UavState uav;
    uav.position.x() = spec.start.x();
    uav.position.y() = spec.start.y();
    observer.reset(uav);

    const int steps = static_cast<int>(std::lround(spec.duration / s.sim.dt));
    const double horizon = static_cast<double>(steps);
    RunResult out;
    auto row_of = [&](double t, const Eigen::Vector3d& w, const Action& a, double r) {
        TrajectoryRow row;
        row.t = t;
        row.x = uav.position.x();
        row.y = uav.position.y();
        row.z = uav.position.z();
        row.vx = uav.velocity.x();
        row.vy = uav.velocity.y();
        row.vz = uav.velocity.z();
        row.roll = uav.roll;
        row.pitch = uav.pitch;
        row.wind_x = w.x();
        row.wind_y = w.y();
        row.action_roll = a.roll;
        row.action_pitch = a.pitch;
        row.reward = r;
        row.phase = landing.phase();
        return row;
    };
    out.rows.push_back(row_of(0.0, wind_at(spec.wind, 0.0), Action{}, 0.0));

    std::vector<double> hist_roll, hist_pitch;
    Action act;
    bool terminated = std::abs(uav.position.x()) > s.reward.outer || std::abs(uav.position.y()) > s.reward.outer;
    for (int k = 0; k < steps && !terminated; ++k) {
        const double t = k * s.sim.dt;
        try {
            const Observation o = observer.observe(uav, rng);
            act.roll = controllers.roll.act(o.position.y(), o.velocity.y(), s.sim.dt);
            act.pitch = controllers.pitch.act(o.position.x(), o.velocity.x(), s.sim.dt);
        } catch (const EstimateUnavailable&) {
            // Hold the previous command.
        }
        const Eigen::Vector3d w = wind_at(spec.wind, t);
        const double vertical = spec.task == Task::Landing ? landing.vertical_rate() : 0.0;
        try {
            uav = step(uav, act, w, s.sim, vertical);
        } catch (const NonFinite& e) {
            throw ControllerDiverged(std::string("closed loop diverged: ") + e.what());
        }
        const double t1 = (k + 1) * s.sim.dt;
        const double r = reward(uav.position.y(), act.roll, hist_roll, horizon, k, s.reward) +
                         reward(uav.position.x(), act.pitch, hist_pitch, horizon, k, s.reward);
        hist_roll.push_back(act.roll);
        hist_pitch.push_back(act.pitch);
        if (hist_roll.size() > kActionHistory) hist_roll.erase(hist_roll.begin());
        if (hist_pitch.size() > kActionHistory) hist_pitch.erase(hist_pitch.begin());

        if (spec.task == Task::Landing) {
            const DeckState d = deck_motion(t1, s.deck);
            landing.update(uav, Eigen::Vector2d::Zero(), Eigen::Vector2d(d.dof[kSurge], d.dof[kSway]),
                           s.scene.deck_surface(d, uav.position.x(), uav.position.y()), t1, s.sim.dt);
        }
        out.rows.push_back(row_of(t1, w, act, r));
        terminated = is_terminal(uav.position.x(), s.reward) || is_terminal(uav.position.y(), s.reward) ||
                     landing.phase() == Phase::TouchedDown;
    }
    out.metrics = metrics_from_rows(out.rows, spec.task, s);
    return out;
}

inline RunResult run_hover(const Settings& s, const ControllerPair& c, const WindScenario& wind,
                           const std::string& name, std::uint64_t seed) {
    RunSpec spec;
    spec.task = Task::Hover;
    spec.wind = wind;
    spec.scenario_name = name;
    spec.seed = seed;
    spec.duration = s.hover_duration;
    return run_episode(s, c, spec);
}

/// Default start grid for landing studies, metres in the target frame.
inline const std::vector<Eigen::Vector2d>& landing_starts() {
    static const std::vector<Eigen::Vector2d> g{{1.5, 1.0}, {1.5, -1.0}, {-1.5, 1.0},
                                                {-1.5, -1.0}, {0.0, 1.5}, {-1.0, 0.0}};
    return g;
}

inline RunResult run_landing(const Settings& s, const ControllerPair& c, const WindScenario& wind,
                             const std::string& name, const Eigen::Vector2d& start, std::uint64_t seed) {
    RunSpec spec;
    spec.task = Task::Landing;
    spec.wind = wind;
    spec.scenario_name = name;
    spec.start = start;
    spec.seed = seed;
    spec.duration = s.landing_max_time;
    return run_episode(s, c, spec);
}

// ---------------------------------------------------------------------------
// CSV

inline const char* kTrajectoryColumns =
    "t,x,y,z,vx,vy,vz,roll,pitch,wind_x,wind_y,action_roll,action_pitch,reward,phase";

inline std::string csv_preamble(const std::string& kind, const std::string& config_hash, std::uint64_t seed,
                                const std::string& extra = {}) {
    std::string s = "# shipland " + kind + " schema=" + std::to_string(kCsvSchemaVersion) + "\n";
    s += "# version=" SHIPLAND_VERSION "\n";
    s += "# config_hash=" + config_hash + "\n";
    s += "# seed=" + std::to_string(seed) + "\n";
    if (!extra.empty()) s += "# " + extra + "\n";
    return s;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string trajectory_csv(const RunResult& r, const Settings& s, const RunSpec& spec,
                                  ControllerKind controller) {
    std::string out = csv_preamble("trajectory", s.config_hash, spec.seed,
                                   std::string("task=") + (spec.task == Task::Hover ? "hover" : "landing") +
                                       " controller=" + controller_name(controller) +
                                       " scenario=" + spec.scenario_name);
    out += kTrajectoryColumns;
    out += '\n';
    for (const auto& row : r.rows) {
        const double v[] = {row.t,  row.x,      row.y,      row.z,           row.vx,           row.vy,   row.vz,
                            row.roll, row.pitch, row.wind_x, row.wind_y, row.action_roll, row.action_pitch, row.reward};
        for (double x : v) out += format_double(x) + ",";
        out += phase_name(row.phase);
        out += '\n';
    }
    return out;
}

inline Phase parse_phase(const std::string& s) {
    if (s == "approach") return Phase::Approach;
    if (s == "descend") return Phase::Descend;
    if (s == "touched_down") return Phase::TouchedDown;
    throw ConfigError("unknown phase '" + s + "' in trajectory CSV");
}

inline std::vector<TrajectoryRow> parse_trajectory_csv(std::istream& in) {
    std::vector<TrajectoryRow> rows;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != kTrajectoryColumns) throw ConfigError("unexpected trajectory CSV columns: " + line);
            header = true;
            continue;
        }
        std::stringstream ss(line);
        std::string tok;
        std::vector<std::string> f;
        while (std::getline(ss, tok, ',')) f.push_back(tok);
        if (f.size() != 15) throw ConfigError("trajectory CSV row has " + std::to_string(f.size()) + " fields");
        TrajectoryRow r;
        double* dst[] = {&r.t,  &r.x,     &r.y,      &r.z,      &r.vx,          &r.vy,           &r.vz,
                         &r.roll, &r.pitch, &r.wind_x, &r.wind_y, &r.action_roll, &r.action_pitch, &r.reward};
        try {
            for (std::size_t i = 0; i < 14; ++i) *dst[i] = std::stod(f[i]);
        } catch (const std::logic_error&) {
            throw ConfigError("non-numeric field in trajectory CSV: " + line);
        }
        r.phase = parse_phase(f[14]);
        rows.push_back(r);
    }
    if (!header) throw ConfigError("trajectory CSV has no column header");
    return rows;
}

inline std::vector<TrajectoryRow> read_trajectory_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    return parse_trajectory_csv(in);
}

inline std::string training_log_csv(const std::vector<EpisodeLog>& log, const std::string& config_hash,
                                    std::uint64_t seed, Axis axis) {
    std::string out = csv_preamble("training_log", config_hash, seed, std::string("axis=") + axis_name(axis));
    out += "episode,return,length,scenario,max_abs_d\n";
    for (const auto& e : log)
        out += std::to_string(e.episode) + "," + format_double(e.ret) + "," + std::to_string(e.length) + "," +
               e.scenario + "," + format_double(e.max_abs_d) + "\n";
    return out;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << text;
}

// ---------------------------------------------------------------------------
// Comparison

/// Paired RL / PID hover metrics for one scenario and seed.
struct ComparisonRow {
    std::string scenario;
    std::uint64_t seed = 0;
    RunMetrics rl;
    RunMetrics pid;

    /// Deviation along the axis the scenario disturbs (both for rotating wind).
    static double deviation(const RunMetrics& m, const WindScenario& w) {
        if (std::holds_alternative<wind::TimeVarying>(w)) return m.max_dev();
        return wind_direction(w, 0.0) == kCrosswindDir ? m.max_dev_y : m.max_dev_x;
    }
    static double recovery(const RunMetrics& m, const WindScenario& w) {
        if (std::holds_alternative<wind::TimeVarying>(w)) return std::max(m.recovery_x, m.recovery_y);
        return wind_direction(w, 0.0) == kCrosswindDir ? m.recovery_y : m.recovery_x;
    }
};

struct HoverComparison {
    std::vector<ComparisonRow> rows;
    std::vector<RunResult> rl_runs;
    std::vector<RunResult> pid_runs;
};

inline HoverComparison compare_hover(const Settings& s, const ControllerPair& rl, const ControllerPair& pid,
                                     const std::vector<std::string>& scenarios, std::uint64_t seed0, int seeds) {
    HoverComparison out;
    for (const auto& name : scenarios) {
        const WindScenario w = parse_scenario(name);
        for (int i = 0; i < seeds; ++i) {
            const std::uint64_t seed = seed0 + static_cast<std::uint64_t>(i);
            auto a = run_hover(s, rl, w, name, seed);
            auto b = run_hover(s, pid, w, name, seed);
            out.rows.push_back({name, seed, a.metrics, b.metrics});
            out.rl_runs.push_back(std::move(a));
            out.pid_runs.push_back(std::move(b));
        }
    }
    return out;
}

inline std::string comparison_csv(const HoverComparison& c, const Settings& s, std::uint64_t seed0) {
    std::string out = csv_preamble("comparison", s.config_hash, seed0);
    out += "scenario,seed,rl_max_dev,pid_max_dev,dev_ratio,rl_recovery,rl_recovered,pid_recovery,pid_recovered,"
           "recovery_ratio\n";
    for (const auto& r : c.rows) {
        const WindScenario w = parse_scenario(r.scenario);
        const double rd = ComparisonRow::deviation(r.rl, w), pd = ComparisonRow::deviation(r.pid, w);
        const double rr = ComparisonRow::recovery(r.rl, w), pr = ComparisonRow::recovery(r.pid, w);
        const bool rok = r.rl.recovered_x && r.rl.recovered_y, pok = r.pid.recovered_x && r.pid.recovered_y;
        out += r.scenario + "," + std::to_string(r.seed) + "," + format_double(rd) + "," + format_double(pd) + "," +
               format_double(pd > 0.0 ? rd / pd : 0.0) + "," + format_double(rr) + "," + (rok ? "1" : "0") + "," +
               format_double(pr) + "," + (pok ? "1" : "0") + "," + format_double(pr > 0.0 ? rr / pr : 0.0) + "\n";
    }
    return out;
}

/// Deviation-versus-time plot for one RL and one PID run.
inline std::string deviation_plot(const RunResult& rl, const RunResult& pid, const std::string& title,
                                  double TrajectoryRow::*axis, const std::string& axis_label, double band) {
    auto series = [axis](const RunResult& r, const std::string& label, const std::string& colour, bool dashed) {
        svg::Series s{label, {}, {}, colour, dashed};
        for (const auto& row : r.rows) {
            s.x.push_back(row.t);
            s.y.push_back(row.*axis);
        }
        return s;
    };
    svg::Axes ax{title, "time [s]", axis_label + " deviation [m]"};
    ax.guides = {-band, band};
    return svg::line_plot({series(rl, "RL", "#1f77b4", false), series(pid, "PID", "#d62728", true)}, ax);
}

/// Landing points of several runs relative to the deck centre.
inline std::string landing_scatter(const std::vector<RunResult>& rl, const std::vector<RunResult>& pid,
                                   const std::string& title, double safe_zone) {
    auto series = [](const std::vector<RunResult>& runs, const std::string& label, const std::string& colour) {
        svg::Series s{label, {}, {}, colour, false};
        for (const auto& r : runs)
            if (r.metrics.touchdown_offset) {
                s.x.push_back(r.metrics.touchdown_offset->y());
                s.y.push_back(r.metrics.touchdown_offset->x());
            }
        return s;
    };
    svg::Axes ax{title, "sideward offset y [m]", "forward offset x [m]", 520, 520};
    ax.box = safe_zone;
    return svg::scatter_plot({series(rl, "RL", "#1f77b4"), series(pid, "PID", "#d62728")}, ax);
}

}  // namespace shipland
