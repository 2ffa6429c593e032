#pragma once
/**
 * @file pid.hpp
 * @brief Single-loop position PID per axis, and its ITAE grid tuner.
 *
 * The error is target minus position, so a positive error asks for a
 * positive tilt command.
 */

#include <shipland/errors.hpp>
#include <shipland/sim.hpp>
#include <shipland/wind.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace shipland {

struct PidGains {
    double kp = 0.0;
    double ki = 0.0;
    double kd = 0.0;
    double output_limit = 1.0;
    double integral_limit = 1.0;  // bound on |ki * integral|

    void validate() const {
        if (!(kp >= 0.0) || !(ki >= 0.0) || !(kd >= 0.0)) throw ConfigError("PID gains must be >= 0");
        if (!(output_limit > 0.0) || !(integral_limit > 0.0)) throw ConfigError("PID clamps must be > 0");
    }
    friend bool operator==(const PidGains&, const PidGains&) = default;
};

struct PidState {
    double integral = 0.0;  // accumulated error, m s
    std::optional<double> prev_error;
};

/**
 * a = clamp(kp e + ki I + kd de/dt). The integral is accumulated by the
 * rectangle rule and clamped so |ki I| never exceeds the integral limit; the
 * derivative is 0 on the first step.
 */
inline std::pair<double, PidState> pid_step(double error, double dt, const PidState& state, const PidGains& g) {
    if (!(dt > 0.0)) throw std::invalid_argument("pid_step requires dt > 0");
    PidState next = state;
    next.integral += error * dt;
    if (g.ki > 0.0) {
        const double bound = g.integral_limit / g.ki;
        next.integral = std::clamp(next.integral, -bound, bound);
    }
    const double derivative = state.prev_error ? (error - *state.prev_error) / dt : 0.0;
    next.prev_error = error;
    const double a = g.kp * error + g.ki * next.integral + g.kd * derivative;
    return {std::clamp(a, -g.output_limit, g.output_limit), next};
}

class PidController {
public:
    explicit PidController(PidGains g = {}) : gains_(g) { gains_.validate(); }
    void reset() { state_ = {}; }
    double act(double error, double dt) {
        auto [a, s] = pid_step(error, dt, state_, gains_);
        state_ = s;
        return a;
    }
    const PidGains& gains() const { return gains_; }
    const PidState& state() const { return state_; }

private:
    PidGains gains_;
    PidState state_;
};

// ---------------------------------------------------------------------------
// Tuning

struct StepResponse {
    std::vector<double> t;
    std::vector<double> error;  // target - position
    double itae = 0.0;
    std::optional<double> settling_time;  // last entry into the 5 % band
};

struct StepTest {
    double step = 1.0;      // m
    double duration = 40.0;  // s
    double band = 0.05;     // settling band, fraction of the step
    SimConfig sim;
    ObservationConfig observation;
};

/// Time after which |error| stays inside band * step, if it ever does.
inline std::optional<double> settling_time(const std::vector<double>& t, const std::vector<double>& error,
                                           double tolerance) {
    if (t.empty()) return std::nullopt;
    std::size_t k = t.size();
    while (k > 0 && std::abs(error[k - 1]) <= tolerance) --k;
    if (k == t.size()) return std::nullopt;
    return k == 0 ? t.front() : t[k];
}

/**
 * Roll-axis step response without wind: the UAV starts `step` metres from
 * the target at rest. ITAE = sum of t |e| dt over the run.
 */
inline StepResponse simulate_step(const PidGains& g, const StepTest& test) {
    test.sim.validate();
    std::mt19937_64 rng(0);
    Observer obs(test.observation, test.sim.dt);
    UavState uav;
    uav.position.y() = -test.step;
    obs.reset(uav);
    PidController pid(g);
    StepResponse r;
    const int steps = static_cast<int>(std::lround(test.duration / test.sim.dt));
    for (int k = 0; k < steps; ++k) {
        const double est = obs.observe(uav, rng).position.y();
        const double a = pid.act(-est, test.sim.dt);
        uav = step(uav, Action{a, 0.0}, Eigen::Vector3d::Zero(), test.sim);
        const double t = (k + 1) * test.sim.dt;
        const double e = -uav.position.y();
        r.t.push_back(t);
        r.error.push_back(e);
        r.itae += t * std::abs(e) * test.sim.dt;
    }
    r.settling_time = settling_time(r.t, r.error, test.band * test.step);
    return r;
}

struct PidSearchSpace {
    std::vector<double> kp{0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0};
    std::vector<double> ki{0.0, 0.05, 0.1, 0.2, 0.4};
    std::vector<double> kd{0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0};
    double integral_limit = 1.0;
};

struct TuneResult {
    PidGains gains;
    double itae = std::numeric_limits<double>::infinity();
};

/// Exhaustive grid search for the lowest ITAE; ties keep the first point.
inline TuneResult tune_gains(const StepTest& test, const PidSearchSpace& space = {}) {
    TuneResult best;
    for (double kp : space.kp)
        for (double ki : space.ki)
            for (double kd : space.kd) {
                PidGains g{kp, ki, kd, 1.0, space.integral_limit};
                double itae;
                try {
                    itae = simulate_step(g, test).itae;
                } catch (const NonFinite&) {
                    continue;
                }
                if (itae < best.itae) best = {g, itae};
            }
    if (!std::isfinite(best.itae)) throw ControllerDiverged("no PID gains in the grid produced a finite response");
    return best;
}

}  // namespace shipland
