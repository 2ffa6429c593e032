#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <vector>
#include <numbers>
#include <random>
#include <string>
#include <variant>

namespace shipland {

// Wind directions are angles in the horizontal plane of the target frame
// (x forward along the approach axis, y to the left). Head wind lies on the
// x axis, cross wind on the y axis; the sign of the speed selects the sense.
inline constexpr double kHeadwindDir = 0.0;
inline constexpr double kCrosswindDir = std::numbers::pi / 2.0;

namespace wind {

struct Constant {
    double speed = 0.0;  // m/s, signed
    double dir = 0.0;    // rad
};

struct SuddenChange {
    double before = 0.0;  // m/s
    double after = 0.0;   // m/s
    double t_switch = 0.0;
    double dir = 0.0;
};

struct Sinusoidal {
    double amplitude = 5.0;  // m/s
    double period = 20.0;    // s
    double dir = 0.0;
    double phase = 0.0;      // rad
};

/// Sinusoidal magnitude whose direction turns one full revolution per
/// `dir_period`, starting at `dir`.
struct TimeVarying {
    double amplitude = 5.0;
    double period = 20.0;
    double dir_period = 40.0;
    double dir = 0.0;
};

}  // namespace wind

using WindScenario = std::variant<std::monostate, wind::Constant, wind::SuddenChange, wind::Sinusoidal,
                                  wind::TimeVarying>;

namespace detail {
inline Eigen::Vector3d horizontal(double magnitude, double dir) {
    return {magnitude * std::cos(dir), magnitude * std::sin(dir), 0.0};
}
template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace detail

inline Eigen::Vector3d wind_at(const WindScenario& s, double t) {
    using namespace wind;
    constexpr double two_pi = 2.0 * std::numbers::pi;
    return std::visit(
        detail::overloaded{
            [](std::monostate) -> Eigen::Vector3d { return Eigen::Vector3d::Zero(); },
            [](const Constant& c) -> Eigen::Vector3d { return detail::horizontal(c.speed, c.dir); },
            [t](const SuddenChange& c) -> Eigen::Vector3d {
                return detail::horizontal(t < c.t_switch ? c.before : c.after, c.dir);
            },
            [t](const Sinusoidal& c) -> Eigen::Vector3d {
                return detail::horizontal(c.amplitude * std::sin(two_pi * t / c.period + c.phase), c.dir);
            },
            [t](const TimeVarying& c) -> Eigen::Vector3d {
                return detail::horizontal(c.amplitude * std::sin(two_pi * t / c.period),
                                          c.dir + two_pi * t / c.dir_period);
            }},
        s);
}

/// Direction angle of the wind vector convention at time t, in [0, 2pi).
/// For TimeVarying this is the rotating heading irrespective of the sign of
/// the instantaneous magnitude.
inline double wind_direction(const WindScenario& s, double t) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double d = std::visit(
        detail::overloaded{[](std::monostate) { return 0.0; },
                           [](const wind::Constant& c) { return c.dir; },
                           [](const wind::SuddenChange& c) { return c.dir; },
                           [](const wind::Sinusoidal& c) { return c.dir; },
                           [t](const wind::TimeVarying& c) { return c.dir + two_pi * t / c.dir_period; }},
        s);
    d = std::fmod(d, two_pi);
    return d < 0.0 ? d + two_pi : d;
}

/// Upper bound on |wind_at(s, t)| over all t.
inline double wind_bound(const WindScenario& s) {
    return std::visit(detail::overloaded{[](std::monostate) { return 0.0; },
                                         [](const wind::Constant& c) { return std::abs(c.speed); },
                                         [](const wind::SuddenChange& c) {
                                             return std::max(std::abs(c.before), std::abs(c.after));
                                         },
                                         [](const wind::Sinusoidal& c) { return std::abs(c.amplitude); },
                                         [](const wind::TimeVarying& c) { return std::abs(c.amplitude); }},
                      s);
}

inline std::string scenario_tag(const WindScenario& s) {
    auto axis_of = [](double dir) {
        return std::abs(std::cos(dir)) >= std::abs(std::sin(dir)) ? "head" : "cross";
    };
    char buf[96];
    std::visit(detail::overloaded{
                   [&](std::monostate) { std::snprintf(buf, sizeof buf, "none"); },
                   [&](const wind::Constant& c) {
                       std::snprintf(buf, sizeof buf, "constant_%s_%g", axis_of(c.dir), c.speed);
                   },
                   [&](const wind::SuddenChange& c) {
                       std::snprintf(buf, sizeof buf, "sudden_%s_%g_%g_%g", axis_of(c.dir), c.before, c.after,
                                     c.t_switch);
                   },
                   [&](const wind::Sinusoidal& c) {
                       std::snprintf(buf, sizeof buf, "sin_%s_%g_%g", axis_of(c.dir), c.amplitude, c.period);
                   },
                   [&](const wind::TimeVarying& c) {
                       std::snprintf(buf, sizeof buf, "time_varying_%g_%g_%g", c.amplitude, c.period,
                                     c.dir_period);
                   }},
               s);
    return buf;
}

enum class Axis { Roll, Pitch };

inline const char* axis_name(Axis a) { return a == Axis::Roll ? "roll" : "pitch"; }

struct WindRanges {
    double constant_max = 10.0;   // constant speed drawn from [-max, max]
    double sudden_max = 5.0;      // before/after drawn from [-max, max]
    double sudden_t_min = 2.0;    // switch time window, s
    double sudden_t_max = 30.0;
    double sinusoidal_amplitude = 5.0;
    std::array<double, 5> sinusoidal_periods{10.0, 20.0, 30.0, 40.0, 50.0};
};

/**
 * Training-time draw: family uniformly among constant / sudden change /
 * sinusoidal, then its parameters. Roll controllers see cross wind, pitch
 * controllers head wind; only the sign is randomized beyond that.
 */
template <class Rng>
WindScenario sample_scenario(Rng& rng, Axis axis, const WindRanges& r = {}) {
    const double dir = axis == Axis::Roll ? kCrosswindDir : kHeadwindDir;
    std::uniform_int_distribution<int> family(0, 2);
    switch (family(rng)) {
        case 0:
            return wind::Constant{std::uniform_real_distribution<double>(-r.constant_max, r.constant_max)(rng),
                                  dir};
        case 1: {
            std::uniform_real_distribution<double> speed(-r.sudden_max, r.sudden_max);
            const double before = speed(rng);
            const double after = speed(rng);
            const double ts = std::uniform_real_distribution<double>(r.sudden_t_min, r.sudden_t_max)(rng);
            return wind::SuddenChange{before, after, ts, dir};
        }
        default: {
            std::uniform_int_distribution<std::size_t> pick(0, r.sinusoidal_periods.size() - 1);
            const double period = r.sinusoidal_periods[pick(rng)];
            const double sign = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
            return wind::Sinusoidal{sign * r.sinusoidal_amplitude, period, dir, 0.0};
        }
    }
}

/**
 * Named scenarios used on the command line:
 *   none
 *   constant_<head|cross>_<speed>
 *   sudden_<head|cross>_<after>[_<t_switch>]       (0 -> after at t_switch, default 8 s)
 *   sin_<head|cross>_<amplitude>_<period>
 *   time_varying_<amplitude>_<period>_<dir_period>
 * Short aliases: sudden_cross_5, sin_head_5_20, time_varying.
 */
inline WindScenario parse_scenario(const std::string& name) {
    std::vector<std::string> parts;
    {
        std::stringstream ss(name);
        std::string tok;
        while (std::getline(ss, tok, '_')) parts.push_back(tok);
    }
    auto bad = [&name]() { return std::invalid_argument("unknown wind scenario '" + name + "'"); };
    auto num = [&](std::size_t i, double fallback) {
        if (i >= parts.size()) return fallback;
        try {
            std::size_t used = 0;
            const double v = std::stod(parts[i], &used);
            if (used != parts[i].size()) throw bad();
            return v;
        } catch (const std::logic_error&) {
            throw bad();
        }
    };
    auto dir_of = [&](std::size_t i) {
        if (i >= parts.size()) throw bad();
        if (parts[i] == "head") return kHeadwindDir;
        if (parts[i] == "cross") return kCrosswindDir;
        throw bad();
    };
    if (parts.empty()) throw bad();
    const std::string& kind = parts[0];
    if (kind == "none" && parts.size() == 1) return std::monostate{};
    if (kind == "constant" && parts.size() == 3) return wind::Constant{num(2, 0.0), dir_of(1)};
    if (kind == "sudden" && (parts.size() == 3 || parts.size() == 4))
        return wind::SuddenChange{0.0, num(2, 0.0), num(3, 8.0), dir_of(1)};
    if (kind == "sin" && (parts.size() == 3 || parts.size() == 4))
        return wind::Sinusoidal{num(2, 5.0), num(3, 20.0), dir_of(1), 0.0};
    if (kind == "time" && parts.size() >= 2 && parts[1] == "varying" && parts.size() <= 5)
        return wind::TimeVarying{num(2, 5.0), num(3, 20.0), num(4, 40.0), 0.0};
    throw bad();
}

}  // namespace shipland
