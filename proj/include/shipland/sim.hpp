#pragma once
/**
 * @file sim.hpp
 * @brief Desk-scale quadrotor / ship-deck world.
 *
 * Frames
 *  - target frame T: origin at the hover point above the deck centre, x
 *    forward (towards the bar), y left, z up. UAV states live here.
 *  - bar frame B: origin at the bar centre, X right, Y down, Z forward
 *    (into the bar). A level camera facing forward has identity rotation.
 *
 * Translational model per horizontal axis, with tilt angle th:
 *     dv/dt = g * tan(th) - (drag / mass) * (v - wind)
 *     dth/dt = (th_cmd - th) / lag,   th_cmd = action * tilt_limit
 * Positive roll accelerates along +y, positive pitch along +x. Altitude is
 * held by an ideal heave loop except while descending to land.
 */

#include <shipland/errors.hpp>
#include <shipland/image.hpp>
#include <shipland/pose.hpp>
#include <shipland/vision.hpp>
#include <shipland/wind.hpp>

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <deque>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>

namespace shipland {

inline constexpr double kGravity = 9.81;

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

struct UavState {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();  // m, target frame
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // m/s
    double roll = 0.0;   // rad, actual (after lag)
    double pitch = 0.0;  // rad

    bool finite() const {
        return position.allFinite() && velocity.allFinite() && std::isfinite(roll) && std::isfinite(pitch);
    }
};

struct SimConfig {
    double dt = 0.1;  // control step, s
    int substeps = 10;
    double mass = 1.0;   // kg; scales the drag coupling
    double drag = 0.35;  // N s / m per kg of nominal mass -> 1/s at mass 1
    double lag = 0.2;    // attitude time constant, s
    double tilt_limit = deg2rad(20.0);
    double t_max = 40.0;  // episode horizon, s

    double drag_rate() const { return drag / mass; }

    void validate() const {
        if (!(dt > 0.0) || substeps < 1 || !(mass > 0.0) || !(drag >= 0.0) || !(lag > 0.0) ||
            !(tilt_limit > 0.0) || !(t_max > 0.0))
            throw std::invalid_argument("invalid SimConfig");
    }
};

/// Action per axis in [-1, 1]: roll (lateral, y) and pitch (longitudinal, x).
struct Action {
    double roll = 0.0;
    double pitch = 0.0;
};

/**
 * Advance one control step. `vertical_rate` is the heave-loop command (0 to
 * hold altitude). Wind is held constant over the step.
 */
inline UavState step(const UavState& s, const Action& a, const Eigen::Vector3d& wind, const SimConfig& cfg,
                     double vertical_rate = 0.0) {
    constexpr double slack = 1e-12;
    if (!(std::abs(a.roll) <= 1.0 + slack) || !(std::abs(a.pitch) <= 1.0 + slack))
        throw std::invalid_argument("action components must lie in [-1, 1]");
    const double h = cfg.dt / cfg.substeps;
    const double blend = -std::expm1(-h / cfg.lag);
    const double roll_cmd = std::clamp(a.roll, -1.0, 1.0) * cfg.tilt_limit;
    const double pitch_cmd = std::clamp(a.pitch, -1.0, 1.0) * cfg.tilt_limit;
    const double c = cfg.drag_rate();

    UavState n = s;
    for (int k = 0; k < cfg.substeps; ++k) {
        n.roll += (roll_cmd - n.roll) * blend;
        n.pitch += (pitch_cmd - n.pitch) * blend;
        const double ax = kGravity * std::tan(n.pitch) - c * (n.velocity.x() - wind.x());
        const double ay = kGravity * std::tan(n.roll) - c * (n.velocity.y() - wind.y());
        n.velocity.x() += h * ax;
        n.velocity.y() += h * ay;
        n.velocity.z() = vertical_rate;
        n.position += h * n.velocity;
    }
    if (!n.finite()) throw NonFinite("UAV state diverged");
    return n;
}

// ---------------------------------------------------------------------------
// Ship deck

enum DeckDof : std::size_t { kSurge, kSway, kHeave, kRoll, kPitch, kYaw, kDeckDofs };

struct DeckMotionParams {
    std::array<double, kDeckDofs> amplitude{0.05, 0.05, 0.10, deg2rad(3.0), deg2rad(2.0), deg2rad(1.0)};
    std::array<double, kDeckDofs> period{7.0, 9.0, 4.0, 6.0, 5.0, 11.0};
    std::array<double, kDeckDofs> phase{0.0, 1.0, 0.0, 0.5, 2.0, 0.0};
    double forward_speed = 0.0;  // m/s, ship translation along the approach axis

    static DeckMotionParams still() {
        DeckMotionParams p;
        p.amplitude.fill(0.0);
        return p;
    }
};

struct DeckState {
    std::array<double, kDeckDofs> dof{};  // surge, sway, heave (m), roll, pitch, yaw (rad)
    double forward = 0.0;                 // accumulated ship translation, m
};

inline DeckState deck_motion(double t, const DeckMotionParams& p) {
    if (t < 0.0) throw std::invalid_argument("deck_motion requires t >= 0");
    DeckState d;
    for (std::size_t i = 0; i < kDeckDofs; ++i)
        d.dof[i] = p.amplitude[i] * std::sin(2.0 * std::numbers::pi * t / p.period[i] + p.phase[i]);
    d.forward = p.forward_speed * t;
    return d;
}

// ---------------------------------------------------------------------------
// Scene and rendering

struct SceneGeometry {
    double bar_distance = 4.0;    // bar plane ahead of the target along x, m
    double bar_height = 0.0;      // bar centre above the hover altitude, m
    double hover_altitude = 1.5;  // hover point above the mean deck, m
    bool gimbal = true;           // camera stays level and forward-looking

    Eigen::Vector3d bar_centre() const { return {bar_distance, 0.0, bar_height}; }

    /// Height of the deck surface under horizontal point (x, y).
    double deck_surface(const DeckState& d, double x, double y) const {
        return -hover_altitude + d.dof[kHeave] - (x - d.dof[kSurge]) * std::sin(d.dof[kPitch]) +
               (y - d.dof[kSway]) * std::sin(d.dof[kRoll]);
    }
};

namespace detail {
// Rows map target-frame axes onto bar-frame axes (X = -y, Y = -z, Z = x).
inline Eigen::Matrix3d target_to_bar() {
    Eigen::Matrix3d m;
    m << 0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0;
    return m;
}
}  // namespace detail

/// Camera pose (bar frame -> camera frame) for a UAV state.
inline Pose camera_pose(const UavState& uav, const SceneGeometry& scene) {
    const Eigen::Vector3d centre_b = detail::target_to_bar() * (uav.position - scene.bar_centre());
    Pose p;
    if (!scene.gimbal) {
        // Body-fixed camera: roll spins the image, pitch tilts it.
        p.rotation = (Eigen::AngleAxisd(-uav.roll, Eigen::Vector3d::UnitZ()) *
                      Eigen::AngleAxisd(-uav.pitch, Eigen::Vector3d::UnitX()))
                         .toRotationMatrix();
    }
    p.translation = -p.rotation * centre_b;
    return p;
}

/// Camera centre in the bar frame back to a target-frame position.
inline Eigen::Vector3d bar_to_target(const Eigen::Vector3d& p_bar, const SceneGeometry& scene) {
    return detail::target_to_bar().transpose() * p_bar + scene.bar_centre();
}

struct RenderStyle {
    Rgb background{70, 70, 70};
    Rgb bar{0, 255, 0};
};

namespace detail {

using Polygon = std::vector<Eigen::Vector2d>;

inline Polygon clip_half_plane(const Polygon& poly, int axis, double bound, bool keep_greater) {
    Polygon out;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector2d& a = poly[i];
        const Eigen::Vector2d& b = poly[(i + 1) % n];
        const bool ina = keep_greater ? a[axis] >= bound : a[axis] <= bound;
        const bool inb = keep_greater ? b[axis] >= bound : b[axis] <= bound;
        if (ina) out.push_back(a);
        if (ina != inb) {
            const double t = (bound - a[axis]) / (b[axis] - a[axis]);
            out.push_back(a + t * (b - a));
        }
    }
    return out;
}

inline double polygon_area(const Polygon& p) {
    double a = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto& u = p[i];
        const auto& v = p[(i + 1) % p.size()];
        a += u.x() * v.y() - v.x() * u.y();
    }
    return std::abs(a) / 2.0;
}

// Exact area of a convex quad inside each pixel square, alpha-blended.
inline void fill_quad(RgbImage& img, const std::array<ImagePoint, 4>& quad, Rgb colour) {
    double x_lo = quad[0].x(), x_hi = x_lo, y_lo = quad[0].y(), y_hi = y_lo;
    for (const auto& p : quad) {
        x_lo = std::min(x_lo, p.x());
        x_hi = std::max(x_hi, p.x());
        y_lo = std::min(y_lo, p.y());
        y_hi = std::max(y_hi, p.y());
    }
    const int px0 = std::max(0, static_cast<int>(std::floor(x_lo)) - 1);
    const int py0 = std::max(0, static_cast<int>(std::floor(y_lo)) - 1);
    const int px1 = std::min(img.width() - 1, static_cast<int>(std::ceil(x_hi)) + 1);
    const int py1 = std::min(img.height() - 1, static_cast<int>(std::ceil(y_hi)) + 1);
    if (px0 > px1 || py0 > py1) return;

    // Inward unit normals for the signed-distance fast path.
    double orient = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& a = quad[i];
        const auto& b = quad[(i + 1) % 4];
        orient += a.x() * b.y() - b.x() * a.y();
    }
    std::array<Eigen::Vector3d, 4> lines;  // n.x, n.y, c with n.p + c = signed distance
    for (std::size_t i = 0; i < 4; ++i) {
        const Eigen::Vector2d d = (quad[(i + 1) % 4] - quad[i]).normalized();
        Eigen::Vector2d n(-d.y(), d.x());
        if (orient < 0.0) n = -n;
        lines[i] = {n.x(), n.y(), -n.dot(quad[i])};
    }
    constexpr double half_diag = 0.7072;
    const Polygon poly(quad.begin(), quad.end());

    for (int y = py0; y <= py1; ++y) {
        for (int x = px0; x <= px1; ++x) {
            double dmin = std::numeric_limits<double>::infinity();
            for (const auto& l : lines) dmin = std::min(dmin, l.x() * x + l.y() * y + l.z());
            double cover;
            if (dmin >= half_diag)
                cover = 1.0;
            else if (dmin <= -half_diag)
                continue;
            else {
                Polygon c = clip_half_plane(poly, 0, x - 0.5, true);
                c = clip_half_plane(c, 0, x + 0.5, false);
                c = clip_half_plane(c, 1, y - 0.5, true);
                c = clip_half_plane(c, 1, y + 0.5, false);
                cover = c.size() < 3 ? 0.0 : std::min(1.0, polygon_area(c));
            }
            if (cover <= 0.0) continue;
            const Rgb bg = img.at(x, y);
            auto mix = [cover](std::uint8_t b, std::uint8_t f) {
                return static_cast<std::uint8_t>(std::lround(b + cover * (static_cast<double>(f) - b)));
            };
            img.set(x, y, {mix(bg.r, colour.r), mix(bg.g, colour.g), mix(bg.b, colour.b)});
        }
    }
}

}  // namespace detail

/// Projected bar corners (canonical order) for a camera pose.
inline std::array<ImagePoint, 8> project_bar(const CameraIntrinsics& k, const Pose& pose, const BarModel& bar) {
    const auto world = bar.corners();
    std::array<ImagePoint, 8> out;
    for (std::size_t i = 0; i < 8; ++i) out[i] = project(k, pose, world[i]);
    return out;
}

/// Rasterize the bar for an arbitrary camera pose (bar frame -> camera).
inline RgbImage render_bar_pose(const CameraIntrinsics& k, const Pose& pose, const BarModel& bar, int width,
                                int height, const RenderStyle& style = {}) {
    constexpr double near_plane = 0.05;
    for (const auto& c : bar.corners())
        if (!(pose.to_camera(c).z() > near_plane)) throw BarNotVisible("bar corner behind the camera");
    const auto img_pts = project_bar(k, pose, bar);
    RgbImage img(width, height, style.background);
    for (std::size_t r = 0; r < 2; ++r) {
        std::array<ImagePoint, 4> quad;
        std::copy_n(img_pts.begin() + 4 * r, 4, quad.begin());
        detail::fill_quad(img, quad, style.bar);
    }
    return img;
}

inline RgbImage render_bar(const CameraIntrinsics& k, const UavState& uav, const BarModel& bar,
                           const SceneGeometry& scene, int width, int height, const RenderStyle& style = {}) {
    return render_bar_pose(k, camera_pose(uav, scene), bar, width, height, style);
}

// ---------------------------------------------------------------------------
// Observation model

enum class ObservationMode { DirectWithNoise, RenderedVision };

struct ObservationConfig {
    ObservationMode mode = ObservationMode::DirectWithNoise;
    double noise_pos = 0.0;  // sigma, m
    int delay = 0;           // control steps
};

/// Camera, bar and detector used by the rendered-vision observation mode.
struct VisionRig {
    CameraIntrinsics camera{800.0, 800.0, 639.5, 359.5};
    int image_width = 1280;
    int image_height = 720;
    BarModel bar;
    DetectorConfig detector;
    RenderStyle style;
};

struct Observation {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
};

/**
 * Delayed, noisy estimate of the relative position; velocity by finite
 * difference of consecutive estimates. The delay line starts filled with the
 * initial state.
 */
class Observer {
public:
    Observer(ObservationConfig cfg, double dt, SceneGeometry scene = {}, VisionRig rig = {})
        : cfg_(cfg), dt_(dt), scene_(scene), rig_(std::move(rig)) {
        if (cfg_.delay < 0) throw std::invalid_argument("observation delay must be >= 0");
        if (!(cfg_.noise_pos >= 0.0)) throw std::invalid_argument("observation noise must be >= 0");
    }

    void reset(const UavState& initial) {
        history_.assign(static_cast<std::size_t>(cfg_.delay) + 1, initial);
        last_.reset();
        steps_since_last_ = 0;
    }

    const ObservationConfig& config() const { return cfg_; }

    template <class Rng>
    Observation observe(const UavState& truth, Rng& rng) {
        if (history_.empty()) reset(truth);
        history_.push_back(truth);
        while (history_.size() > static_cast<std::size_t>(cfg_.delay) + 1) history_.pop_front();
        const UavState& delayed = history_.front();
        ++steps_since_last_;

        Eigen::Vector3d pos;
        if (cfg_.mode == ObservationMode::DirectWithNoise) {
            pos = delayed.position;
        } else {
            pos = vision_estimate(delayed);
        }
        if (cfg_.noise_pos > 0.0) {
            std::normal_distribution<double> n(0.0, cfg_.noise_pos);
            for (int i = 0; i < 3; ++i) pos[i] += n(rng);
        }

        Observation o;
        o.position = pos;
        if (last_) o.velocity = (pos - *last_) / (dt_ * steps_since_last_);
        last_ = pos;
        steps_since_last_ = 0;
        return o;
    }

    /// render -> detect -> PnP -> camera centre, in the target frame.
    Eigen::Vector3d vision_estimate(const UavState& s) const {
        try {
            const RgbImage img =
                render_bar(rig_.camera, s, rig_.bar, scene_, rig_.image_width, rig_.image_height, rig_.style);
            const CornerSet corners = detect_bar(img, rig_.detector);
            const auto world = rig_.bar.corners();
            const Pose pose = solve_pnp(rig_.camera, world, corners.corners);
            return bar_to_target(camera_position(pose), scene_);
        } catch (const Error& e) {
            throw EstimateUnavailable(std::string("vision failed: ") + e.what());
        }
    }

private:
    ObservationConfig cfg_;
    double dt_;
    SceneGeometry scene_;
    VisionRig rig_;
    std::deque<UavState> history_;
    std::optional<Eigen::Vector3d> last_;
    int steps_since_last_ = 0;
};

// ---------------------------------------------------------------------------
// Landing

enum class Phase { Approach, Descend, TouchedDown };

inline const char* phase_name(Phase p) {
    switch (p) {
        case Phase::Approach: return "approach";
        case Phase::Descend: return "descend";
        default: return "touched_down";
    }
}

struct LandingConfig {
    double safe_zone = 0.4;     // per-axis horizontal band, m
    double dwell = 1.0;         // time inside the band before descending, s
    double descent_rate = 0.3;  // m/s
};

/**
 * Vertical landing agnostic of deck motion: once both horizontal errors stay
 * inside the safe zone for the dwell time, descend at constant rate until the
 * UAV reaches the deck surface.
 */
class LandingLogic {
public:
    explicit LandingLogic(LandingConfig cfg = {}) : cfg_(cfg) {}

    Phase phase() const { return phase_; }
    double vertical_rate() const { return phase_ == Phase::Descend ? -cfg_.descent_rate : 0.0; }
    const std::optional<Eigen::Vector2d>& touchdown_offset() const { return offset_; }
    const std::optional<double>& touchdown_time() const { return touchdown_time_; }

    /// `target` is the horizontal hover target, `deck_centre` the moving deck
    /// centre used to score the touchdown point; `t` is the time of `uav`.
    Phase update(const UavState& uav, const Eigen::Vector2d& target, const Eigen::Vector2d& deck_centre,
                 double deck_surface_z, double t, double dt) {
        switch (phase_) {
            case Phase::Approach: {
                const Eigen::Vector2d d = uav.position.head<2>() - target;
                if (std::abs(d.x()) < cfg_.safe_zone && std::abs(d.y()) < cfg_.safe_zone)
                    dwell_ += dt;
                else
                    dwell_ = 0.0;
                if (dwell_ >= cfg_.dwell - 1e-9) phase_ = Phase::Descend;
                break;
            }
            case Phase::Descend:
                if (uav.position.z() <= deck_surface_z) {
                    phase_ = Phase::TouchedDown;
                    offset_ = uav.position.head<2>() - deck_centre;
                    // Interpolate the crossing inside the last step.
                    const double overshoot = (deck_surface_z - uav.position.z()) / cfg_.descent_rate;
                    touchdown_time_ = t - std::min(overshoot, dt);
                }
                break;
            case Phase::TouchedDown:
                break;
        }
        return phase_;
    }

private:
    LandingConfig cfg_;
    Phase phase_ = Phase::Approach;
    double dwell_ = 0.0;
    std::optional<Eigen::Vector2d> offset_;
    std::optional<double> touchdown_time_;
};

}  // namespace shipland
