#include <shipland/sim.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace shipland;

namespace {

UavState at(double x, double y, double z = 0.0) {
    UavState s;
    s.position = {x, y, z};
    return s;
}

// Coverage-weighted centroid of the bar pixels in columns [x0, x1).
Eigen::Vector2d centroid(const RgbImage& img, int x0, int x1, const RenderStyle& style) {
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
    double mass = 0.0;
    for (int y = 0; y < img.height(); ++y)
        for (int x = x0; x < x1; ++x) {
            const double w = (img.at(x, y).g - style.background.g) / double(style.bar.g - style.background.g);
            acc += w * Eigen::Vector2d(x, y);
            mass += w;
        }
    return acc / mass;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dynamics

TEST(Step, HoverFixedPoint) {
    const SimConfig cfg;
    UavState s = at(0.3, -0.2, 0.0);
    const UavState start = s;
    for (int i = 0; i < 100; ++i) s = step(s, {}, Eigen::Vector3d::Zero(), cfg);
    EXPECT_EQ(s.position, start.position);
    EXPECT_EQ(s.velocity, start.velocity);
    EXPECT_EQ(s.roll, 0.0);
    EXPECT_EQ(s.pitch, 0.0);
}

TEST(Step, DriftsToWindSpeed) {
    const SimConfig cfg;
    for (const Eigen::Vector3d w : {Eigen::Vector3d(2.0, 0, 0), Eigen::Vector3d(0, -5.0, 0), Eigen::Vector3d(3, 4, 0)}) {
        UavState s;
        const int steps = static_cast<int>(std::ceil(10.0 / cfg.drag_rate() / cfg.dt));
        for (int i = 0; i < steps; ++i) s = step(s, {}, w, cfg);
        EXPECT_LT((s.velocity.head<2>() - w.head<2>()).norm(), 0.01 * w.norm());
    }
}

TEST(Step, DriftMatchesClosedForm) {
    // v(t) = w (1 - exp(-c t)); semi-implicit Euler at 10 ms is within 1e-3.
    const SimConfig cfg;
    const Eigen::Vector3d w(4.0, 0, 0);
    UavState s;
    for (int i = 1; i <= 50; ++i) {
        s = step(s, {}, w, cfg);
        const double t = i * cfg.dt;
        EXPECT_NEAR(s.velocity.x(), w.x() * (1.0 - std::exp(-cfg.drag_rate() * t)), 1e-3 * w.x());
    }
}

TEST(Step, AttitudeLagTimeConstant) {
    SimConfig cfg;
    cfg.dt = 0.1;
    UavState s;
    s = step(s, {1.0, -1.0}, Eigen::Vector3d::Zero(), cfg);
    s = step(s, {1.0, -1.0}, Eigen::Vector3d::Zero(), cfg);  // t = lag
    const double expected = (1.0 - std::exp(-1.0)) * cfg.tilt_limit;
    EXPECT_NEAR(s.roll, expected, 1e-12);
    EXPECT_NEAR(s.pitch, -expected, 1e-12);
    EXPECT_NEAR(s.roll / cfg.tilt_limit, 0.632, 5e-4);
    for (int i = 0; i < 50; ++i) s = step(s, {1.0, -1.0}, Eigen::Vector3d::Zero(), cfg);
    EXPECT_NEAR(s.roll, cfg.tilt_limit, 1e-9);
}

TEST(Step, RollMovesSidewaysPitchMovesForward) {
    const SimConfig cfg;
    UavState r = step(step(UavState{}, {0.5, 0.0}, Eigen::Vector3d::Zero(), cfg), {0.5, 0.0}, Eigen::Vector3d::Zero(), cfg);
    EXPECT_GT(r.velocity.y(), 0.0);
    EXPECT_EQ(r.velocity.x(), 0.0);
    UavState p = step(step(UavState{}, {0.0, 0.5}, Eigen::Vector3d::Zero(), cfg), {0.0, 0.5}, Eigen::Vector3d::Zero(), cfg);
    EXPECT_GT(p.velocity.x(), 0.0);
    EXPECT_EQ(p.velocity.y(), 0.0);
}

TEST(Step, RejectsOutOfRangeAction) {
    EXPECT_THROW(step(UavState{}, {1.5, 0.0}, Eigen::Vector3d::Zero(), SimConfig{}), std::invalid_argument);
    EXPECT_THROW(step(UavState{}, {0.0, std::nan("")}, Eigen::Vector3d::Zero(), SimConfig{}), std::invalid_argument);
}

TEST(Step, DivergenceRaisesNonFinite) {
    SimConfig cfg;
    cfg.drag = 1e40;
    UavState s;
    s.velocity.x() = 1.0;
    EXPECT_THROW(step(s, {}, Eigen::Vector3d::Zero(), cfg), NonFinite);
}

TEST(SimConfig, Validation) {
    SimConfig bad;
    bad.dt = 0.0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = {};
    bad.lag = -1.0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    EXPECT_NO_THROW(SimConfig{}.validate());
}

TEST(Step, VerticalRateOnlyInDescent) {
    UavState s;
    s = step(s, {}, Eigen::Vector3d::Zero(), SimConfig{}, -0.3);
    EXPECT_NEAR(s.position.z(), -0.03, 1e-12);
    s = step(s, {}, Eigen::Vector3d::Zero(), SimConfig{});
    EXPECT_NEAR(s.position.z(), -0.03, 1e-12);
}

TEST(StepProperty, AttitudeStaysWithinTiltLimit) {
    const SimConfig cfg;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    UavState s;
    for (int i = 0; i < 2000; ++i) {
        s = step(s, {u(rng), u(rng)}, Eigen::Vector3d(5 * u(rng), 5 * u(rng), 0), cfg);
        ASSERT_LE(std::abs(s.roll), cfg.tilt_limit + 1e-12);
        ASSERT_LE(std::abs(s.pitch), cfg.tilt_limit + 1e-12);
        ASSERT_TRUE(s.finite());
    }
}

TEST(StepProperty, Deterministic) {
    const SimConfig cfg;
    auto run = [&](std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        UavState s;
        for (int i = 0; i < 500; ++i) s = step(s, {u(rng), u(rng)}, Eigen::Vector3d(u(rng), u(rng), 0), cfg);
        return s;
    };
    const UavState a = run(11), b = run(11);
    EXPECT_EQ(a.position, b.position);
    EXPECT_EQ(a.velocity, b.velocity);
    EXPECT_EQ(a.roll, b.roll);
}

TEST(StepProperty, KineticEnergyNonIncreasingWithoutWindOrAction) {
    const SimConfig cfg;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        UavState s;
        s.velocity = {u(rng), u(rng), 0.0};
        double e = s.velocity.squaredNorm();
        for (int i = 0; i < 200; ++i) {
            s = step(s, {}, Eigen::Vector3d::Zero(), cfg);
            const double next = s.velocity.squaredNorm();
            ASSERT_LE(next, e);
            e = next;
        }
    }
}

TEST(StepProperty, GalileanShift) {
    const SimConfig cfg;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Vector3d wind(3 * u(rng), 3 * u(rng), 0), shift(2 * u(rng), 2 * u(rng), 0);
        UavState a, b;
        a.velocity = {u(rng), u(rng), 0};
        b.velocity = a.velocity + shift;
        for (int i = 0; i < 100; ++i) {
            const Action act{u(rng), u(rng)};
            a = step(a, act, wind, cfg);
            b = step(b, act, wind + shift, cfg);
            const double t = (i + 1) * cfg.dt;
            ASSERT_LT((b.velocity - a.velocity - shift).norm(), 1e-12);
            ASSERT_LT((b.position - a.position - shift * t).norm(), 1e-10);
        }
    }
}

// ---------------------------------------------------------------------------
// Deck

TEST(Deck, StillIsIdentity) {
    const DeckState d = deck_motion(12.3, DeckMotionParams::still());
    for (double v : d.dof) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(d.forward, 0.0);
}

TEST(Deck, HeavePeak) {
    DeckMotionParams p = DeckMotionParams::still();
    p.amplitude[kHeave] = 0.1;
    p.period[kHeave] = 4.0;
    p.phase[kHeave] = 0.0;
    EXPECT_NEAR(deck_motion(1.0, p).dof[kHeave], 0.1, 1e-15);
}

TEST(Deck, WithinAmplitudeBox) {
    const DeckMotionParams p;
    for (int i = 0; i < 1000; ++i) {
        const DeckState d = deck_motion(0.037 * i, p);
        for (std::size_t k = 0; k < kDeckDofs; ++k) EXPECT_LE(std::abs(d.dof[k]), p.amplitude[k]);
    }
}

TEST(Deck, ForwardTranslationAndErrors) {
    DeckMotionParams p;
    p.forward_speed = 2.0;
    EXPECT_DOUBLE_EQ(deck_motion(3.0, p).forward, 6.0);
    EXPECT_THROW(deck_motion(-0.1, p), std::invalid_argument);
    EXPECT_EQ(deck_motion(7.7, p).dof, deck_motion(7.7, p).dof);
}

// ---------------------------------------------------------------------------
// Rendering

TEST(Render, CentredViewIsSymmetric) {
    const VisionRig rig;
    const SceneGeometry scene;
    const UavState uav = at(scene.bar_distance - 3.0, 0.0);
    const RgbImage img = render_bar(rig.camera, uav, rig.bar, scene, rig.image_width, rig.image_height, rig.style);
    const double cu = rig.camera.cx, cv = rig.camera.cy;
    const Eigen::Vector2d left = centroid(img, 0, static_cast<int>(cu) + 1, rig.style);
    const Eigen::Vector2d right = centroid(img, static_cast<int>(cu) + 1, img.width(), rig.style);
    EXPECT_LT(std::abs((left.x() + right.x()) / 2.0 - cu), 1.0);
    EXPECT_LT(std::abs(left.y() - cv), 1.0);
    EXPECT_LT(std::abs(right.y() - cv), 1.0);
    EXPECT_LT(left.x(), cu);
    EXPECT_GT(right.x(), cu);
}

TEST(Render, BehindBarPlaneThrows) {
    const VisionRig rig;
    const SceneGeometry scene;
    EXPECT_THROW(render_bar(rig.camera, at(scene.bar_distance + 1.0, 0.0), rig.bar, scene, 640, 480), BarNotVisible);
}

TEST(Render, CoverageSumsToProjectedArea) {
    // The renderer's per-pixel coverage integrates to the shoelace area of
    // the projected quads; uint8 rounding costs at most 1/370 per pixel.
    const VisionRig rig;
    const SceneGeometry scene;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (int i = 0; i < 5; ++i) {
        const UavState uav = at(scene.bar_distance - 3.0 + u(rng), u(rng), u(rng));
        const RgbImage img = render_bar(rig.camera, uav, rig.bar, scene, rig.image_width, rig.image_height, rig.style);
        const auto corners = project_bar(rig.camera, camera_pose(uav, scene), rig.bar);
        double area = 0.0;
        for (std::size_t r = 0; r < 2; ++r) {
            for (std::size_t k = 0; k < 4; ++k) {
                const auto& p = corners[4 * r + k];
                const auto& q = corners[4 * r + (k + 1) % 4];
                area += (p.x() * q.y() - q.x() * p.y()) / 2.0;
            }
        }
        area = std::abs(area);
        double sum = 0.0;
        int touched = 0;
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) {
                const double c = (img.at(x, y).g - rig.style.background.g) /
                                 double(rig.style.bar.g - rig.style.background.g);
                sum += c;
                touched += c > 0.0;
            }
        EXPECT_NEAR(sum, area, touched / 370.0 + 1e-6);
    }
}

TEST(Render, GimbalIgnoresAttitude) {
    const VisionRig rig;
    const SceneGeometry scene;
    UavState a = at(1.0, 0.1, 0.0), b = a;
    b.roll = 0.2;
    b.pitch = -0.1;
    EXPECT_EQ(render_bar(rig.camera, a, rig.bar, scene, 320, 240), render_bar(rig.camera, b, rig.bar, scene, 320, 240));
}

TEST(Render, CameraPoseRoundTrip) {
    const SceneGeometry scene;
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const UavState s = at(u(rng), u(rng), u(rng));
        EXPECT_LT((bar_to_target(camera_position(camera_pose(s, scene)), scene) - s.position).norm(), 1e-12);
    }
}

// ---------------------------------------------------------------------------
// Observation

TEST(Observe, ExactWithoutNoiseOrDelay) {
    Observer obs({ObservationMode::DirectWithNoise, 0.0, 0}, 0.1);
    std::mt19937_64 rng(1);
    UavState s = at(0.3, -0.4, 0.1);
    obs.reset(s);
    for (int i = 0; i < 5; ++i) {
        s.position.x() += 0.05;
        const Observation o = obs.observe(s, rng);
        EXPECT_EQ(o.position, s.position);
        if (i > 0) EXPECT_NEAR(o.velocity.x(), 0.5, 1e-9);
    }
}

TEST(Observe, DelayLagsConstantVelocity) {
    const double dt = 0.1;
    Observer obs({ObservationMode::DirectWithNoise, 0.0, 2}, dt);
    std::mt19937_64 rng(2);
    UavState s;
    s.velocity.x() = 1.0;
    obs.reset(s);
    for (int i = 0; i < 10; ++i) {
        s.position.x() += dt * s.velocity.x();
        const Observation o = obs.observe(s, rng);
        if (i >= 2) {
            EXPECT_NEAR(s.position.x() - o.position.x(), 0.2, 1e-12);
            EXPECT_NEAR(o.velocity.x(), 1.0, 1e-9);
        }
    }
}

TEST(Observe, NoiseHasConfiguredSpread) {
    Observer obs({ObservationMode::DirectWithNoise, 0.05, 0}, 0.1);
    std::mt19937_64 rng(3);
    const UavState s = at(1.0, 2.0);
    obs.reset(s);
    double sum = 0.0, sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double e = obs.observe(s, rng).position.y() - 2.0;
        sum += e;
        sq += e * e;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.002);
    EXPECT_NEAR(std::sqrt(sq / n), 0.05, 0.002);
}

TEST(Observe, RejectsBadConfig) {
    EXPECT_THROW(Observer({ObservationMode::DirectWithNoise, 0.0, -1}, 0.1), std::invalid_argument);
    EXPECT_THROW(Observer({ObservationMode::DirectWithNoise, -0.1, 0}, 0.1), std::invalid_argument);
}

TEST(Observe, RenderedVisionAtThreeMetres) {
    const SceneGeometry scene;
    Observer obs({ObservationMode::RenderedVision, 0.0, 0}, 0.1, scene);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (int i = 0; i < 10; ++i) {
        const UavState s = at(scene.bar_distance - 3.0 + u(rng), u(rng), u(rng));
        obs.reset(s);
        EXPECT_LT((obs.observe(s, rng).position - s.position).norm(), 0.02) << "pose " << i;
    }
}

TEST(Observe, VisionAgreesWithDirect) {
    const SceneGeometry scene;
    Observer vision({ObservationMode::RenderedVision, 0.0, 0}, 0.1, scene);
    Observer direct({ObservationMode::DirectWithNoise, 0.0, 0}, 0.1, scene);
    std::mt19937_64 rng(5);
    UavState s = at(1.0, 0.2, -0.1);
    vision.reset(s);
    direct.reset(s);
    for (int i = 0; i < 5; ++i) {
        s.position += Eigen::Vector3d(0.02, -0.03, 0.01);
        EXPECT_LT((vision.observe(s, rng).position - direct.observe(s, rng).position).norm(), 0.02);
    }
}

TEST(Observe, VisionFailureIsEstimateUnavailable) {
    const SceneGeometry scene;
    Observer obs({ObservationMode::RenderedVision, 0.0, 0}, 0.1, scene);
    std::mt19937_64 rng(6);
    const UavState s = at(scene.bar_distance + 0.5, 0.0);
    obs.reset(at(0, 0));
    EXPECT_THROW(obs.observe(s, rng), EstimateUnavailable);
    // Far off to the side: bar out of frame.
    obs.reset(at(0, 0));
    EXPECT_THROW(obs.observe(at(0.0, 6.0), rng), EstimateUnavailable);
}

TEST(Observe, SameSeedSameEstimates) {
    auto run = [] {
        Observer obs({ObservationMode::DirectWithNoise, 0.03, 1}, 0.1);
        std::mt19937_64 rng(99);
        UavState s;
        obs.reset(s);
        std::vector<double> out;
        for (int i = 0; i < 50; ++i) {
            s.position.y() += 0.01;
            out.push_back(obs.observe(s, rng).position.y());
        }
        return out;
    };
    EXPECT_EQ(run(), run());
}

// ---------------------------------------------------------------------------
// Landing

TEST(Landing, OutsideSafeZoneStaysInApproach) {
    LandingLogic l;
    for (int i = 0; i < 50; ++i)
        EXPECT_EQ(l.update(at(0.5, 0.0), Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(), -1.5, 0.1 * i, 0.1),
                  Phase::Approach);
    EXPECT_EQ(l.vertical_rate(), 0.0);
}

TEST(Landing, DwellStartsDescent) {
    LandingLogic l;
    for (int i = 1; i <= 9; ++i)
        EXPECT_EQ(l.update(at(0.05, -0.05), Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(), -1.5, 0.1 * i, 0.1),
                  Phase::Approach);
    EXPECT_EQ(l.update(at(0.05, -0.05), Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(), -1.5, 1.0, 0.1),
              Phase::Descend);
    EXPECT_DOUBLE_EQ(l.vertical_rate(), -0.3);
}

TEST(Landing, LeavingZoneResetsDwell) {
    LandingLogic l;
    for (int i = 0; i < 8; ++i) l.update(at(0.1, 0.0), Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(), -1.5, 0.1 * i, 0.1);
    l.update(at(0.45, 0.0), Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(), -1.5, 0.9, 0.1);
    for (int i = 0; i < 9; ++i)
        EXPECT_EQ(l.update(at(0.1, 0.0), Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(), -1.5, 1.0 + 0.1 * i, 0.1),
                  Phase::Approach);
}

TEST(Landing, DescentFromOneMetreTakesThreeAndAThirdSeconds) {
    const SimConfig cfg;
    LandingLogic l;
    SceneGeometry scene;
    scene.hover_altitude = 1.0;
    const DeckState deck = deck_motion(0.0, DeckMotionParams::still());
    UavState s;
    double t = 0.0;
    std::optional<double> descent_start;
    for (int i = 0; i < 200 && l.phase() != Phase::TouchedDown; ++i) {
        s = step(s, {}, Eigen::Vector3d::Zero(), cfg, l.vertical_rate());
        t += cfg.dt;
        const Phase before = l.phase();
        l.update(s, Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(), scene.deck_surface(deck, 0, 0), t, cfg.dt);
        if (before == Phase::Approach && l.phase() == Phase::Descend) descent_start = t;
    }
    ASSERT_EQ(l.phase(), Phase::TouchedDown);
    ASSERT_TRUE(descent_start.has_value());
    ASSERT_TRUE(l.touchdown_time().has_value());
    EXPECT_NEAR(*l.touchdown_time() - *descent_start, 1.0 / 0.3, 1e-6);
    EXPECT_LT(l.touchdown_offset()->norm(), 1e-12);
}

TEST(Landing, OffsetMeasuredFromDeckCentre) {
    LandingLogic l({0.4, 0.0, 0.3});
    l.update(at(0.1, 0.2), Eigen::Vector2d::Zero(), Eigen::Vector2d(0.05, -0.05), -1.0, 0.1, 0.1);
    ASSERT_EQ(l.phase(), Phase::Descend);
    l.update(at(0.1, 0.2, -1.01), Eigen::Vector2d::Zero(), Eigen::Vector2d(0.05, -0.05), -1.0, 0.2, 0.1);
    ASSERT_EQ(l.phase(), Phase::TouchedDown);
    EXPECT_NEAR((*l.touchdown_offset() - Eigen::Vector2d(0.05, 0.25)).norm(), 0.0, 1e-12);
    EXPECT_NEAR(*l.touchdown_time(), 0.2 - 0.01 / 0.3, 1e-12);
}

TEST(Landing, DeckSurfaceFollowsHeaveAndTilt) {
    SceneGeometry scene;
    DeckState d;
    d.dof[kHeave] = 0.1;
    EXPECT_NEAR(scene.deck_surface(d, 0.3, -0.2), -scene.hover_altitude + 0.1, 1e-15);
    d.dof[kRoll] = 0.1;
    EXPECT_NEAR(scene.deck_surface(d, 0.0, 1.0), -scene.hover_altitude + 0.1 + std::sin(0.1), 1e-15);
}

TEST(Landing, PhaseNames) {
    EXPECT_STREQ(phase_name(Phase::Approach), "approach");
    EXPECT_STREQ(phase_name(Phase::Descend), "descend");
    EXPECT_STREQ(phase_name(Phase::TouchedDown), "touched_down");
}
