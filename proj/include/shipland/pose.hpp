#pragma once
/**
 * @file pose.hpp
 * @brief Pinhole projection, planar PnP with Levenberg-Marquardt refinement,
 *        and camera-center recovery.
 *
 * Convention: a world point X maps into the camera frame as
 * x_cam = R * X + t, then (u, v) = (fx * x/z + cx, fy * y/z + cy).
 * The camera center in the world frame is therefore -R^T t.
 */

#include <shipland/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace shipland {

using WorldPoint = Eigen::Vector3d;
using ImagePoint = Eigen::Vector2d;

struct CameraIntrinsics {
    double fx = 1000.0;
    double fy = 1000.0;
    double cx = 640.0;
    double cy = 360.0;

    Eigen::Matrix3d matrix() const {
        Eigen::Matrix3d k;
        k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
        return k;
    }

    bool valid(int width, int height) const {
        return fx > 0.0 && fy > 0.0 && cx >= 0.0 && cy >= 0.0 && cx <= width && cy <= height;
    }
};

struct Pose {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    static Pose identity() { return {}; }

    Eigen::Vector3d to_camera(const WorldPoint& p) const { return rotation * p + translation; }

    bool is_valid(double tol = 1e-9) const {
        const Eigen::Matrix3d gram = rotation.transpose() * rotation;
        return (gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
               std::abs(rotation.determinant() - 1.0) <= tol && translation.allFinite();
    }
};

/// Axis-angle (rotation vector) to rotation matrix.
inline Eigen::Matrix3d rotation_from_vector(const Eigen::Vector3d& w) {
    const double angle = w.norm();
    if (angle < 1e-300) return Eigen::Matrix3d::Identity();
    return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

inline Eigen::Vector3d rotation_to_vector(const Eigen::Matrix3d& r) {
    const Eigen::AngleAxisd aa(r);
    return aa.angle() * aa.axis();
}

/// Closest rotation in the Frobenius sense.
inline Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& m) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d u = svd.matrixU();
    const Eigen::Matrix3d v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
    return u * v.transpose();
}

/// Geodesic angle between two rotations, radians.
inline double rotation_distance(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
    const double c = std::clamp(((a * b.transpose()).trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c);
}

/**
 * Geometry of the horizon reference bar: two congruent rectangles in the
 * plane Z = 0, side by side along X, centered on the origin. Y points down so
 * that a camera with identity rotation sees the bar upright.
 */
struct BarModel {
    double rect_width = 0.30;
    double rect_height = 0.10;
    double gap = 0.40;

    bool valid() const { return rect_width > 0.0 && rect_height > 0.0 && gap > 0.0; }

    double total_width() const { return 2.0 * rect_width + gap; }

    /// Left rectangle TL, TR, BR, BL then right rectangle TL, TR, BR, BL.
    std::array<WorldPoint, 8> corners() const {
        const double h = rect_height / 2.0;
        const double inner = gap / 2.0;
        const double outer = inner + rect_width;
        return {WorldPoint(-outer, -h, 0.0), WorldPoint(-inner, -h, 0.0),
                WorldPoint(-inner, h, 0.0),  WorldPoint(-outer, h, 0.0),
                WorldPoint(inner, -h, 0.0),  WorldPoint(outer, -h, 0.0),
                WorldPoint(outer, h, 0.0),   WorldPoint(inner, h, 0.0)};
    }
};

inline ImagePoint project_camera_point(const CameraIntrinsics& k, const Eigen::Vector3d& pc) {
    if (!(pc.z() > 0.0)) throw PointBehindCamera("camera-frame depth is not positive");
    return {k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy};
}

inline ImagePoint project(const CameraIntrinsics& k, const Pose& pose, const WorldPoint& p) {
    return project_camera_point(k, pose.to_camera(p));
}

inline Eigen::Vector3d camera_position(const Pose& pose) {
    return -pose.rotation.transpose() * pose.translation;
}

inline double reprojection_error(const CameraIntrinsics& k, const Pose& pose,
                                 std::span<const WorldPoint> world,
                                 std::span<const ImagePoint> image) {
    if (world.size() != image.size())
        throw DegenerateConfiguration("world/image point counts differ");
    double sum = 0.0;
    for (std::size_t i = 0; i < world.size(); ++i)
        sum += (project(k, pose, world[i]) - image[i]).squaredNorm();
    return sum;
}

struct PnpOptions {
    double initial_damping = 1e-3;
    double damping_factor = 10.0;
    double step_tolerance = 1e-10;
    int max_iterations = 200;
    // RMS reprojection residual (px) above which hitting the iteration cap is
    // reported as NoConvergence.
    double residual_threshold = 2.0;
};

struct PnpResult {
    Pose pose;
    int iterations = 0;
    double final_cost = 0.0;
    bool converged = false;
    // Objective after each accepted step, starting with the initial guess.
    std::vector<double> cost_history;
};

namespace detail {

// Hartley normalization: centroid at origin, mean distance sqrt(2).
inline Eigen::Matrix3d normalizing_transform(const std::vector<Eigen::Vector2d>& pts) {
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (const auto& p : pts) c += p;
    c /= static_cast<double>(pts.size());
    double mean_dist = 0.0;
    for (const auto& p : pts) mean_dist += (p - c).norm();
    mean_dist /= static_cast<double>(pts.size());
    const double s = mean_dist > 0.0 ? std::sqrt(2.0) / mean_dist : 1.0;
    Eigen::Matrix3d t;
    t << s, 0.0, -s * c.x(), 0.0, s, -s * c.y(), 0.0, 0.0, 1.0;
    return t;
}

// DLT homography mapping plane coordinates (x, y) to normalized camera rays.
inline Eigen::Matrix3d fit_homography(const std::vector<Eigen::Vector2d>& src,
                                      const std::vector<Eigen::Vector2d>& dst) {
    const Eigen::Matrix3d ts = normalizing_transform(src);
    const Eigen::Matrix3d td = normalizing_transform(dst);
    const auto n = static_cast<Eigen::Index>(src.size());
    Eigen::MatrixXd a(2 * n, 9);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Vector3d s = ts * src[i].homogeneous();
        const Eigen::Vector3d d = td * dst[i].homogeneous();
        a.row(2 * i) << 0, 0, 0, -s.x(), -s.y(), -1, d.y() * s.x(), d.y() * s.y(), d.y();
        a.row(2 * i + 1) << s.x(), s.y(), 1, 0, 0, 0, -d.x() * s.x(), -d.x() * s.y(), -d.x();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const Eigen::VectorXd h = svd.matrixV().col(8);
    Eigen::Matrix3d hn;
    hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
    return td.inverse() * hn * ts;
}

// Pose of a plane (points at z = 0 in plane coordinates) from a homography
// expressed in normalized camera coordinates.
inline Pose pose_from_homography(const Eigen::Matrix3d& h) {
    const double scale = 2.0 / (h.col(0).norm() + h.col(1).norm());
    Eigen::Vector3d r1 = scale * h.col(0);
    Eigen::Vector3d r2 = scale * h.col(1);
    Eigen::Vector3d t = scale * h.col(2);
    if (t.z() < 0.0) {
        r1 = -r1;
        r2 = -r2;
        t = -t;
    }
    Eigen::Matrix3d r;
    r.col(0) = r1;
    r.col(1) = r2;
    r.col(2) = r1.cross(r2);
    return {orthonormalize(r), t};
}

struct PlaneFrame {
    Eigen::Vector3d origin;
    Eigen::Matrix3d axes;  // columns: in-plane u, in-plane v, normal
    Eigen::Vector3d singular_values;
};

inline PlaneFrame fit_plane(std::span<const WorldPoint> world) {
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (const auto& p : world) c += p;
    c /= static_cast<double>(world.size());
    Eigen::MatrixXd centered(3, static_cast<Eigen::Index>(world.size()));
    for (std::size_t i = 0; i < world.size(); ++i)
        centered.col(static_cast<Eigen::Index>(i)) = world[i] - c;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeFullU);
    Eigen::Matrix3d axes = svd.matrixU();
    axes.col(2) = axes.col(0).cross(axes.col(1));
    return {c, axes, svd.singularValues()};
}

// Linear initial guess: homography for (near-)planar targets, 3-D DLT
// otherwise.
inline Pose initial_pose(const CameraIntrinsics& k, std::span<const WorldPoint> world,
                         std::span<const ImagePoint> image) {
    const Eigen::Matrix3d k_inv = k.matrix().inverse();
    std::vector<Eigen::Vector2d> rays;
    rays.reserve(image.size());
    for (const auto& q : image) rays.push_back((k_inv * q.homogeneous()).hnormalized());

    const PlaneFrame plane = fit_plane(world);
    const bool planar = plane.singular_values(2) <= 1e-6 * plane.singular_values(0);

    if (!planar && world.size() >= 6) {
        const auto n = static_cast<Eigen::Index>(world.size());
        Eigen::MatrixXd a(2 * n, 12);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Vector4d x = world[static_cast<std::size_t>(i)].homogeneous();
            const Eigen::Vector2d& r = rays[static_cast<std::size_t>(i)];
            a.row(2 * i) << x.transpose(), Eigen::RowVector4d::Zero(), -r.x() * x.transpose();
            a.row(2 * i + 1) << Eigen::RowVector4d::Zero(), x.transpose(), -r.y() * x.transpose();
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
        const Eigen::VectorXd p = svd.matrixV().col(11);
        Eigen::Matrix<double, 3, 4> pm;
        pm << p(0), p(1), p(2), p(3), p(4), p(5), p(6), p(7), p(8), p(9), p(10), p(11);
        Eigen::Matrix3d m = pm.leftCols<3>();
        Eigen::Vector3d t = pm.col(3);
        if (m.determinant() < 0.0) {
            m = -m;
            t = -t;
        }
        const double scale = std::cbrt(m.determinant());
        return {orthonormalize(m / scale), t / scale};
    }

    std::vector<Eigen::Vector2d> plane_pts;
    plane_pts.reserve(world.size());
    for (const auto& p : world) plane_pts.push_back((plane.axes.transpose() * (p - plane.origin)).head<2>());
    const Pose in_plane = pose_from_homography(fit_homography(plane_pts, rays));
    Pose out;
    out.rotation = orthonormalize(in_plane.rotation * plane.axes.transpose());
    out.translation = in_plane.translation - in_plane.rotation * plane.axes.transpose() * plane.origin;
    return out;
}

inline Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
    Eigen::Matrix3d s;
    s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
    return s;
}

}  // namespace detail

/**
 * Recover the camera pose from >= 4 world/image correspondences.
 *
 * The pose is refined by Levenberg-Marquardt on the summed squared
 * reprojection error. Rotation increments are rotation vectors applied on the
 * left (R <- exp([dw]x) R), so the iterate stays on SO(3). Damping starts at
 * `initial_damping`, is divided by `damping_factor` after an accepted step and
 * multiplied by it after a rejected one.
 */
inline PnpResult solve_pnp_detailed(const CameraIntrinsics& k, std::span<const WorldPoint> world,
                                    std::span<const ImagePoint> image,
                                    const std::optional<Pose>& init = std::nullopt,
                                    const PnpOptions& opt = {}) {
    if (world.size() != image.size())
        throw DegenerateConfiguration("world/image point counts differ");
    if (world.size() < 4) throw DegenerateConfiguration("PnP needs at least 4 correspondences");
    for (const auto& q : image)
        if (!q.allFinite()) throw DegenerateConfiguration("non-finite image point");
    {
        const auto plane = detail::fit_plane(world);
        if (plane.singular_values(1) <= 1e-9 * plane.singular_values(0))
            throw DegenerateConfiguration("world points are collinear");
    }

    PnpResult res;
    res.pose = init ? *init : detail::initial_pose(k, world, image);

    const auto cost_of = [&](const Pose& p) -> std::optional<double> {
        double c = 0.0;
        for (std::size_t i = 0; i < world.size(); ++i) {
            const Eigen::Vector3d pc = p.to_camera(world[i]);
            if (!(pc.z() > 0.0)) return std::nullopt;
            c += (project_camera_point(k, pc) - image[i]).squaredNorm();
        }
        return c;
    };

    auto current = cost_of(res.pose);
    if (!current) throw PointBehindCamera("initial pose places points behind the camera");
    double cost = *current;
    res.cost_history.push_back(cost);

    double lambda = opt.initial_damping;
    using Mat6 = Eigen::Matrix<double, 6, 6>;
    using Vec6 = Eigen::Matrix<double, 6, 1>;

    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
        Mat6 jtj = Mat6::Zero();
        Vec6 jtr = Vec6::Zero();
        for (std::size_t i = 0; i < world.size(); ++i) {
            const Eigen::Vector3d rp = res.pose.rotation * world[i];
            const Eigen::Vector3d pc = rp + res.pose.translation;
            const double iz = 1.0 / pc.z();
            Eigen::Matrix<double, 2, 3> dproj;
            dproj << k.fx * iz, 0.0, -k.fx * pc.x() * iz * iz, 0.0, k.fy * iz, -k.fy * pc.y() * iz * iz;
            Eigen::Matrix<double, 2, 6> j;
            j.leftCols<3>() = -dproj * detail::skew(rp);
            j.rightCols<3>() = dproj;
            const Eigen::Vector2d r = project_camera_point(k, pc) - image[i];
            jtj.noalias() += j.transpose() * j;
            jtr.noalias() += j.transpose() * r;
        }

        Mat6 damped = jtj;
        damped.diagonal() += lambda * jtj.diagonal();
        const Vec6 step = damped.ldlt().solve(-jtr);
        if (!step.allFinite()) break;
        if (step.norm() < opt.step_tolerance) {
            res.converged = true;
            break;
        }

        Pose candidate;
        candidate.rotation =
            rotation_from_vector(step.head<3>()) * res.pose.rotation;
        candidate.rotation = orthonormalize(candidate.rotation);
        candidate.translation = res.pose.translation + step.tail<3>();

        const auto cand_cost = cost_of(candidate);
        if (cand_cost && *cand_cost < cost) {
            res.pose = candidate;
            cost = *cand_cost;
            res.cost_history.push_back(cost);
            lambda /= opt.damping_factor;
        } else {
            lambda *= opt.damping_factor;
            // The damped step can no longer shrink meaningfully: local minimum.
            if (lambda > 1e16) {
                res.converged = true;
                break;
            }
        }
    }

    res.final_cost = cost;
    if (!res.converged) {
        const double rms = std::sqrt(cost / static_cast<double>(world.size()));
        if (rms > opt.residual_threshold)
            throw NoConvergence("LM hit the iteration cap with RMS residual " + std::to_string(rms) +
                                " px");
        res.converged = true;
    }
    return res;
}

inline Pose solve_pnp(const CameraIntrinsics& k, std::span<const WorldPoint> world,
                      std::span<const ImagePoint> image,
                      const std::optional<Pose>& init = std::nullopt, const PnpOptions& opt = {}) {
    return solve_pnp_detailed(k, world, image, init, opt).pose;
}

}  // namespace shipland
