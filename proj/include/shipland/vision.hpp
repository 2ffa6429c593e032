#pragma once
/**
 * @file vision.hpp
 * @brief Horizon-bar detector: HSV thresholding, morphology, marker-based
 *        watershed, contour tracing, Förstner sub-pixel corners and geometric
 *        screening.
 *
 * Pixel centers sit at integer coordinates; pixel (x, y) covers
 * [x - 0.5, x + 0.5] x [y - 0.5, y + 0.5].
 */

#include <shipland/errors.hpp>
#include <shipland/image.hpp>
#include <shipland/pose.hpp>

#include <nlohmann/json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace shipland {

struct Hsv {
    double h = 0.0;  // degrees, [0, 360)
    double s = 0.0;  // [0, 1]
    double v = 0.0;  // [0, 1]
};

inline Hsv rgb_to_hsv(Rgb c) {
    const double r = c.r / 255.0, g = c.g / 255.0, b = c.b / 255.0;
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double delta = mx - mn;
    Hsv out;
    out.v = mx;
    out.s = mx > 0.0 ? delta / mx : 0.0;
    if (delta <= 0.0) return out;
    double h;
    if (mx == r)
        h = 60.0 * std::fmod((g - b) / delta, 6.0);
    else if (mx == g)
        h = 60.0 * ((b - r) / delta + 2.0);
    else
        h = 60.0 * ((r - g) / delta + 4.0);
    if (h < 0.0) h += 360.0;
    out.h = h;
    return out;
}

/// Hue may wrap: hue_lo > hue_hi selects [hue_lo, 360) U [0, hue_hi].
struct HsvRange {
    double hue_lo = 90.0, hue_hi = 150.0;
    double sat_lo = 0.4, sat_hi = 1.0;
    double val_lo = 0.3, val_hi = 1.0;

    bool contains(const Hsv& p) const {
        const bool hue_ok = hue_lo <= hue_hi ? (p.h >= hue_lo && p.h <= hue_hi)
                                             : (p.h >= hue_lo || p.h <= hue_hi);
        return hue_ok && p.s >= sat_lo && p.s <= sat_hi && p.v >= val_lo && p.v <= val_hi;
    }
};

inline BinaryMask hsv_filter(const RgbImage& img, const HsvRange& range) {
    BinaryMask mask(img.width(), img.height());
    const auto& px = img.bytes();
    auto& out = mask.data();
    for (std::size_t i = 0, j = 0; j < out.size(); i += 3, ++j) {
        const Rgb c{px[i], px[i + 1], px[i + 2]};
        // Cheap reject: grey pixels have zero saturation.
        if (c.r == c.g && c.g == c.b && range.sat_lo > 0.0) continue;
        out[j] = range.contains(rgb_to_hsv(c)) ? 1 : 0;
    }
    return mask;
}

namespace detail {

// Sliding-window count along one axis; `erode` keeps a pixel only if every
// in-bounds pixel of the window is set, otherwise any set pixel suffices.
// Pixels outside the image never constrain the result.
inline BinaryMask box_pass(const BinaryMask& in, int radius, bool horizontal, bool erode) {
    const int w = in.width(), h = in.height();
    BinaryMask out(w, h);
    const int outer = horizontal ? h : w;
    const int inner = horizontal ? w : h;
    const auto& src = in.data();
    auto& dst = out.data();
    auto idx = [&](int o, int i) {
        return horizontal ? static_cast<std::size_t>(o) * w + i : static_cast<std::size_t>(i) * w + o;
    };
    for (int o = 0; o < outer; ++o) {
        int count = 0;
        int lo = 0, hi = -1;  // current window [lo, hi]
        for (int i = 0; i < inner; ++i) {
            const int want_lo = std::max(0, i - radius);
            const int want_hi = std::min(inner - 1, i + radius);
            while (hi < want_hi) count += src[idx(o, ++hi)];
            while (lo < want_lo) count -= src[idx(o, lo++)];
            const int span = hi - lo + 1;
            dst[idx(o, i)] = erode ? (count == span) : (count > 0);
        }
    }
    return out;
}

}  // namespace detail

/// Square structuring element of side 2r+1.
inline BinaryMask erode(const BinaryMask& m, int radius) {
    return detail::box_pass(detail::box_pass(m, radius, true, true), radius, false, true);
}

inline BinaryMask dilate(const BinaryMask& m, int radius) {
    return detail::box_pass(detail::box_pass(m, radius, true, false), radius, false, false);
}

inline BinaryMask morph_open(const BinaryMask& m, int radius) {
    if (radius < 1) throw std::invalid_argument("kernel radius must be >= 1");
    return dilate(erode(m, radius), radius);
}

inline BinaryMask morph_close(const BinaryMask& m, int radius) {
    if (radius < 1) throw std::invalid_argument("kernel radius must be >= 1");
    return erode(dilate(m, radius), radius);
}

struct PixelRect {
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive
    int width() const { return x1 - x0 + 1; }
    int height() const { return y1 - y0 + 1; }
    friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

struct Contour {
    std::vector<Eigen::Vector2i> points;  // outer boundary, clockwise on screen
    PixelRect bounds;
    int area = 0;  // pixel count of the component
};

namespace detail {

inline constexpr std::array<int, 8> kDx = {1, 1, 0, -1, -1, -1, 0, 1};
inline constexpr std::array<int, 8> kDy = {0, 1, 1, 1, 0, -1, -1, -1};

// 8-connected component labels (0 = background, components numbered from 1
// in raster order of their first pixel).
inline std::vector<int> label_components(const BinaryMask& m, int& count) {
    const int w = m.width(), h = m.height();
    std::vector<int> labels(static_cast<std::size_t>(w) * h, 0);
    std::vector<int> stack;
    count = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (!m.data()[i] || labels[i]) continue;
            ++count;
            labels[i] = count;
            stack.push_back(static_cast<int>(i));
            while (!stack.empty()) {
                const int p = stack.back();
                stack.pop_back();
                const int px = p % w, py = p / w;
                for (int d = 0; d < 8; ++d) {
                    const int nx = px + kDx[d], ny = py + kDy[d];
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
                    if (m.data()[j] && !labels[j]) {
                        labels[j] = count;
                        stack.push_back(static_cast<int>(j));
                    }
                }
            }
        }
    }
    return labels;
}

// Moore-neighbour tracing with Jacob's stopping criterion.
inline std::vector<Eigen::Vector2i> trace_boundary(const std::vector<int>& labels, int w, int h,
                                                   int label, Eigen::Vector2i start) {
    auto inside = [&](int x, int y) {
        return x >= 0 && y >= 0 && x < w && y < h && labels[static_cast<std::size_t>(y) * w + x] == label;
    };
    std::vector<Eigen::Vector2i> out{start};
    // Raster-first pixel: its west neighbour is background.
    Eigen::Vector2i p = start;
    int back_dir = 4;
    std::optional<Eigen::Vector2i> first_move;
    const std::size_t limit = 4 * static_cast<std::size_t>(w) * h + 8;
    while (out.size() < limit) {
        int found = -1;
        for (int k = 1; k <= 8; ++k) {
            const int d = (back_dir + k) % 8;
            if (inside(p.x() + kDx[d], p.y() + kDy[d])) {
                found = d;
                break;
            }
        }
        if (found < 0) break;  // isolated pixel
        const Eigen::Vector2i q(p.x() + kDx[found], p.y() + kDy[found]);
        // Backtrack becomes the last background cell examined, seen from q.
        const int prev = (found + 7) % 8;
        const Eigen::Vector2i b(p.x() + kDx[prev], p.y() + kDy[prev]);
        const Eigen::Vector2i rel = b - q;
        for (int d = 0; d < 8; ++d)
            if (kDx[d] == rel.x() && kDy[d] == rel.y()) back_dir = d;
        if (p == start) {
            if (!first_move)
                first_move = q;
            else if (*first_move == q)
                break;
        }
        p = q;
        if (p != start) out.push_back(p);
    }
    return out;
}

}  // namespace detail

/// One entry per 8-connected component with at least `min_area` pixels.
inline std::vector<Contour> find_contours(const BinaryMask& mask, int min_area = 50) {
    const int w = mask.width(), h = mask.height();
    int count = 0;
    const auto labels = detail::label_components(mask, count);
    std::vector<Contour> out(static_cast<std::size_t>(count));
    std::vector<bool> seen(static_cast<std::size_t>(count) + 1, false);
    for (auto& c : out) c.bounds = {w, h, -1, -1};
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int l = labels[static_cast<std::size_t>(y) * w + x];
            if (!l) continue;
            Contour& c = out[static_cast<std::size_t>(l - 1)];
            ++c.area;
            c.bounds.x0 = std::min(c.bounds.x0, x);
            c.bounds.y0 = std::min(c.bounds.y0, y);
            c.bounds.x1 = std::max(c.bounds.x1, x);
            c.bounds.y1 = std::max(c.bounds.y1, y);
            if (!seen[static_cast<std::size_t>(l)]) {
                seen[static_cast<std::size_t>(l)] = true;
                c.points = detail::trace_boundary(labels, w, h, l, {x, y});
            }
        }
    }
    std::erase_if(out, [&](const Contour& c) { return c.area < min_area; });
    return out;
}

namespace detail {

inline double sobel_x(const RgbImage& img, int x, int y) {
    auto l = [&](int dx, int dy) {
        return img.luma(std::clamp(x + dx, 0, img.width() - 1), std::clamp(y + dy, 0, img.height() - 1));
    };
    return (l(1, -1) + 2.0 * l(1, 0) + l(1, 1)) - (l(-1, -1) + 2.0 * l(-1, 0) + l(-1, 1));
}

inline double sobel_y(const RgbImage& img, int x, int y) {
    auto l = [&](int dx, int dy) {
        return img.luma(std::clamp(x + dx, 0, img.width() - 1), std::clamp(y + dy, 0, img.height() - 1));
    };
    return (l(-1, 1) + 2.0 * l(0, 1) + l(1, 1)) - (l(-1, -1) + 2.0 * l(0, -1) + l(1, -1));
}

// Meyer flooding restricted to the band between eroded and dilated mask.
// `mask` covers the rectangle of `img` starting at (ox, oy).
inline BinaryMask watershed_roi(const RgbImage& img, const BinaryMask& mask, int ox, int oy,
                                int marker_radius) {
    const int w = mask.width(), h = mask.height();
    const std::size_t n = static_cast<std::size_t>(w) * h;
    constexpr int kBackground = 1;

    int count = 0;
    const auto comp = label_components(mask, count);
    const BinaryMask sure_fg = erode(mask, marker_radius);
    const BinaryMask maybe = dilate(mask, marker_radius);

    // Components that vanish under erosion keep their own pixels as marker.
    std::vector<bool> has_core(static_cast<std::size_t>(count) + 1, false);
    for (std::size_t i = 0; i < n; ++i)
        if (sure_fg.data()[i]) has_core[static_cast<std::size_t>(comp[i])] = true;

    std::vector<int> labels(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!maybe.data()[i])
            labels[i] = kBackground;
        else if (comp[i] && (sure_fg.data()[i] || !has_core[static_cast<std::size_t>(comp[i])]))
            labels[i] = kBackground + comp[i];
    }

    using Item = std::tuple<double, std::uint64_t, int, int>;  // priority, seq, index, label
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    std::uint64_t seq = 0;
    std::vector<std::uint8_t> queued(n, 0);
    auto gradient = [&](int i) {
        const int x = i % w + ox, y = i / w + oy;
        return std::hypot(sobel_x(img, x, y), sobel_y(img, x, y));
    };
    auto push_neighbours = [&](int i) {
        const int x = i % w, y = i / w;
        static constexpr std::array<int, 4> dx4 = {1, -1, 0, 0}, dy4 = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
            const int nx = x + dx4[d], ny = y + dy4[d];
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const int j = ny * w + nx;
            if (labels[static_cast<std::size_t>(j)] || queued[static_cast<std::size_t>(j)]) continue;
            queued[static_cast<std::size_t>(j)] = 1;
            queue.emplace(gradient(j), seq++, j, labels[static_cast<std::size_t>(i)]);
        }
    };
    for (std::size_t i = 0; i < n; ++i)
        if (labels[i]) push_neighbours(static_cast<int>(i));
    while (!queue.empty()) {
        const auto [prio, s, i, label] = queue.top();
        queue.pop();
        labels[static_cast<std::size_t>(i)] = label;
        push_neighbours(i);
    }

    // Collapse to binary; pixels where two different regions touch are cleared
    // so that separate rectangles stay separate.
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int l = labels[static_cast<std::size_t>(y) * w + x];
            if (l <= kBackground) continue;
            bool touches_other = false;
            for (int d = 0; d < 8 && !touches_other; ++d) {
                const int nx = x + kDx[d], ny = y + kDy[d];
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                const int m = labels[static_cast<std::size_t>(ny) * w + nx];
                touches_other = m > kBackground && m != l && m < l;
            }
            out.set(x, y, !touches_other);
        }
    }
    return out;
}

}  // namespace detail

/**
 * Marker-based watershed on the luma gradient magnitude. Sure foreground is
 * the eroded mask (one marker per component), sure background the complement
 * of the dilated mask; the band in between is flooded in gradient order.
 */
inline BinaryMask watershed_refine(const RgbImage& img, const BinaryMask& mask, int marker_radius = 2) {
    if (img.width() != mask.width() || img.height() != mask.height())
        throw std::invalid_argument("mask and image dimensions differ");
    if (!mask.any()) throw NoForeground("mask has no foreground pixels");
    return detail::watershed_roi(img, mask, 0, 0, marker_radius);
}

/**
 * Förstner sub-pixel corner: the point minimizing the gradient-weighted sum of
 * squared distances to the lines through each window pixel orthogonal to its
 * gradient, i.e. the solution of (sum g g^T) p = sum g g^T x. The window is
 * re-centred on the estimate up to three times.
 */
inline ImagePoint forstner_refine(const RgbImage& img, const ImagePoint& rough, int window = 7,
                                  double max_condition = 1e6) {
    if (window < 1) throw std::invalid_argument("window must be >= 1");
    ImagePoint p = rough;
    for (int iter = 0; iter < 4; ++iter) {
        const int cx = static_cast<int>(std::lround(p.x()));
        const int cy = static_cast<int>(std::lround(p.y()));
        if (cx - window - 1 < 0 || cy - window - 1 < 0 || cx + window + 1 >= img.width() ||
            cy + window + 1 >= img.height())
            throw IllConditioned("corner window leaves the image");

        Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
        Eigen::Vector2d b = Eigen::Vector2d::Zero();
        for (int y = cy - window; y <= cy + window; ++y) {
            for (int x = cx - window; x <= cx + window; ++x) {
                const Eigen::Vector2d g(detail::sobel_x(img, x, y), detail::sobel_y(img, x, y));
                const double mag = g.norm();
                if (mag <= 0.0) continue;
                // Lines weighted by |g|: the first moment of the edge response
                // sits exactly on a box-filtered straight edge.
                const Eigen::Matrix2d ggt = g * g.transpose() / mag;
                a += ggt;
                b += ggt * Eigen::Vector2d(x, y);
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(a);
        const double lmin = es.eigenvalues()(0), lmax = es.eigenvalues()(1);
        if (!(lmax > 1e-12) || !(lmin > 0.0) || lmax / lmin > max_condition)
            throw IllConditioned("structure tensor is ill-conditioned");
        const ImagePoint next = a.ldlt().solve(b);
        if ((next - rough).cwiseAbs().maxCoeff() > window)
            throw IllConditioned("refined corner left the search window");
        const double shift = (next - p).norm();
        p = next;
        if (shift < 0.05) break;
    }
    return p;
}

struct ScreeningTolerances {
    double length = 0.10;  // relative, widths and heights
    double slope = 0.05;   // fraction of a 90 degree span
    double min_separation = 2.0;  // px
};

/// Left rectangle TL, TR, BR, BL then right rectangle TL, TR, BR, BL.
struct CornerSet {
    std::array<ImagePoint, 8> corners;
};

namespace detail {

inline std::array<ImagePoint, 4> order_quad(std::span<const ImagePoint> q) {
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (const auto& p : q) c += p;
    c /= 4.0;
    std::array<ImagePoint, 4> out;
    std::copy(q.begin(), q.end(), out.begin());
    // Ascending atan2 with y pointing down is clockwise on screen.
    std::sort(out.begin(), out.end(), [&](const ImagePoint& a, const ImagePoint& b) {
        return std::atan2(a.y() - c.y(), a.x() - c.x()) < std::atan2(b.y() - c.y(), b.x() - c.x());
    });
    const auto tl = std::min_element(out.begin(), out.end(), [](const ImagePoint& a, const ImagePoint& b) {
        return a.x() + a.y() < b.x() + b.y();
    });
    std::rotate(out.begin(), tl, out.end());
    return out;
}

inline double wrap_angle(double a) {
    while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
    while (a < -std::numbers::pi) a += 2.0 * std::numbers::pi;
    return a;
}

inline double direction(const ImagePoint& from, const ImagePoint& to) {
    return std::atan2(to.y() - from.y(), to.x() - from.x());
}

}  // namespace detail

/**
 * Sort 8 candidates (first four from one component, last four from the other)
 * into canonical order and check that the two rectangles agree: mean widths
 * and heights within `length`, and each side's direction within
 * `slope` * 90 degrees of the corresponding side of the other rectangle.
 */
inline CornerSet screen_and_order(std::span<const ImagePoint> candidates,
                                  const ScreeningTolerances& tol = {}) {
    if (candidates.size() != 8) throw ScreeningFailed("count", "expected 8 candidates");
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = i + 1; j < 8; ++j)
            if ((candidates[i] - candidates[j]).norm() < tol.min_separation)
                throw ScreeningFailed("separation");

    auto a = detail::order_quad(candidates.subspan(0, 4));
    auto b = detail::order_quad(candidates.subspan(4, 4));
    const auto centroid_u = [](const std::array<ImagePoint, 4>& q) {
        return (q[0].x() + q[1].x() + q[2].x() + q[3].x()) / 4.0;
    };
    if (centroid_u(b) < centroid_u(a)) std::swap(a, b);

    const auto width = [](const std::array<ImagePoint, 4>& q) {
        return ((q[1] - q[0]).norm() + (q[2] - q[3]).norm()) / 2.0;
    };
    const auto height = [](const std::array<ImagePoint, 4>& q) {
        return ((q[3] - q[0]).norm() + (q[2] - q[1]).norm()) / 2.0;
    };
    const auto rel_diff = [](double x, double y) { return std::abs(x - y) / ((x + y) / 2.0); };

    if (rel_diff(width(a), width(b)) > tol.length)
        throw ScreeningFailed("width", std::to_string(rel_diff(width(a), width(b))));
    if (rel_diff(height(a), height(b)) > tol.length)
        throw ScreeningFailed("height", std::to_string(rel_diff(height(a), height(b))));

    // Side directions: top TL->TR, right TR->BR, bottom BL->BR, left TL->BL.
    const auto sides = [](const std::array<ImagePoint, 4>& q) {
        return std::array<double, 4>{detail::direction(q[0], q[1]), detail::direction(q[1], q[2]),
                                     detail::direction(q[3], q[2]), detail::direction(q[0], q[3])};
    };
    const auto sa = sides(a), sb = sides(b);
    const double max_angle = tol.slope * std::numbers::pi / 2.0;
    for (std::size_t i = 0; i < 4; ++i)
        if (std::abs(detail::wrap_angle(sa[i] - sb[i])) > max_angle)
            throw ScreeningFailed("slope", "side " + std::to_string(i));

    CornerSet out;
    std::copy(a.begin(), a.end(), out.corners.begin());
    std::copy(b.begin(), b.end(), out.corners.begin() + 4);
    return out;
}

namespace detail {

// Sub-pixel crossing of a step edge along one pixel line, from the first
// moment of forward differences. Exact for a box-filtered straight edge when
// the profile spans the whole transition. `along_x` samples a row.
inline std::optional<double> edge_crossing(const RgbImage& img, int fixed, double guess, int half, bool along_x) {
    const int lo = static_cast<int>(std::floor(guess)) - half;
    const int hi = static_cast<int>(std::floor(guess)) + half + 1;
    const int limit = along_x ? img.width() : img.height();
    if (lo < 0 || hi >= limit) return std::nullopt;
    double sum = 0.0, moment = 0.0;
    auto luma = [&](int i) { return along_x ? img.luma(i, fixed) : img.luma(fixed, i); };
    double prev = luma(lo);
    for (int i = lo; i < hi; ++i) {
        const double next = luma(i + 1);
        const double d = next - prev;
        sum += d;
        moment += (i + 0.5) * d;
        prev = next;
    }
    if (std::abs(sum) < 1e-9) return std::nullopt;
    return moment / sum;
}

struct Line2d {
    Eigen::Vector2d point;
    Eigen::Vector2d dir;
};

inline std::optional<Eigen::Vector2d> intersect(const Line2d& a, const Line2d& b) {
    Eigen::Matrix2d m;
    m << a.dir, -b.dir;
    if (std::abs(m.determinant()) < 1e-12) return std::nullopt;
    const Eigen::Vector2d ts = m.colPivHouseholderQr().solve(b.point - a.point);
    return a.point + ts(0) * a.dir;
}

// Least-squares line through the edge crossings sampled between two corners.
inline std::optional<Line2d> fit_side(const RgbImage& img, const ImagePoint& a, const ImagePoint& b, int margin,
                                      int half) {
    const Eigen::Vector2d d = b - a;
    const bool mostly_horizontal = std::abs(d.x()) >= std::abs(d.y());
    // Sample columns for horizontal-ish sides, rows otherwise.
    const double s0 = mostly_horizontal ? std::min(a.x(), b.x()) : std::min(a.y(), b.y());
    const double s1 = mostly_horizontal ? std::max(a.x(), b.x()) : std::max(a.y(), b.y());
    std::vector<Eigen::Vector2d> pts;
    for (int s = static_cast<int>(std::ceil(s0 + margin)); s <= static_cast<int>(std::floor(s1 - margin)); ++s) {
        const double t = mostly_horizontal ? (s - a.x()) / d.x() : (s - a.y()) / d.y();
        const Eigen::Vector2d guess = a + t * d;
        if (mostly_horizontal) {
            if (auto y = edge_crossing(img, s, guess.y(), half, false)) pts.emplace_back(s, *y);
        } else {
            if (auto x = edge_crossing(img, s, guess.x(), half, true)) pts.emplace_back(*x, s);
        }
    }
    if (pts.size() < 3) return std::nullopt;
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& p : pts) mean += p;
    mean /= static_cast<double>(pts.size());
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
    return Line2d{mean, es.eigenvectors().col(1)};
}

}  // namespace detail

/**
 * Sharpen a quad's corners by intersecting its four sides, each fitted to
 * sub-pixel edge crossings sampled away from the corners. Corners whose
 * sides cannot be fitted (too short, near the border) are left unchanged.
 */
inline std::array<ImagePoint, 4> polish_quad(const RgbImage& img, const std::array<ImagePoint, 4>& quad,
                                             int margin = 3, int half = 3) {
    std::array<std::optional<detail::Line2d>, 4> sides;
    for (std::size_t i = 0; i < 4; ++i) sides[i] = detail::fit_side(img, quad[i], quad[(i + 1) % 4], margin, half);
    std::array<ImagePoint, 4> out = quad;
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& before = sides[(i + 3) % 4];
        const auto& after = sides[i];
        if (!before || !after) continue;
        if (auto p = detail::intersect(*before, *after); p && (*p - quad[i]).norm() < 2.0) out[i] = *p;
    }
    return out;
}

struct DetectorConfig {
    HsvRange hsv;
    int open_radius = 1;
    int close_radius = 2;
    int marker_radius = 2;
    int min_area = 50;
    int forstner_window = 7;  // half-width, px
    ScreeningTolerances screening;
    int roi_margin = 8;
    bool line_polish = true;  // intersect fitted sides after Förstner
};

/// Rough quadrilateral corners of a traced component: the boundary pixels
/// extremal along the two diagonals (TL, TR, BR, BL).
inline std::array<ImagePoint, 4> rough_corners(const Contour& c) {
    auto pick = [&](auto score) {
        const auto it = std::max_element(c.points.begin(), c.points.end(),
                                         [&](const Eigen::Vector2i& a, const Eigen::Vector2i& b) {
                                             return score(a) < score(b);
                                         });
        return ImagePoint(it->x(), it->y());
    };
    return {pick([](const Eigen::Vector2i& p) { return -(p.x() + p.y()); }),
            pick([](const Eigen::Vector2i& p) { return p.x() - p.y(); }),
            pick([](const Eigen::Vector2i& p) { return p.x() + p.y(); }),
            pick([](const Eigen::Vector2i& p) { return p.y() - p.x(); })};
}

/// Full pipeline. Throws NoBarDetected naming the stage that failed.
inline CornerSet detect_bar(const RgbImage& img, const DetectorConfig& cfg = {}) {
    const BinaryMask full = hsv_filter(img, cfg.hsv);

    // Work inside the bounding box of the colour mask.
    PixelRect roi{img.width(), img.height(), -1, -1};
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            if (full.at(x, y)) {
                roi.x0 = std::min(roi.x0, x);
                roi.y0 = std::min(roi.y0, y);
                roi.x1 = std::max(roi.x1, x);
                roi.y1 = std::max(roi.y1, y);
            }
    if (roi.x1 < 0) throw NoBarDetected("hsv_filter", "no pixels in colour range");
    roi.x0 = std::max(0, roi.x0 - cfg.roi_margin);
    roi.y0 = std::max(0, roi.y0 - cfg.roi_margin);
    roi.x1 = std::min(img.width() - 1, roi.x1 + cfg.roi_margin);
    roi.y1 = std::min(img.height() - 1, roi.y1 + cfg.roi_margin);

    BinaryMask mask(roi.width(), roi.height());
    for (int y = 0; y < roi.height(); ++y)
        for (int x = 0; x < roi.width(); ++x) mask.set(x, y, full.at(x + roi.x0, y + roi.y0));

    mask = morph_close(morph_open(mask, cfg.open_radius), cfg.close_radius);
    if (!mask.any()) throw NoBarDetected("morphology", "mask empty after opening");
    mask = detail::watershed_roi(img, mask, roi.x0, roi.y0, cfg.marker_radius);

    auto contours = find_contours(mask, cfg.min_area);
    if (contours.size() < 2)
        throw NoBarDetected("contours", "found " + std::to_string(contours.size()) + " components");
    std::stable_sort(contours.begin(), contours.end(),
                     [](const Contour& a, const Contour& b) { return a.area > b.area; });
    contours.resize(2);

    std::array<ImagePoint, 8> candidates;
    for (std::size_t k = 0; k < 2; ++k) {
        const Contour& c = contours[k];
        const int gx0 = c.bounds.x0 + roi.x0, gy0 = c.bounds.y0 + roi.y0;
        const int gx1 = c.bounds.x1 + roi.x0, gy1 = c.bounds.y1 + roi.y0;
        if (gx0 == 0 || gy0 == 0 || gx1 == img.width() - 1 || gy1 == img.height() - 1)
            throw NoBarDetected("contours", "component touches the image border");

        auto rough = rough_corners(c);
        double shortest = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < 4; ++i) shortest = std::min(shortest, (rough[i] - rough[(i + 1) % 4]).norm());
        const int window = std::clamp(static_cast<int>(0.35 * shortest), 2, cfg.forstner_window);
        // Preferred window first, then the remaining sizes by distance from it.
        std::vector<int> windows{window};
        for (int d = 1; d <= cfg.forstner_window; ++d)
            for (int w : {window - d, window + d})
                if (w >= 2 && w <= std::max(window, cfg.forstner_window)) windows.push_back(w);
        for (std::size_t i = 0; i < 4; ++i) {
            const ImagePoint start = rough[i] + ImagePoint(roi.x0, roi.y0);
            std::string reason;
            bool refined = false;
            for (int w : windows) {
                try {
                    candidates[4 * k + i] = forstner_refine(img, start, w);
                    refined = true;
                    break;
                } catch (const IllConditioned& e) {
                    if (reason.empty()) reason = e.what();
                }
            }
            if (!refined) throw NoBarDetected("forstner", reason);
        }
    }

    try {
        CornerSet out = screen_and_order(candidates, cfg.screening);
        if (cfg.line_polish) {
            for (std::size_t r = 0; r < 2; ++r) {
                std::array<ImagePoint, 4> quad;
                std::copy_n(out.corners.begin() + 4 * r, 4, quad.begin());
                quad = polish_quad(img, quad);
                std::copy(quad.begin(), quad.end(), out.corners.begin() + 4 * r);
            }
        }
        return out;
    } catch (const ScreeningFailed& e) {
        throw NoBarDetected("screening", e.predicate());
    }
}

/// Serializable detection outcome: {corners: [[u, v] x 8], accepted, reason}.
struct DetectionRecord {
    std::array<ImagePoint, 8> corners{};
    bool accepted = false;
    std::string reason;
};

inline DetectionRecord detect_bar_record(const RgbImage& img, const DetectorConfig& cfg = {}) {
    DetectionRecord rec;
    try {
        rec.corners = detect_bar(img, cfg).corners;
        rec.accepted = true;
    } catch (const NoBarDetected& e) {
        rec.reason = e.stage() + ": " + e.reason();
        for (auto& c : rec.corners) c = ImagePoint::Constant(std::numeric_limits<double>::quiet_NaN());
    }
    return rec;
}

inline nlohmann::json to_json(const DetectionRecord& rec) {
    nlohmann::json corners = nlohmann::json::array();
    for (const auto& c : rec.corners) {
        if (rec.accepted)
            corners.push_back({c.x(), c.y()});
        else
            corners.push_back({nullptr, nullptr});
    }
    return {{"corners", corners}, {"accepted", rec.accepted}, {"reason", rec.reason}};
}

}  // namespace shipland
