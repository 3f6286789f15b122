#pragma once

#include <Eigen/Dense>

#include <array>
#include <optional>
#include <span>

namespace roadsim {

using Vec2 = Eigen::Vector2d;
using AABB = Eigen::AlignedBox2d;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Slack used to classify near-parallel segment pairs as collinear. Map
/// coordinates are O(1e3) meters, well within double precision at this scale.
inline constexpr double kCollinearEps = 1e-9;

/// Wraps an angle into (-pi, pi].
double norm_angle(double a);

/// Minimum separation between two headings: min over k of |h1 - h2 + 2*pi*k|,
/// in [0, pi].
double min_angle(double h1, double h2);

/// Signed rotation taking `from` onto `to`, wrapped into (-pi, pi].
double signed_angle_diff(double from, double to);

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

struct Segment {
    Vec2 a{0.0, 0.0};
    Vec2 b{0.0, 0.0};

    AABB aabb() const {
        AABB box(a);
        box.extend(b);
        return box;
    }
    double length() const { return (b - a).norm(); }
};

/// Rectangle with a center pose. `length` extends along the heading axis,
/// `width` across it. The heading is normalized on construction.
struct OrientedBox {
    Vec2 center{0.0, 0.0};
    double heading = 0.0;
    double length = 1.0;
    double width = 1.0;

    OrientedBox() = default;
    OrientedBox(const Vec2& c, double h, double len, double wid);

    /// Corner order: front-left, front-right, rear-right, rear-left.
    std::array<Vec2, 4> corners() const;
    AABB aabb() const;
    bool contains(const Vec2& p) const;
};

/// Circular sector: everything within `radius` of the apex and within
/// `half_angle` of the axis direction. Both boundaries are closed.
struct Cone {
    Vec2 apex{0.0, 0.0};
    double direction = 0.0;
    double half_angle = kPi / 3.0;
    double radius = 80.0;

    AABB aabb() const;
};

/// Intersection point of two closed segments. Collinear overlap yields the
/// midpoint of the shared piece; zero-length segments degrade to points.
std::optional<Vec2> segment_intersect(const Segment& s1, const Segment& s2);

bool in_cone(const Vec2& p, const Cone& cone);

/// Exact separating-axis test on the four candidate axes. Touching boundaries
/// count as overlap.
bool box_overlap(const OrientedBox& a, const OrientedBox& b);

bool box_intersects_segment(const OrientedBox& box, const Segment& s);

/// Entry/exit parameters of the line through a->b against the solid box, in
/// units of the segment parameter (a = 0, b = 1). Empty when the supporting
/// line misses the box entirely.
std::optional<std::pair<double, double>> segment_box_span(const Vec2& a, const Vec2& b,
                                                          const OrientedBox& box);

/// True when some blocker obstructs the sight segment from origin to target.
/// A blocker obstructs iff it intersects the open segment strictly before the
/// target; a blocker that contains the target point never obstructs it.
bool ray_first_hit(const Vec2& origin, const Vec2& target,
                   std::span<const OrientedBox> blockers);

} // namespace roadsim
