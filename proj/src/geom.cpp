#include "roadsim/geom.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace roadsim {

double norm_angle(double a) {
    double r = std::remainder(a, kTwoPi); // in [-pi, pi]
    if (r <= -kPi) r += kTwoPi;
    return r;
}

double min_angle(double h1, double h2) { return std::abs(norm_angle(h1 - h2)); }

double signed_angle_diff(double from, double to) { return norm_angle(to - from); }

OrientedBox::OrientedBox(const Vec2& c, double h, double len, double wid)
    : center(c), heading(norm_angle(h)), length(len), width(wid) {
    if (!(len > 0.0) || !(wid > 0.0)) {
        throw std::invalid_argument("OrientedBox: extents must be positive");
    }
}

std::array<Vec2, 4> OrientedBox::corners() const {
    const double c = std::cos(heading);
    const double s = std::sin(heading);
    const Vec2 fwd = 0.5 * length * Vec2(c, s);
    const Vec2 left = 0.5 * width * Vec2(-s, c);
    return {center + fwd + left, center + fwd - left, center - fwd - left, center - fwd + left};
}

AABB OrientedBox::aabb() const {
    AABB box;
    for (const Vec2& p : corners()) box.extend(p);
    return box;
}

bool OrientedBox::contains(const Vec2& p) const {
    const double c = std::cos(heading);
    const double s = std::sin(heading);
    const Vec2 d = p - center;
    const double lx = c * d.x() + s * d.y();
    const double ly = -s * d.x() + c * d.y();
    return std::abs(lx) <= 0.5 * length && std::abs(ly) <= 0.5 * width;
}

AABB Cone::aabb() const {
    AABB box(apex);
    if (half_angle >= kPi) {
        box.extend(apex - Vec2(radius, radius));
        box.extend(apex + Vec2(radius, radius));
        return box;
    }
    const auto arc_point = [&](double ang) -> Vec2 {
        return apex + radius * Vec2(std::cos(ang), std::sin(ang));
    };
    box.extend(arc_point(direction));
    box.extend(arc_point(direction - half_angle));
    box.extend(arc_point(direction + half_angle));
    // Cardinal extremes of the arc, when inside the sector.
    for (const double cardinal : {0.0, 0.5 * kPi, kPi, -0.5 * kPi}) {
        if (min_angle(cardinal, direction) <= half_angle) box.extend(arc_point(cardinal));
    }
    return box;
}

namespace {

// Parameter of p along segment (a, d = b - a), using the dominant axis.
double project_param(const Vec2& a, const Vec2& d, const Vec2& p) {
    const double len2 = d.squaredNorm();
    if (len2 == 0.0) return 0.0;
    return (p - a).dot(d) / len2;
}

} // namespace

std::optional<Vec2> segment_intersect(const Segment& s1, const Segment& s2) {
    const Vec2 d1 = s1.b - s1.a;
    const Vec2 d2 = s2.b - s2.a;
    const Vec2 w = s2.a - s1.a;
    const double denom = cross2(d1, d2);

    if (std::abs(denom) > kCollinearEps) {
        const double t = cross2(w, d2) / denom;
        const double u = cross2(w, d1) / denom;
        if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) return std::nullopt;
        return Vec2(s1.a + t * d1);
    }

    const bool p1 = d1.squaredNorm() == 0.0;
    const bool p2 = d2.squaredNorm() == 0.0;
    if (p1 && p2) {
        if ((s1.a - s2.a).norm() <= kCollinearEps) return s1.a;
        return std::nullopt;
    }
    if (p1 || p2) {
        // Point-vs-segment containment.
        const Segment& seg = p1 ? s2 : s1;
        const Vec2& pt = p1 ? s1.a : s2.a;
        const Vec2 d = seg.b - seg.a;
        if (std::abs(cross2(d, pt - seg.a)) > kCollinearEps) return std::nullopt;
        const double t = project_param(seg.a, d, pt);
        if (t < 0.0 || t > 1.0) return std::nullopt;
        return pt;
    }

    // Parallel lines: collinear only when s2's origin sits on s1's line.
    if (std::abs(cross2(d1, w)) > kCollinearEps) return std::nullopt;
    double ta = project_param(s1.a, d1, s2.a);
    double tb = project_param(s1.a, d1, s2.b);
    if (ta > tb) std::swap(ta, tb);
    const double lo = std::max(0.0, ta);
    const double hi = std::min(1.0, tb);
    if (lo > hi) return std::nullopt;
    return Vec2(s1.a + (0.5 * (lo + hi)) * d1);
}

bool in_cone(const Vec2& p, const Cone& cone) {
    const Vec2 d = p - cone.apex;
    const double d2 = d.squaredNorm();
    if (d2 > cone.radius * cone.radius) return false;
    if (d2 == 0.0) return true;
    const Vec2 axis(std::cos(cone.direction), std::sin(cone.direction));
    // dot(axis, d) = |d| cos(delta); monotone in delta over [0, pi], so the
    // comparison is exact for any half angle up to pi.
    return axis.dot(d) >= std::sqrt(d2) * std::cos(cone.half_angle);
}

bool box_overlap(const OrientedBox& a, const OrientedBox& b) {
    const auto ca = a.corners();
    const auto cb = b.corners();
    const Vec2 axes[4] = {
        Vec2(std::cos(a.heading), std::sin(a.heading)),
        Vec2(-std::sin(a.heading), std::cos(a.heading)),
        Vec2(std::cos(b.heading), std::sin(b.heading)),
        Vec2(-std::sin(b.heading), std::cos(b.heading)),
    };
    for (const Vec2& axis : axes) {
        double lo_a = std::numeric_limits<double>::infinity(), hi_a = -lo_a;
        double lo_b = std::numeric_limits<double>::infinity(), hi_b = -lo_b;
        for (int i = 0; i < 4; ++i) {
            const double pa = axis.dot(ca[i]);
            const double pb = axis.dot(cb[i]);
            lo_a = std::min(lo_a, pa);
            hi_a = std::max(hi_a, pa);
            lo_b = std::min(lo_b, pb);
            hi_b = std::max(hi_b, pb);
        }
        if (hi_a < lo_b || hi_b < lo_a) return false;
    }
    return true;
}

bool box_intersects_segment(const OrientedBox& box, const Segment& s) {
    const auto span = segment_box_span(s.a, s.b, box);
    if (!span) return false;
    return span->first <= 1.0 && span->second >= 0.0;
}

std::optional<std::pair<double, double>> segment_box_span(const Vec2& a, const Vec2& b,
                                                          const OrientedBox& box) {
    const double c = std::cos(box.heading);
    const double s = std::sin(box.heading);
    const Vec2 da = a - box.center;
    const Vec2 db = b - box.center;
    const Vec2 la(c * da.x() + s * da.y(), -s * da.x() + c * da.y());
    const Vec2 lb(c * db.x() + s * db.y(), -s * db.x() + c * db.y());
    const Vec2 d = lb - la;
    const double half[2] = {0.5 * box.length, 0.5 * box.width};

    double t0 = -std::numeric_limits<double>::infinity();
    double t1 = std::numeric_limits<double>::infinity();
    for (int axis = 0; axis < 2; ++axis) {
        if (d[axis] == 0.0) {
            if (std::abs(la[axis]) > half[axis]) return std::nullopt;
            continue;
        }
        double ta = (-half[axis] - la[axis]) / d[axis];
        double tb = (half[axis] - la[axis]) / d[axis];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return std::nullopt;
    }
    return std::make_pair(t0, t1);
}

bool ray_first_hit(const Vec2& origin, const Vec2& target,
                   std::span<const OrientedBox> blockers) {
    for (const OrientedBox& box : blockers) {
        const auto span = segment_box_span(origin, target, box);
        if (!span) continue;
        const auto [t0, t1] = *span;
        // t1 >= 1 means the box extends to or past the target, i.e. the box
        // contains the target point; it does not obstruct it.
        if (t0 <= 1.0 && t1 > 0.0 && t1 < 1.0) return true;
    }
    return false;
}

} // namespace roadsim
