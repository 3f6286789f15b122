#include "roadsim/geom.hpp"
#include "roadsim/rng.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace roadsim;

namespace {

OrientedBox random_box(Rng& rng, double span) {
    return OrientedBox(Vec2(rng.uniform(-span, span), rng.uniform(-span, span)),
                       rng.uniform(-kPi, kPi), rng.uniform(0.5, 6.0), rng.uniform(0.5, 3.0));
}

} // namespace

TEST_CASE("segment_intersect: perpendicular crossing") {
    const auto p = segment_intersect({Vec2(0, 0), Vec2(2, 0)}, {Vec2(1, -1), Vec2(1, 1)});
    REQUIRE(p.has_value());
    CHECK(p->x() == doctest::Approx(1.0));
    CHECK(p->y() == doctest::Approx(0.0));
}

TEST_CASE("segment_intersect: disjoint collinear") {
    CHECK_FALSE(segment_intersect({Vec2(0, 0), Vec2(1, 0)}, {Vec2(2, 0), Vec2(3, 0)}).has_value());
}

TEST_CASE("segment_intersect: diagonal cross solves to (1,1)") {
    const auto p = segment_intersect({Vec2(0, 0), Vec2(2, 2)}, {Vec2(0, 2), Vec2(2, 0)});
    REQUIRE(p.has_value());
    CHECK(p->x() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p->y() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("segment_intersect: collinear overlap returns the overlap midpoint") {
    const auto p = segment_intersect({Vec2(0, 0), Vec2(4, 0)}, {Vec2(2, 0), Vec2(6, 0)});
    REQUIRE(p.has_value());
    CHECK(p->x() == doctest::Approx(3.0));
    CHECK(p->y() == doctest::Approx(0.0));
}

TEST_CASE("segment_intersect: degenerate segments behave as points") {
    CHECK(segment_intersect({Vec2(1, 1), Vec2(1, 1)}, {Vec2(0, 0), Vec2(2, 2)}).has_value());
    CHECK(segment_intersect({Vec2(1, 1), Vec2(1, 1)}, {Vec2(1, 1), Vec2(1, 1)}).has_value());
    CHECK_FALSE(segment_intersect({Vec2(1, 2), Vec2(1, 2)}, {Vec2(0, 0), Vec2(2, 0)}).has_value());
}

TEST_CASE("segment_intersect: occupancy is symmetric") {
    Rng rng(7);
    for (int i = 0; i < 2000; ++i) {
        const Segment s1{Vec2(rng.uniform(-10, 10), rng.uniform(-10, 10)),
                         Vec2(rng.uniform(-10, 10), rng.uniform(-10, 10))};
        const Segment s2{Vec2(rng.uniform(-10, 10), rng.uniform(-10, 10)),
                         Vec2(rng.uniform(-10, 10), rng.uniform(-10, 10))};
        CHECK(segment_intersect(s1, s2).has_value() == segment_intersect(s2, s1).has_value());
    }
}

TEST_CASE("min_angle: wraparound, identity, enumeration") {
    CHECK(min_angle(0.1, kTwoPi - 0.1) == doctest::Approx(0.2));
    CHECK(min_angle(1.234, 1.234) == 0.0);
    CHECK(min_angle(3.0, -3.0) == doctest::Approx(kTwoPi - 6.0));
}

TEST_CASE("min_angle: symmetry, shift invariance, range") {
    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        const double a = rng.uniform(-20, 20);
        const double b = rng.uniform(-20, 20);
        const double m = min_angle(a, b);
        CHECK(m == doctest::Approx(min_angle(b, a)));
        CHECK(min_angle(a + kTwoPi, b) == doctest::Approx(m).epsilon(1e-9));
        CHECK(m >= 0.0);
        CHECK(m <= kPi + 1e-15);
    }
}

TEST_CASE("in_cone: examples at the benchmark geometry") {
    const Cone cone{Vec2(0, 0), 0.0, kPi / 3.0, 80.0};
    CHECK(in_cone(Vec2(10, 0), cone));
    CHECK_FALSE(in_cone(Vec2(100, 0), cone));
    CHECK_FALSE(in_cone(Vec2(1, 2), cone)); // atan2(2,1) = 1.1071 > pi/3
}

TEST_CASE("in_cone: half angle pi reduces to a disc") {
    Rng rng(13);
    const Cone cone{Vec2(1, -2), 0.7, kPi, 5.0};
    for (int i = 0; i < 5000; ++i) {
        const Vec2 p(rng.uniform(-8, 10), rng.uniform(-10, 8));
        CHECK(in_cone(p, cone) == ((p - cone.apex).norm() <= cone.radius));
    }
}

TEST_CASE("in_cone: boundary distance is included") {
    const Cone cone{Vec2(0, 0), 0.0, kPi / 3.0, 80.0};
    CHECK(in_cone(Vec2(80.0, 0.0), cone));
    CHECK(in_cone(Vec2(0.0, 0.0), cone));
}

TEST_CASE("box_overlap: identity, gap, rotated touch") {
    const OrientedBox a(Vec2(0, 0), 0.0, 1.0, 1.0);
    CHECK(box_overlap(a, a));
    CHECK_FALSE(box_overlap(a, OrientedBox(Vec2(3, 0), 0.0, 1.0, 1.0)));
    CHECK(box_overlap(OrientedBox(Vec2(0, 0), 0.0, 1.0, 1.0),
                      OrientedBox(Vec2(1.2, 0), kPi / 4.0, 1.0, 1.0)));
}

TEST_CASE("box_overlap: agrees with the brute-force oracle") {
    Rng rng(17);
    int overlaps = 0;
    for (int i = 0; i < 10000; ++i) {
        const OrientedBox a = random_box(rng, 6.0);
        const OrientedBox b = random_box(rng, 6.0);
        const bool got = box_overlap(a, b);
        CHECK(got == oracle::box_overlap_brute(a, b));
        if (got) ++overlaps;
    }
    CHECK(overlaps > 1000); // the sample actually exercises both outcomes
    CHECK(overlaps < 9000);
}

TEST_CASE("ray_first_hit: straddling box blocks, off-path does not") {
    const std::vector<OrientedBox> mid{OrientedBox(Vec2(5, 0), 0.0, 2.0, 2.0)};
    const std::vector<OrientedBox> off{OrientedBox(Vec2(5, 5), 0.0, 2.0, 2.0)};
    CHECK(ray_first_hit(Vec2(0, 0), Vec2(10, 0), mid));
    CHECK_FALSE(ray_first_hit(Vec2(0, 0), Vec2(10, 0), off));
}

TEST_CASE("ray_first_hit: a box around the target does not block it") {
    const std::vector<OrientedBox> at_target{OrientedBox(Vec2(10, 0), 0.0, 2.0, 2.0)};
    CHECK_FALSE(ray_first_hit(Vec2(0, 0), Vec2(10, 0), at_target));
}

TEST_CASE("ray_first_hit: agrees with the edge-test oracle") {
    Rng rng(23);
    for (int i = 0; i < 10000; ++i) {
        const Vec2 eye(rng.uniform(-10, 10), rng.uniform(-10, 10));
        const Vec2 target(rng.uniform(-10, 10), rng.uniform(-10, 10));
        if ((eye - target).norm() < 1e-6) continue;
        const OrientedBox box = random_box(rng, 8.0);
        const std::vector<OrientedBox> blockers{box};
        CHECK(ray_first_hit(eye, target, blockers) == oracle::ray_blocked_brute(eye, target, box));
    }
}

TEST_CASE("norm_angle lands in (-pi, pi]") {
    Rng rng(29);
    for (int i = 0; i < 2000; ++i) {
        const double a = rng.uniform(-50, 50);
        const double n = norm_angle(a);
        CHECK(n > -kPi);
        CHECK(n <= kPi);
        CHECK(std::abs(std::remainder(a - n, kTwoPi)) < 1e-9);
    }
    CHECK(norm_angle(kPi) == doctest::Approx(kPi));
    CHECK(norm_angle(-kPi) == doctest::Approx(kPi));
}
