#include "roadsim/obs.hpp"
#include "roadsim/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace roadsim;

namespace {

ObjectView make_view(int64_t id, const Vec2& pos, double heading, double speed = 0.0,
                     ObjectKind kind = ObjectKind::vehicle) {
    ObjectView v;
    v.id = id;
    v.kind = kind;
    v.box = OrientedBox(pos, heading, 4.5, 2.0);
    v.speed = speed;
    v.velocity = speed * Vec2(std::cos(heading), std::sin(heading));
    return v;
}

struct TestWorld {
    std::vector<ObjectView> objects;
    std::vector<RoadPoint> points;
    std::vector<StopSign> signs;
    Bvh bvh;
    RangeTree point_tree;
    RangeTree sign_tree;

    void finalize() {
        std::vector<Vec2> pp, sp;
        for (const RoadPoint& p : points) pp.push_back(p.pos);
        for (const StopSign& s : signs) sp.push_back(s.pos);
        bvh = build_object_bvh(objects);
        point_tree = RangeTree::build(pp);
        sign_tree = RangeTree::build(sp);
    }
    WorldView view() const {
        WorldView w;
        w.objects = objects;
        w.object_bvh = &bvh;
        w.road_points = &points;
        w.point_tree = &point_tree;
        w.stop_signs = &signs;
        w.stop_sign_tree = &sign_tree;
        return w;
    }
};

/// Rotates then shifts every world element; features in the ego frame must
/// not change.
TestWorld transformed(const TestWorld& tw, double angle, const Vec2& shift) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const auto rot = [&](const Vec2& p) { return Vec2(c * p.x() - s * p.y(), s * p.x() + c * p.y()); };
    TestWorld out = tw;
    for (ObjectView& o : out.objects) {
        o.box = OrientedBox(rot(o.box.center) + shift, o.box.heading + angle, o.box.length,
                            o.box.width);
        o.velocity = rot(o.velocity);
    }
    for (RoadPoint& p : out.points) {
        p.pos = rot(p.pos) + shift;
        p.neighbor = rot(p.neighbor);
    }
    for (StopSign& g : out.signs) g.pos = rot(g.pos) + shift;
    out.finalize();
    return out;
}

Goal transformed_goal(const Goal& g, double angle, const Vec2& shift) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return Goal{Vec2(c * g.position.x() - s * g.position.y(),
                     s * g.position.x() + c * g.position.y()) +
                    shift,
                g.speed, norm_angle(g.heading + angle)};
}

} // namespace

TEST_CASE("ego_features: at the goal with matching speed and heading") {
    const ObjectView ego = make_view(1, Vec2(3, 4), 0.7, 6.0);
    const Goal goal{Vec2(3, 4), 6.0, 0.7};
    const auto f = ego_features(ego, goal);
    CHECK(f(0) == 6.0);
    CHECK(f(1) == 0.0);
    CHECK(f(2) == 0.0);
    CHECK(f(3) == 2.0);
    CHECK(f(4) == 4.5);
    CHECK(f(5) == 0.0);
    CHECK(f(6) == 0.0);
}

TEST_CASE("ego_features: goal 10 m due left reads +pi/2") {
    const ObjectView ego = make_view(1, Vec2(0, 0), 0.0, 5.0);
    const Goal goal{Vec2(0, 10), 5.0, 0.0};
    const auto f = ego_features(ego, goal);
    CHECK(f(1) == doctest::Approx(10.0));
    CHECK(f(2) == doctest::Approx(kPi / 2.0));
}

TEST_CASE("object_features: co-located aligned vehicle zeroes the relative block") {
    const ObjectView ego = make_view(1, Vec2(5, 5), 0.3, 4.0);
    const ObjectView other = make_view(2, Vec2(5, 5), 0.3, 4.0);
    const auto f = object_features(ego, other);
    CHECK(f(0) == 4.0);
    CHECK(f(1) == 0.0);
    CHECK(f(2) == 2.0);
    CHECK(f(3) == 4.5);
    CHECK(f(4) == 0.0);
    CHECK(f(5) == 0.0);
    CHECK(f(6) == 0.0);
    CHECK(f(7) == 1.0);
    CHECK(f(8) == 0.0);
    CHECK(f(9) == 0.0);
}

TEST_CASE("object_features: oncoming car shows a velocity-angle gap of pi") {
    const ObjectView ego = make_view(1, Vec2(0, 0), 0.0, 10.0);
    const ObjectView other = make_view(2, Vec2(30, 0), kPi, 10.0);
    const auto f = object_features(ego, other);
    CHECK(std::abs(f(1)) == doctest::Approx(kPi));
}

TEST_CASE("road_point_features: straight lane point 5 m ahead") {
    const ObjectView ego = make_view(1, Vec2(0, 0), 0.0, 3.0);
    RoadPoint p;
    p.pos = Vec2(5, 0);
    p.neighbor = Vec2(0.5, 0);
    p.kind = RoadKind::lane_center;
    const auto f = road_point_features(ego, p);
    CHECK(f(0) == 0.0);
    CHECK(f(1) == doctest::Approx(5.0));
    CHECK(f(2) == doctest::Approx(0.5));
    CHECK(f(3) == doctest::Approx(0.0));
    CHECK(f(4) == 1.0); // lane_center flag
    double one_hot_sum = 0.0;
    for (int k = 4; k < 11; ++k) one_hot_sum += f(k);
    CHECK(one_hot_sum == 1.0);
}

TEST_CASE("road_point_features: terminal point has a zero neighbor vector") {
    const ObjectView ego = make_view(1, Vec2(0, 0), 1.1, 3.0);
    RoadPoint p;
    p.pos = Vec2(5, 2);
    p.neighbor = Vec2(0, 0);
    p.kind = RoadKind::road_edge;
    const auto f = road_point_features(ego, p);
    CHECK(f(2) == 0.0);
    CHECK(f(3) == 0.0);
    CHECK(f(6) == 1.0); // road_edge flag
}

TEST_CASE("road_point_features: exactly one kind flag per kind") {
    const ObjectView ego = make_view(1, Vec2(0, 0), 0.0, 0.0);
    for (int k = 0; k < kRoadKindCount; ++k) {
        RoadPoint p;
        p.pos = Vec2(1, 1);
        p.kind = static_cast<RoadKind>(k);
        const auto f = road_point_features(ego, p);
        for (int j = 0; j < kRoadKindCount; ++j) {
            CHECK(f(4 + j) == (j == k ? 1.0 : 0.0));
        }
    }
}

TEST_CASE("build_observation: empty scene is the ego block plus zeros") {
    TestWorld tw;
    tw.objects.push_back(make_view(1, Vec2(0, 0), 0.0, 5.0));
    tw.finalize();
    const ObsLayout layout;
    const Observation obs = build_observation(tw.view(), 0, Goal{Vec2(40, 0), 5.0, 0.0}, 0.0,
                                              layout, ViewConfig{});
    CHECK(obs.features.size() == 5675);
    CHECK(obs.slot_valid.size() == 521);
    CHECK(obs.slot_valid[0] == 1);
    for (std::size_t i = 1; i < obs.slot_valid.size(); ++i) CHECK(obs.slot_valid[i] == 0);
    for (int i = ObsLayout::kEgoDim; i < obs.features.size(); ++i) CHECK(obs.features(i) == 0.0f);
    CHECK(obs.features(0) == 5.0f);
}

TEST_CASE("build_observation: keeps only the nearest road points") {
    TestWorld tw;
    tw.objects.push_back(make_view(1, Vec2(0, 0), 0.0, 5.0));
    for (int i = 0; i < 600; ++i) {
        RoadPoint p;
        p.pos = Vec2(1.0 + 0.1 * i, 0.0);
        p.kind = RoadKind::lane_center;
        tw.points.push_back(p);
    }
    tw.finalize();
    ObsLayout layout;
    const Observation obs = build_observation(tw.view(), 0, Goal{Vec2(40, 0), 5.0, 0.0}, 0.0,
                                              layout, ViewConfig{});
    int filled = 0;
    for (int i = 0; i < layout.max_road_points; ++i) {
        if (obs.slot_valid[static_cast<std::size_t>(1 + layout.max_objects + i)]) ++filled;
    }
    CHECK(filled == 500);
    // The farthest included distance is the 500th nearest, i.e. 1.0 + 0.1*499.
    const int base = ObsLayout::kEgoDim + layout.max_objects * ObsLayout::kObjectDim;
    float max_dist = 0.0f;
    for (int i = 0; i < layout.max_road_points; ++i) {
        max_dist = std::max(max_dist, obs.features(base + i * ObsLayout::kRoadPointDim + 1));
    }
    CHECK(max_dist == doctest::Approx(1.0 + 0.1 * 499).epsilon(1e-6));
}

TEST_CASE("build_observation: equidistant objects break ties by id") {
    TestWorld tw;
    tw.objects.push_back(make_view(5, Vec2(0, 0), 0.0, 5.0));
    tw.objects.push_back(make_view(9, Vec2(10, 5), 0.0));  // same distance
    tw.objects.push_back(make_view(3, Vec2(10, -5), 0.0)); // same distance
    tw.finalize();
    const ObsLayout layout;
    const Observation obs = build_observation(tw.view(), 0, Goal{Vec2(40, 0), 5.0, 0.0}, 0.0,
                                              layout, ViewConfig{});
    // Slot 0 of the object block must be the lower id (3), which sits right
    // of the heading: negative bearing.
    CHECK(obs.features(ObsLayout::kEgoDim + 4) < 0.0f);
}

TEST_CASE("build_observation: hidden objects leave no trace") {
    TestWorld tw;
    tw.objects.push_back(make_view(1, Vec2(0, 0), 0.0, 5.0));
    ObjectView truck = make_view(2, Vec2(6, 0), kPi / 2.0);
    truck.box = OrientedBox(Vec2(6, 0), kPi / 2.0, 8.0, 3.0);
    tw.objects.push_back(truck);
    tw.objects.push_back(make_view(3, Vec2(12, 0), 0.0)); // occluded
    tw.finalize();
    const ObsLayout layout;
    const Observation obs = build_observation(tw.view(), 0, Goal{Vec2(40, 0), 5.0, 0.0}, 0.0,
                                              layout, ViewConfig{});
    int filled = 0;
    for (int i = 0; i < layout.max_objects; ++i) {
        if (obs.slot_valid[static_cast<std::size_t>(1 + i)]) ++filled;
    }
    CHECK(filled == 1);
}

TEST_CASE("observation features are invariant under rigid world transforms") {
    Rng rng(91);
    for (int round = 0; round < 20; ++round) {
        TestWorld tw;
        tw.objects.push_back(
            make_view(1, Vec2(rng.uniform(-5, 5), rng.uniform(-5, 5)), rng.uniform(-kPi, kPi),
                      rng.uniform(0, 10)));
        for (int i = 0; i < 6; ++i) {
            tw.objects.push_back(make_view(2 + i,
                                           Vec2(rng.uniform(-30, 30), rng.uniform(-30, 30)),
                                           rng.uniform(-kPi, kPi), rng.uniform(0, 10)));
        }
        for (int i = 0; i < 200; ++i) {
            RoadPoint p;
            p.pos = Vec2(rng.uniform(-60, 60), rng.uniform(-60, 60));
            p.neighbor = Vec2(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
            p.kind = static_cast<RoadKind>(rng.next_below(7));
            tw.points.push_back(p);
        }
        tw.signs.push_back(StopSign{Vec2(rng.uniform(-40, 40), rng.uniform(-40, 40)), 0});
        tw.finalize();

        const Goal goal{Vec2(rng.uniform(-50, 50), rng.uniform(-50, 50)), rng.uniform(0, 10),
                        rng.uniform(-kPi, kPi)};
        const double angle = rng.uniform(-kPi, kPi);
        const Vec2 shift(rng.uniform(-100, 100), rng.uniform(-100, 100));
        const TestWorld tw2 = transformed(tw, angle, shift);
        const Goal goal2 = transformed_goal(goal, angle, shift);

        const ObsLayout layout;
        const Observation a =
            build_observation(tw.view(), 0, goal, 0.3, layout, ViewConfig{});
        const Observation b =
            build_observation(tw2.view(), 0, goal2, 0.3, layout, ViewConfig{});
        REQUIRE(a.slot_valid == b.slot_valid);
        for (int i = 0; i < a.features.size(); ++i) {
            CHECK(a.features(i) == doctest::Approx(b.features(i)).epsilon(2e-4));
        }
    }
}

TEST_CASE("rasterize: empty scene draws background plus the ego") {
    TestWorld tw;
    tw.objects.push_back(make_view(1, Vec2(0, 0), 0.0, 5.0));
    tw.finalize();
    RasterConfig rc;
    rc.px = 200;
    rc.cone_only = false;
    const Image img = rasterize(tw.view(), 0, rc);
    int non_bg = 0;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (img.get(x, y) != Color{24, 24, 24}) ++non_bg;
        }
    }
    // Ego box only: 4.5 x 2.0 m at 0.32 m/px is roughly 14 x 6 px.
    CHECK(non_bg > 40);
    CHECK(non_bg < 200);
}

TEST_CASE("rasterize: a straight road edge draws one horizontal line") {
    TestWorld tw;
    tw.objects.push_back(make_view(1, Vec2(0, 0), 0.0, 5.0));
    // Edge crossing the heading at +8 m ahead, i.e. a horizontal line in the
    // ego-up image, made of 0.5 m segments.
    RoadLine line;
    for (double y = -16.0; y <= 16.0; y += 0.5) {
        RoadPoint p;
        p.pos = Vec2(8.0, y);
        p.neighbor = y + 0.5 <= 16.0 ? Vec2(0.0, 0.5) : Vec2(0.0, 0.0);
        p.kind = RoadKind::road_edge;
        tw.points.push_back(p);
    }
    tw.finalize();
    RasterConfig rc;
    rc.px = 200;
    rc.meters_per_px = 0.5;
    rc.cone_only = false;
    const Image img = rasterize(tw.view(), 0, rc);

    const Color edge{230, 60, 60};
    int edge_pixels = 0;
    int rows_with_edge = 0;
    for (int y = 0; y < img.height; ++y) {
        bool row_has = false;
        for (int x = 0; x < img.width; ++x) {
            if (img.get(x, y) == edge) {
                ++edge_pixels;
                row_has = true;
            }
        }
        if (row_has) ++rows_with_edge;
    }
    // 32 m of line at 0.5 m/px covers 65 columns on a single row.
    CHECK(rows_with_edge == 1);
    CHECK(edge_pixels == 65);
}

TEST_CASE("rasterize: identical inputs give identical bytes") {
    TestWorld tw;
    tw.objects.push_back(make_view(1, Vec2(0, 0), 0.4, 5.0));
    tw.objects.push_back(make_view(2, Vec2(12, 3), -0.2, 3.0));
    tw.finalize();
    RasterConfig rc;
    rc.px = 128;
    const Image a = rasterize(tw.view(), 0, rc);
    const Image b = rasterize(tw.view(), 0, rc);
    CHECK(encode_png(a) == encode_png(b));
}

TEST_CASE("rasterize: rotating the whole world with the ego leaves pixels unchanged") {
    Rng rng(97);
    TestWorld tw;
    tw.objects.push_back(make_view(1, Vec2(0.37, -0.21), 0.31, 5.0));
    tw.objects.push_back(make_view(2, Vec2(11.3, 2.9), 1.2, 3.0));
    for (int i = 0; i < 100; ++i) {
        RoadPoint p;
        p.pos = Vec2(rng.uniform(-30, 30), rng.uniform(-30, 30));
        p.neighbor = Vec2(0.5, 0.0);
        p.kind = RoadKind::lane_center;
        tw.points.push_back(p);
    }
    tw.finalize();
    const TestWorld tw2 = transformed(tw, 0.83, Vec2(41.7, -12.9));

    RasterConfig rc;
    rc.px = 160;
    rc.cone_only = false;
    const Image a = rasterize(tw.view(), 0, rc);
    const Image b = rasterize(tw2.view(), 0, rc);
    CHECK(a.rgb == b.rgb);
}

TEST_CASE("rasterize: zero resolution is a config error") {
    TestWorld tw;
    tw.objects.push_back(make_view(1, Vec2(0, 0), 0.0, 5.0));
    tw.finalize();
    RasterConfig rc;
    rc.px = 0;
    CHECK_THROWS_AS(rasterize(tw.view(), 0, rc), std::invalid_argument);
}
