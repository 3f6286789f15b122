#include "roadsim/obs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace roadsim {

namespace {

/// Bearing of `p` as seen from the ego pose, zero straight ahead, in
/// (-pi, pi]. Coincident points read as zero.
double bearing_from(const ObjectView& ego, const Vec2& p) {
    const Vec2 d = p - ego.box.center;
    if (d.squaredNorm() == 0.0) return 0.0;
    return norm_angle(std::atan2(d.y(), d.x()) - ego.box.heading);
}

/// Direction of a velocity vector; a stopped object inherits its heading.
double velocity_angle(const ObjectView& o) {
    if (o.velocity.squaredNorm() < 1e-18) return o.box.heading;
    return std::atan2(o.velocity.y(), o.velocity.x());
}

Vec2 to_ego_frame(const ObjectView& ego, const Vec2& v) {
    const double c = std::cos(ego.box.heading);
    const double s = std::sin(ego.box.heading);
    return Vec2(c * v.x() + s * v.y(), -s * v.x() + c * v.y());
}

} // namespace

Eigen::Matrix<double, 7, 1> ego_features(const ObjectView& ego, const Goal& goal) {
    Eigen::Matrix<double, 7, 1> f;
    f(0) = ego.speed;
    f(1) = (goal.position - ego.box.center).norm();
    f(2) = bearing_from(ego, goal.position);
    f(3) = ego.box.width;
    f(4) = ego.box.length;
    f(5) = goal.speed - ego.speed;
    f(6) = signed_angle_diff(ego.box.heading, goal.heading);
    return f;
}

Eigen::Matrix<double, 10, 1> object_features(const ObjectView& ego, const ObjectView& other) {
    Eigen::Matrix<double, 10, 1> f;
    f(0) = other.speed;
    f(1) = norm_angle(velocity_angle(other) - velocity_angle(ego));
    f(2) = other.box.width;
    f(3) = other.box.length;
    f(4) = bearing_from(ego, other.box.center);
    f(5) = (other.box.center - ego.box.center).norm();
    f(6) = signed_angle_diff(ego.box.heading, other.box.heading);
    f(7) = other.kind == ObjectKind::vehicle ? 1.0 : 0.0;
    f(8) = other.kind == ObjectKind::pedestrian ? 1.0 : 0.0;
    f(9) = other.kind == ObjectKind::cyclist ? 1.0 : 0.0;
    return f;
}

Eigen::Matrix<double, 11, 1> road_point_features(const ObjectView& ego, const RoadPoint& point) {
    Eigen::Matrix<double, 11, 1> f;
    f(0) = bearing_from(ego, point.pos);
    f(1) = (point.pos - ego.box.center).norm();
    const Vec2 n = to_ego_frame(ego, point.neighbor);
    f(2) = n.x();
    f(3) = n.y();
    for (int k = 0; k < kRoadKindCount; ++k) {
        f(4 + k) = static_cast<int>(point.kind) == k ? 1.0 : 0.0;
    }
    return f;
}

Eigen::Matrix<double, 2, 1> stop_sign_features(const ObjectView& ego, const StopSign& sign) {
    Eigen::Matrix<double, 2, 1> f;
    f(0) = bearing_from(ego, sign.pos);
    f(1) = (sign.pos - ego.box.center).norm();
    return f;
}

namespace {

/// Sorts ids by ascending squared distance from the eye, ties by the given
/// id key, and truncates to the layout maximum.
template <typename DistFn, typename KeyFn>
void order_and_trim(std::vector<int32_t>& ids, int max_count, DistFn&& dist2, KeyFn&& key) {
    std::sort(ids.begin(), ids.end(), [&](int32_t a, int32_t b) {
        const double da = dist2(a);
        const double db = dist2(b);
        if (da != db) return da < db;
        return key(a) < key(b);
    });
    if (static_cast<int>(ids.size()) > max_count) {
        ids.resize(static_cast<std::size_t>(max_count));
    }
}

} // namespace

Observation build_observation_from(const ObjectView& ego, int32_t ego_index, const WorldView& w,
                                   const Goal& goal, double tilt, const ObsLayout& layout,
                                   const ViewConfig& cfg) {
    VisibleSet vis = visible_set_from(ego, ego_index, w, tilt, cfg);
    const Vec2 eye = ego.box.center;

    order_and_trim(
        vis.objects, layout.max_objects,
        [&](int32_t i) { return (w.objects[static_cast<std::size_t>(i)].box.center - eye).squaredNorm(); },
        [&](int32_t i) { return w.objects[static_cast<std::size_t>(i)].id; });
    order_and_trim(
        vis.road_points, layout.max_road_points,
        [&](int32_t i) { return ((*w.road_points)[static_cast<std::size_t>(i)].pos - eye).squaredNorm(); },
        [](int32_t i) { return i; });
    order_and_trim(
        vis.stop_signs, layout.max_stop_signs,
        [&](int32_t i) { return ((*w.stop_signs)[static_cast<std::size_t>(i)].pos - eye).squaredNorm(); },
        [](int32_t i) { return i; });

    Observation obs;
    obs.features = Eigen::VectorXf::Zero(layout.dim());
    obs.slot_valid.assign(static_cast<std::size_t>(layout.slots()), 0);

    int offset = 0;
    int slot = 0;
    obs.features.segment(offset, ObsLayout::kEgoDim) = ego_features(ego, goal).cast<float>();
    offset += ObsLayout::kEgoDim;
    obs.slot_valid[static_cast<std::size_t>(slot++)] = 1;

    for (int i = 0; i < layout.max_objects; ++i, ++slot) {
        if (i < static_cast<int>(vis.objects.size())) {
            const ObjectView& other =
                w.objects[static_cast<std::size_t>(vis.objects[static_cast<std::size_t>(i)])];
            obs.features.segment(offset, ObsLayout::kObjectDim) =
                object_features(ego, other).cast<float>();
            obs.slot_valid[static_cast<std::size_t>(slot)] = 1;
        }
        offset += ObsLayout::kObjectDim;
    }
    for (int i = 0; i < layout.max_road_points; ++i, ++slot) {
        if (i < static_cast<int>(vis.road_points.size())) {
            const RoadPoint& p =
                (*w.road_points)[static_cast<std::size_t>(vis.road_points[static_cast<std::size_t>(i)])];
            obs.features.segment(offset, ObsLayout::kRoadPointDim) =
                road_point_features(ego, p).cast<float>();
            obs.slot_valid[static_cast<std::size_t>(slot)] = 1;
        }
        offset += ObsLayout::kRoadPointDim;
    }
    for (int i = 0; i < layout.max_stop_signs; ++i, ++slot) {
        if (i < static_cast<int>(vis.stop_signs.size())) {
            const StopSign& ss =
                (*w.stop_signs)[static_cast<std::size_t>(vis.stop_signs[static_cast<std::size_t>(i)])];
            obs.features.segment(offset, ObsLayout::kStopSignDim) =
                stop_sign_features(ego, ss).cast<float>();
            obs.slot_valid[static_cast<std::size_t>(slot)] = 1;
        }
        offset += ObsLayout::kStopSignDim;
    }
    return obs;
}

Observation build_observation(const WorldView& w, int32_t ego_index, const Goal& goal,
                              double tilt, const ObsLayout& layout, const ViewConfig& cfg) {
    return build_observation_from(w.objects[static_cast<std::size_t>(ego_index)], ego_index, w,
                                  goal, tilt, layout, cfg);
}

namespace {

constexpr Color kBackground{24, 24, 24};
constexpr Color kEgoColor{255, 220, 40};
constexpr Color kObjectColor{70, 140, 255};
constexpr Color kVruColor{255, 120, 200};

Color road_color(RoadKind k) {
    switch (k) {
        case RoadKind::lane_center: return {110, 110, 110};
        case RoadKind::road_line: return {200, 200, 200};
        case RoadKind::road_edge: return {230, 60, 60};
        case RoadKind::stop_sign: return {240, 40, 40};
        case RoadKind::crosswalk: return {90, 200, 120};
        case RoadKind::speed_bump: return {220, 180, 60};
        case RoadKind::unknown: return {150, 150, 90};
    }
    return {150, 150, 90};
}

struct Framing {
    Vec2 eye;
    double cos_h;
    double sin_h;
    double center;
    double mpp;

    // Forward maps up, left maps left.
    std::pair<int, int> to_pixel(const Vec2& p) const {
        const Vec2 d = p - eye;
        const double lx = cos_h * d.x() + sin_h * d.y();
        const double ly = -sin_h * d.x() + cos_h * d.y();
        const int col = static_cast<int>(std::floor(center - ly / mpp));
        const int row = static_cast<int>(std::floor(center - lx / mpp));
        return {col, row};
    }
};

void fill_object(Image& img, const Framing& f, const OrientedBox& box, Color c) {
    std::array<std::pair<int, int>, 4> px;
    const auto corners = box.corners();
    for (int i = 0; i < 4; ++i) px[static_cast<std::size_t>(i)] = f.to_pixel(corners[static_cast<std::size_t>(i)]);
    int lo_x = px[0].first, hi_x = px[0].first, lo_y = px[0].second, hi_y = px[0].second;
    for (const auto& [x, y] : px) {
        lo_x = std::min(lo_x, x);
        hi_x = std::max(hi_x, x);
        lo_y = std::min(lo_y, y);
        hi_y = std::max(hi_y, y);
    }
    for (int y = lo_y; y <= hi_y; ++y) {
        for (int x = lo_x; x <= hi_x; ++x) {
            if (!img.in_bounds(x, y)) continue;
            // Point-in-convex-quad on the pixel center; the quad winding
            // depends on the frame, so require a consistent sign.
            const double cx = x + 0.5;
            const double cy = y + 0.5;
            bool any_pos = false;
            bool any_neg = false;
            for (int i = 0; i < 4; ++i) {
                const auto& a = px[static_cast<std::size_t>(i)];
                const auto& b = px[static_cast<std::size_t>((i + 1) % 4)];
                const double cross = (b.first - a.first) * (cy - a.second) -
                                     (b.second - a.second) * (cx - a.first);
                if (cross > 0.0) any_pos = true;
                if (cross < 0.0) any_neg = true;
            }
            if (!(any_pos && any_neg)) img.set(x, y, c);
        }
    }
}

void draw_point_segment(Image& img, const Framing& f, const RoadPoint& p) {
    const auto [x0, y0] = f.to_pixel(p.pos);
    const auto [x1, y1] = f.to_pixel(p.pos + p.neighbor);
    draw_segment(img, x0, y0, x1, y1, road_color(p.kind));
}

void draw_sign(Image& img, const Framing& f, const StopSign& s) {
    const auto [x, y] = f.to_pixel(s.pos);
    for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) img.set(x + dx, y + dy, road_color(RoadKind::stop_sign));
    }
}

} // namespace

Image rasterize(const WorldView& w, int32_t ego_index, const RasterConfig& cfg) {
    if (cfg.px <= 0) throw std::invalid_argument("rasterize: resolution must be positive");
    if (!(cfg.meters_per_px > 0.0)) {
        throw std::invalid_argument("rasterize: meters_per_px must be positive");
    }
    const ObjectView& ego = w.objects[static_cast<std::size_t>(ego_index)];
    Image img(cfg.px, cfg.px, kBackground);
    const Framing frame{ego.box.center, std::cos(ego.box.heading), std::sin(ego.box.heading),
                        0.5 * cfg.px, cfg.meters_per_px};

    if (cfg.cone_only) {
        const VisibleSet vis = visible_set(w, ego_index, cfg.tilt, cfg.view);
        for (const int32_t i : vis.road_points) {
            draw_point_segment(img, frame, (*w.road_points)[static_cast<std::size_t>(i)]);
        }
        for (const int32_t i : vis.stop_signs) {
            draw_sign(img, frame, (*w.stop_signs)[static_cast<std::size_t>(i)]);
        }
        for (const int32_t i : vis.objects) {
            const ObjectView& o = w.objects[static_cast<std::size_t>(i)];
            fill_object(img, frame, o.box, o.kind == ObjectKind::vehicle ? kObjectColor : kVruColor);
        }
    } else {
        if (w.road_points != nullptr) {
            for (const RoadPoint& p : *w.road_points) draw_point_segment(img, frame, p);
        }
        if (w.stop_signs != nullptr) {
            for (const StopSign& s : *w.stop_signs) draw_sign(img, frame, s);
        }
        for (std::size_t i = 0; i < w.objects.size(); ++i) {
            if (static_cast<int32_t>(i) == ego_index) continue;
            const ObjectView& o = w.objects[i];
            fill_object(img, frame, o.box, o.kind == ObjectKind::vehicle ? kObjectColor : kVruColor);
        }
    }
    fill_object(img, frame, ego.box, kEgoColor);
    return img;
}

} // namespace roadsim
