#include "roadsim/visibility.hpp"

#include <algorithm>
#include <cmath>

namespace roadsim {

namespace {

/// Per-blocker data for the sight tests of one viewer. The wedge bounds the
/// directions under which the box is seen from the eye; a target whose
/// direction falls outside it cannot be occluded by the box. Both the wedge
/// and the near distance are padded conservatively so pruning never drops a
/// true occlusion.
struct BlockerRec {
    int32_t index = -1;
    const OrientedBox* box = nullptr;
    double near_dist2 = 0.0;
    Vec2 wedge_lo{1.0, 0.0};
    Vec2 wedge_hi{1.0, 0.0};
    bool whole_circle = false;
};

constexpr double kWedgePad = 1e-9;

double aabb_dist2(const AABB& box, const Vec2& p) {
    const Vec2 clamped = p.cwiseMax(box.min()).cwiseMin(box.max());
    return (p - clamped).squaredNorm();
}

BlockerRec make_blocker(int32_t index, const OrientedBox& box, const Vec2& eye) {
    BlockerRec rec;
    rec.index = index;
    rec.box = &box;
    rec.near_dist2 = aabb_dist2(box.aabb(), eye) * (1.0 - 1e-9);
    if (box.contains(eye)) {
        rec.whole_circle = true;
        return rec;
    }
    const Vec2 axis = box.center - eye;
    const double axis_angle = std::atan2(axis.y(), axis.x());
    double lo = 0.0, hi = 0.0;
    for (const Vec2& c : box.corners()) {
        const Vec2 d = c - eye;
        const double rel = norm_angle(std::atan2(d.y(), d.x()) - axis_angle);
        if (std::abs(rel) >= 0.5 * kPi) {
            // Eye close enough that the box subtends a wide angle; skip the
            // wedge prune for this blocker.
            rec.whole_circle = true;
            return rec;
        }
        lo = std::min(lo, rel);
        hi = std::max(hi, rel);
    }
    lo -= kWedgePad;
    hi += kWedgePad;
    rec.wedge_lo = Vec2(std::cos(axis_angle + lo), std::sin(axis_angle + lo));
    rec.wedge_hi = Vec2(std::cos(axis_angle + hi), std::sin(axis_angle + hi));
    return rec;
}

bool blocked(const Vec2& eye, const Vec2& target, std::span<const BlockerRec> blockers,
             int32_t skip_index) {
    const Vec2 dir = target - eye;
    const double target_d2 = dir.squaredNorm();
    for (const BlockerRec& rec : blockers) {
        if (rec.index == skip_index) continue;
        if (target_d2 <= rec.near_dist2) continue;
        if (!rec.whole_circle &&
            (cross2(rec.wedge_lo, dir) < 0.0 || cross2(rec.wedge_hi, dir) > 0.0)) {
            continue;
        }
        const auto span = segment_box_span(eye, target, *rec.box);
        if (!span) continue;
        const auto [t0, t1] = *span;
        if (t0 <= 1.0 && t1 > 0.0 && t1 < 1.0) return true;
    }
    return false;
}

std::vector<BlockerRec> make_blockers(const WorldView& w, int32_t ego_index, const Vec2& eye) {
    std::vector<BlockerRec> recs;
    recs.reserve(w.objects.size());
    for (std::size_t i = 0; i < w.objects.size(); ++i) {
        const auto idx = static_cast<int32_t>(i);
        if (idx == ego_index) continue;
        recs.push_back(make_blocker(idx, w.objects[i].box, eye));
    }
    return recs;
}

void collect_objects(const WorldView& w, int32_t ego_index, const Cone& cone, const AABB& cone_box,
                     std::span<const BlockerRec> blockers, const ViewConfig& cfg,
                     std::vector<int32_t>& out) {
    if (w.object_bvh == nullptr) return;
    std::vector<int32_t> candidates = w.object_bvh->query(cone_box);
    std::sort(candidates.begin(), candidates.end());
    const Vec2 eye = cone.apex;
    for (const int32_t c : candidates) {
        if (c == ego_index) continue;
        const OrientedBox& box = w.objects[static_cast<std::size_t>(c)].box;
        Vec2 samples[5] = {box.center};
        int n_samples = 1;
        if (cfg.samples_per_object >= 5) {
            const auto corners = box.corners();
            for (const Vec2& p : corners) samples[n_samples++] = p;
        }
        for (int k = 0; k < n_samples; ++k) {
            if (!in_cone(samples[k], cone)) continue;
            if (!blocked(eye, samples[k], blockers, c)) {
                out.push_back(c);
                break;
            }
        }
    }
}

void collect_road_points(const WorldView& w, const Cone& cone, const AABB& cone_box,
                         std::span<const BlockerRec> blockers, std::vector<int32_t>& out) {
    if (w.point_tree == nullptr || w.road_points == nullptr) return;
    std::vector<int32_t> candidates = w.point_tree->query(cone_box);
    std::sort(candidates.begin(), candidates.end());
    for (const int32_t c : candidates) {
        const Vec2& p = (*w.road_points)[static_cast<std::size_t>(c)].pos;
        if (!in_cone(p, cone)) continue;
        if (!blocked(cone.apex, p, blockers, -1)) out.push_back(c);
    }
}

void collect_stop_signs(const WorldView& w, const Cone& cone, const AABB& cone_box,
                        std::vector<int32_t>& out) {
    if (w.stop_sign_tree == nullptr || w.stop_signs == nullptr) return;
    std::vector<int32_t> candidates = w.stop_sign_tree->query(cone_box);
    std::sort(candidates.begin(), candidates.end());
    for (const int32_t c : candidates) {
        if (in_cone((*w.stop_signs)[static_cast<std::size_t>(c)].pos, cone)) out.push_back(c);
    }
}

} // namespace

Bvh build_object_bvh(std::span<const ObjectView> objects) {
    std::vector<AABB> boxes;
    boxes.reserve(objects.size());
    for (const ObjectView& o : objects) boxes.push_back(o.box.aabb());
    return Bvh::build(boxes);
}

Cone view_cone(const Vec2& apex, double heading, double tilt, const ViewConfig& cfg) {
    return Cone{apex, norm_angle(heading + tilt), 0.5 * cfg.view_angle, cfg.view_distance};
}

VisibleSet visible_set_from(const ObjectView& ego, int32_t ego_index, const WorldView& w,
                            double tilt, const ViewConfig& cfg) {
    VisibleSet out;
    const Vec2 eye = ego.box.center;
    const Cone cone = view_cone(eye, ego.box.heading, tilt, cfg);
    const AABB cone_box = cone.aabb();
    const std::vector<BlockerRec> blockers = make_blockers(w, ego_index, eye);
    collect_objects(w, ego_index, cone, cone_box, blockers, cfg, out.objects);
    collect_road_points(w, cone, cone_box, blockers, out.road_points);
    collect_stop_signs(w, cone, cone_box, out.stop_signs);
    return out;
}

VisibleSet visible_set(const WorldView& w, int32_t ego_index, double tilt, const ViewConfig& cfg) {
    return visible_set_from(w.objects[static_cast<std::size_t>(ego_index)], ego_index, w, tilt,
                            cfg);
}

std::vector<int32_t> visible_objects(const WorldView& w, int32_t ego_index, double tilt,
                                     const ViewConfig& cfg) {
    const ObjectView& ego = w.objects[static_cast<std::size_t>(ego_index)];
    const Cone cone = view_cone(ego.box.center, ego.box.heading, tilt, cfg);
    const std::vector<BlockerRec> blockers = make_blockers(w, ego_index, ego.box.center);
    std::vector<int32_t> out;
    collect_objects(w, ego_index, cone, cone.aabb(), blockers, cfg, out);
    return out;
}

std::vector<int32_t> visible_road_points(const WorldView& w, int32_t ego_index, double tilt,
                                         const ViewConfig& cfg) {
    const ObjectView& ego = w.objects[static_cast<std::size_t>(ego_index)];
    const Cone cone = view_cone(ego.box.center, ego.box.heading, tilt, cfg);
    const std::vector<BlockerRec> blockers = make_blockers(w, ego_index, ego.box.center);
    std::vector<int32_t> out;
    collect_road_points(w, cone, cone.aabb(), blockers, out);
    return out;
}

std::vector<int32_t> visible_stop_signs(const WorldView& w, int32_t ego_index, double tilt,
                                        const ViewConfig& cfg) {
    const ObjectView& ego = w.objects[static_cast<std::size_t>(ego_index)];
    const Cone cone = view_cone(ego.box.center, ego.box.heading, tilt, cfg);
    std::vector<int32_t> out;
    collect_stop_signs(w, cone, cone.aabb(), out);
    return out;
}

} // namespace roadsim
