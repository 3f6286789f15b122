#pragma once

#include "roadsim/geom.hpp"
#include "roadsim/scenario.hpp"
#include "roadsim/spatial.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace roadsim {

/// View-cone parameters. The benchmark preset fixes a 120 degree cone with an
/// 80 meter radius.
struct ViewConfig {
    double view_angle = 2.0943951023931953; // 120 degrees
    double view_distance = 80.0;
    int samples_per_object = 5; // center plus the four corners
};

/// One road object as seen in a frozen step snapshot.
struct ObjectView {
    int64_t id = 0;
    ObjectKind kind = ObjectKind::vehicle;
    OrientedBox box;
    Vec2 velocity{0.0, 0.0};
    double speed = 0.0;
};

/// Read-only view over one simulation step: the present objects, an AABB
/// index over them, and the static map indexes. Everything is borrowed.
struct WorldView {
    std::span<const ObjectView> objects;
    const Bvh* object_bvh = nullptr;
    const std::vector<RoadPoint>* road_points = nullptr;
    const RangeTree* point_tree = nullptr;
    const std::vector<StopSign>* stop_signs = nullptr;
    const RangeTree* stop_sign_tree = nullptr;
};

Bvh build_object_bvh(std::span<const ObjectView> objects);

struct VisibleSet {
    std::vector<int32_t> objects;     // indices into WorldView::objects
    std::vector<int32_t> road_points; // ids into the road point table
    std::vector<int32_t> stop_signs;  // ids into the stop sign table
};

Cone view_cone(const Vec2& apex, double heading, double tilt, const ViewConfig& cfg);

/// An object is visible when some sample point (center plus corners) lies in
/// the cone and the sight ray to it is not blocked by any other object.
std::vector<int32_t> visible_objects(const WorldView& w, int32_t ego_index, double tilt,
                                     const ViewConfig& cfg);

/// A road point is visible when it lies in the cone and no object blocks the
/// sight ray; road geometry itself never occludes.
std::vector<int32_t> visible_road_points(const WorldView& w, int32_t ego_index, double tilt,
                                         const ViewConfig& cfg);

/// Stop signs skip the occlusion test: cone membership is enough.
std::vector<int32_t> visible_stop_signs(const WorldView& w, int32_t ego_index, double tilt,
                                        const ViewConfig& cfg);

VisibleSet visible_set(const WorldView& w, int32_t ego_index, double tilt, const ViewConfig& cfg);

/// Core entry point that also serves viewers that are not part of the world
/// (for example a vehicle removed this step). `ego_index` of -1 means the
/// viewer occludes nothing and is skipped nowhere.
VisibleSet visible_set_from(const ObjectView& ego, int32_t ego_index, const WorldView& w,
                            double tilt, const ViewConfig& cfg);

} // namespace roadsim
