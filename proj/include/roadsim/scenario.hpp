#pragma once

#include "roadsim/geom.hpp"
#include "roadsim/spatial.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace roadsim {

/// Trajectory snippets are 9 seconds at 10 Hz plus the initial state.
inline constexpr int kTrajectoryLen = 91;
inline constexpr double kTimeStep = 0.1;

/// Placeholder written for positions at invalid steps; never read back.
inline const Vec2 kInvalidPos{-10000.0, -10000.0};

enum class RoadKind : uint8_t {
    lane_center,
    road_line,
    road_edge, // the only kind vehicles collide with
    stop_sign,
    crosswalk,
    speed_bump,
    unknown,
};
inline constexpr int kRoadKindCount = 7;

enum class ObjectKind : uint8_t { vehicle, pedestrian, cyclist };

const char* to_string(RoadKind k);
const char* to_string(ObjectKind k);

struct RoadLine {
    RoadKind kind = RoadKind::unknown;
    std::vector<Vec2> points;
};

struct Trajectory {
    std::array<Vec2, kTrajectoryLen> positions;
    std::array<double, kTrajectoryLen> headings;
    std::array<Vec2, kTrajectoryLen> velocities;
    std::array<bool, kTrajectoryLen> valid;

    int first_valid() const;
    int last_valid() const; // -1 when no step is valid
};

struct RoadObject {
    int64_t id = 0;
    ObjectKind kind = ObjectKind::vehicle;
    double width = 0.0;
    double length = 0.0;
    Trajectory expert;
    Vec2 goal_position{0.0, 0.0};
    double goal_speed = 0.0;
    double goal_heading = 0.0;

    /// Footprint at expert step t; only meaningful when expert.valid[t].
    OrientedBox box_at(int t) const;
    double max_expert_speed() const;
};

struct Scenario {
    std::string name;
    double dt = kTimeStep;
    std::vector<RoadObject> objects;
    std::vector<RoadLine> roads;
};

class ScenarioError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Parses and fully validates a scenario document. Throws ScenarioError with
/// the offending path on any schema or invariant violation.
Scenario load_scenario(const std::string& json_text);
Scenario load_scenario_file(const std::string& path);

/// Canonical serialization; load followed by save is byte-stable.
std::string save_scenario(const Scenario& s);
void save_scenario_file(const Scenario& s, const std::string& path);

/// One entry of the flattened static map. `neighbor` points to the successor
/// in the polyline and is zero for the last point.
struct RoadPoint {
    Vec2 pos{0.0, 0.0};
    Vec2 neighbor{0.0, 0.0};
    RoadKind kind = RoadKind::unknown;
    int32_t road = 0;
};

struct StopSign {
    Vec2 pos{0.0, 0.0};
    int32_t road = 0;
};

/// Immutable per-scenario acceleration structures, built once and shared.
/// Stop signs are indexed separately because they bypass occlusion.
struct ScenarioIndex {
    std::vector<RoadPoint> points;
    std::vector<StopSign> stop_signs;
    std::vector<Segment> edge_segments;
    RangeTree point_tree;
    RangeTree stop_sign_tree;
    Bvh edge_bvh;

    static ScenarioIndex build(const Scenario& s);

    bool hits_road_edge(const OrientedBox& box) const;
};

/// True when the expert trajectory, shrunk by the given margins, crosses a
/// road edge at any valid step.
bool trajectory_crosses_edges(const RoadObject& obj, const ScenarioIndex& index,
                              double width_shrink, double length_shrink);

/// A goal is infeasible when even a slightly shrunk vehicle (width - 0.1,
/// length - 0.3) cannot replay the expert trajectory without crossing a road
/// edge.
bool goal_infeasible(const RoadObject& obj, const ScenarioIndex& index);
bool goal_infeasible(const RoadObject& obj, const Scenario& s);

/// True when the object's footprint at step 0 overlaps another vehicle that
/// is valid at step 0, or a road edge.
bool initial_collision(const RoadObject& obj, const Scenario& s, const ScenarioIndex& index);
bool initial_collision(const RoadObject& obj, const Scenario& s);

enum class Disposition : uint8_t { controlled, expert_replay, removed };

struct VehicleDisposition {
    std::map<int64_t, Disposition> entries;

    Disposition of(int64_t id) const { return entries.at(id); }
    std::vector<int64_t> controlled_ids() const;
    std::size_t count(Disposition d) const;
};

/// Partitions every object. Control candidates are vehicles that move
/// (max expert speed > 0.05 m/s), start more than 0.2 m from their goal, have
/// a feasible goal, and do not start in collision; up to `max_controlled` of
/// them are sampled uniformly. Other surviving vehicles replay their expert
/// data. Vehicles invalid at step 0 or initially colliding are removed, as
/// are pedestrians and cyclists unless `include_vru` keeps them as replayed
/// occluders.
VehicleDisposition select_controlled(const Scenario& s, int max_controlled, uint64_t seed,
                                     bool include_vru = false);

} // namespace roadsim
