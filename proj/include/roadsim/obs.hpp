#pragma once

#include "roadsim/image.hpp"
#include "roadsim/visibility.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace roadsim {

/// Fixed observation layout. With the default maxima the flat vector has
/// 7 + 16*10 + 500*11 + 4*2 = 5675 entries.
struct ObsLayout {
    int max_objects = 16;
    int max_road_points = 500;
    int max_stop_signs = 4;

    static constexpr int kEgoDim = 7;
    static constexpr int kObjectDim = 10;
    static constexpr int kRoadPointDim = 11;
    static constexpr int kStopSignDim = 2;

    int dim() const {
        return kEgoDim + max_objects * kObjectDim + max_road_points * kRoadPointDim +
               max_stop_signs * kStopSignDim;
    }
    int slots() const { return 1 + max_objects + max_road_points + max_stop_signs; }
};

struct Goal {
    Vec2 position{0.0, 0.0};
    double speed = 0.0;
    double heading = 0.0;
};

/// Flat feature vector in block order [ego | objects | road points | stop
/// signs]. Entities are sorted by ascending distance (ties by id) and padded
/// slots are exactly zero with their mask entry false.
struct Observation {
    Eigen::VectorXf features;
    std::vector<uint8_t> slot_valid;
};

/// [speed, goal distance, goal bearing, width, length, goal speed - speed,
/// signed heading error to the goal heading]. All angles are in the ego
/// frame.
Eigen::Matrix<double, 7, 1> ego_features(const ObjectView& ego, const Goal& goal);

/// [speed, velocity-direction difference, width, length, bearing, distance,
/// relative heading, one-hot(vehicle, pedestrian, cyclist)].
Eigen::Matrix<double, 10, 1> object_features(const ObjectView& ego, const ObjectView& other);

/// [bearing, distance, neighbor vector x and y in the ego frame, one-hot of
/// the seven road kinds].
Eigen::Matrix<double, 11, 1> road_point_features(const ObjectView& ego, const RoadPoint& point);

/// [bearing, distance].
Eigen::Matrix<double, 2, 1> stop_sign_features(const ObjectView& ego, const StopSign& sign);

Observation build_observation(const WorldView& w, int32_t ego_index, const Goal& goal,
                              double tilt, const ObsLayout& layout, const ViewConfig& cfg);

/// Variant for viewers outside the world (`ego_index` -1); see
/// visible_set_from.
Observation build_observation_from(const ObjectView& ego, int32_t ego_index, const WorldView& w,
                                   const Goal& goal, double tilt, const ObsLayout& layout,
                                   const ViewConfig& cfg);

struct RasterConfig {
    int px = 500;
    double meters_per_px = 0.32;
    bool cone_only = true; // draw only visible elements
    double tilt = 0.0;
    ViewConfig view;
};

/// Ego-centered top-down raster, ego heading pointing up. Deterministic for
/// identical inputs.
Image rasterize(const WorldView& w, int32_t ego_index, const RasterConfig& cfg);

} // namespace roadsim
