#pragma once

#include "roadsim/scenario.hpp"

#include <cstdint>
#include <string>

namespace roadsim {
namespace synthetic {

/// Grid of horizontal and vertical streets. Road edges break at
/// intersections so crossing them is legal; vehicles drive straight along
/// lane centers at constant speed with goals at their final pose.
struct GridCityParams {
    std::string name = "grid_city";
    int streets_x = 5;         // vertical streets
    int streets_y = 5;         // horizontal streets
    double street_len = 400.0; // m
    double street_half_width = 4.0;
    double point_spacing = 0.5;
    double lane_center_spacing = 2.0;
    int n_vehicles = 30;
    int target_road_points = 0; // pad with a filler ring up to this count; 0 disables
    uint64_t seed = 1;
};

Scenario grid_city(const GridCityParams& p);

/// One straight two-edge corridor along +x with `n_vehicles` driving down the
/// middle, single file.
struct CorridorParams {
    std::string name = "corridor";
    double length = 220.0;
    double half_width = 4.0;
    double point_spacing = 0.5;
    int n_vehicles = 1;
    double speed = 8.0;
    double start_x = 10.0;
    double gap = 40.0;
};

Scenario corridor(const CorridorParams& p);

/// Two vehicles whose expert paths cross exactly `crossings` times: one
/// drives straight along +x, the other zigzags across it.
Scenario crossing_pair(int crossings, const std::string& name = "crossing_pair");

/// Audit fixture: `total` vehicles on parallel lanes, the first
/// `infeasible` of them crossing a planted road edge, followed by
/// `colliding` vehicles parked in overlap. `colliding` must be even; the
/// planted pairs overlap each other.
struct AuditCorpusParams {
    std::string name = "audit_corpus";
    int total = 100;
    int infeasible = 3;
    int colliding = 2;
};

Scenario audit_corpus(const AuditCorpusParams& p);

} // namespace synthetic
} // namespace roadsim
