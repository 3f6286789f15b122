#pragma once

#include "roadsim/geom.hpp"
#include "roadsim/scenario.hpp"

#include <limits>
#include <optional>
#include <vector>

namespace roadsim {

struct KinState {
    Vec2 position{0.0, 0.0};
    double heading = 0.0;
    double speed = 0.0;
};

struct Action {
    double accel = 0.0;     // m/s^2
    double steer = 0.0;     // radians, |steer| < pi/2
    double head_tilt = 0.0; // radians, applied tilt is clamped to +-pi/2
};

/// One uniformly spaced axis, endpoints included. A single bin is allowed
/// only on a degenerate range.
struct AxisSpec {
    int bins = 1;
    double lo = 0.0;
    double hi = 0.0;
};

std::vector<double> axis_values(const AxisSpec& axis);

/// Discrete action set plus the hard rule bounds. The default grid is
/// 6 x 21 x 5 = 630 actions. The tilt range intentionally exceeds the applied
/// clamp of pi/2; tilts are clamped where they are consumed.
struct ActionGrid {
    AxisSpec accel{6, -3.0, 2.0};
    AxisSpec steer{21, -0.7, 0.7};
    AxisSpec tilt{5, -1.6, 1.6};

    double max_accel_bound = 6.0;                       // |a| limit
    double max_heading_rate = 40.0 * kPi / 180.0;       // |dtheta/dt| limit
    double max_tilt = 0.5 * kPi;                        // applied |tilt| limit
};

/// Full Cartesian product; accel varies slowest, tilt fastest.
std::vector<Action> grid_actions(const ActionGrid& grid);

inline constexpr double kNoHeadingRateLimit = std::numeric_limits<double>::infinity();

/// Kinematic bicycle step with the center of gravity as the reference point;
/// the rear-axle distance is half the wheelbase. The half-step mean speed
/// drives the position update, both speeds clip to +-v_max, and the heading
/// change is optionally rate-limited after integration.
KinState bicycle_step(const KinState& s, const Action& act, double dt, double wheelbase,
                      double v_max, double max_heading_rate = kNoHeadingRateLimit);

/// Stored expert state at step t, or empty when the object is absent there.
std::optional<KinState> replay_step(const RoadObject& obj, int t);

} // namespace roadsim
