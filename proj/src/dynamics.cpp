#include "roadsim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace roadsim {

std::vector<double> axis_values(const AxisSpec& axis) {
    if (axis.bins < 1) throw std::invalid_argument("axis: bin count must be at least 1");
    if (axis.bins < 2 && axis.lo != axis.hi) {
        throw std::invalid_argument("axis: a nonzero range needs at least 2 bins");
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(axis.bins));
    if (axis.bins == 1) {
        out.push_back(axis.lo);
        return out;
    }
    const double range = axis.hi - axis.lo;
    const double denom = static_cast<double>(axis.bins - 1);
    for (int i = 0; i < axis.bins; ++i) {
        out.push_back(axis.lo + range * (static_cast<double>(i) / denom));
    }
    return out;
}

std::vector<Action> grid_actions(const ActionGrid& grid) {
    const std::vector<double> accels = axis_values(grid.accel);
    const std::vector<double> steers = axis_values(grid.steer);
    const std::vector<double> tilts = axis_values(grid.tilt);
    std::vector<Action> out;
    out.reserve(accels.size() * steers.size() * tilts.size());
    for (const double a : accels) {
        for (const double d : steers) {
            for (const double h : tilts) {
                out.push_back(Action{a, d, h});
            }
        }
    }
    return out;
}

KinState bicycle_step(const KinState& s, const Action& act, double dt, double wheelbase,
                      double v_max, double max_heading_rate) {
    if (!(dt > 0.0)) throw std::invalid_argument("bicycle_step: dt must be positive");
    if (!(wheelbase > 0.0)) throw std::invalid_argument("bicycle_step: wheelbase must be positive");
    if (std::abs(act.steer) >= 0.5 * kPi) {
        throw std::invalid_argument("bicycle_step: |steer| must be below pi/2");
    }

    const double v_dot = act.accel;
    const double v_bar = std::clamp(s.speed + 0.5 * v_dot * dt, -v_max, v_max);
    const double tan_steer = std::tan(act.steer);
    const double beta = std::atan(0.5 * tan_steer);
    const double x_dot = v_bar * std::cos(s.heading + beta);
    const double y_dot = v_bar * std::sin(s.heading + beta);
    const double theta_dot = v_bar * std::cos(beta) * tan_steer / wheelbase;

    KinState out;
    out.position = s.position + dt * Vec2(x_dot, y_dot);
    double dtheta = theta_dot * dt;
    if (max_heading_rate != kNoHeadingRateLimit) {
        const double cap = max_heading_rate * dt;
        dtheta = std::clamp(dtheta, -cap, cap);
    }
    out.heading = norm_angle(s.heading + dtheta);
    out.speed = std::clamp(s.speed + v_dot * dt, -v_max, v_max);
    return out;
}

std::optional<KinState> replay_step(const RoadObject& obj, int t) {
    if (t < 0 || t >= kTrajectoryLen) {
        throw std::out_of_range("replay_step: step index out of range");
    }
    const auto i = static_cast<std::size_t>(t);
    if (!obj.expert.valid[i]) return std::nullopt;
    return KinState{obj.expert.positions[i], obj.expert.headings[i],
                    obj.expert.velocities[i].norm()};
}

} // namespace roadsim
