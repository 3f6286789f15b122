#include "roadsim/synthetic.hpp"

#include "roadsim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace roadsim {
namespace synthetic {

namespace {

std::vector<Vec2> sample_polyline(const Vec2& a, const Vec2& b, double spacing) {
    const double len = (b - a).norm();
    const int n = std::max(1, static_cast<int>(std::floor(len / spacing))) + 1;
    std::vector<Vec2> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / static_cast<double>(n - 1 == 0 ? 1 : n - 1);
        out.push_back(a + s * (b - a));
    }
    return out;
}

void add_line(Scenario& s, RoadKind kind, const Vec2& a, const Vec2& b, double spacing) {
    RoadLine line;
    line.kind = kind;
    line.points = sample_polyline(a, b, spacing);
    s.roads.push_back(std::move(line));
}

std::size_t road_point_count(const Scenario& s) {
    std::size_t n = 0;
    for (const RoadLine& r : s.roads) n += r.points.size();
    return n;
}

/// Constant-velocity trajectory along `dir` from `start`, valid everywhere.
Trajectory straight_trajectory(const Vec2& start, const Vec2& dir, double speed) {
    Trajectory tr;
    const double heading = std::atan2(dir.y(), dir.x());
    const Vec2 vel = speed * dir;
    for (int t = 0; t < kTrajectoryLen; ++t) {
        const auto i = static_cast<std::size_t>(t);
        tr.positions[i] = start + (kTimeStep * t) * vel;
        tr.headings[i] = heading;
        tr.velocities[i] = vel;
        tr.valid[i] = true;
    }
    return tr;
}

RoadObject make_vehicle(int64_t id, const Trajectory& tr, double width = 2.0,
                        double length = 4.5) {
    RoadObject obj;
    obj.id = id;
    obj.kind = ObjectKind::vehicle;
    obj.width = width;
    obj.length = length;
    obj.expert = tr;
    const int last = tr.last_valid();
    const auto i = static_cast<std::size_t>(last);
    obj.goal_position = tr.positions[i];
    obj.goal_speed = tr.velocities[i].norm();
    obj.goal_heading = tr.headings[i];
    return obj;
}

} // namespace

Scenario grid_city(const GridCityParams& p) {
    Scenario s;
    s.name = p.name;

    const double L = p.street_len;
    const double hw = p.street_half_width;
    std::vector<double> xs, ys;
    for (int i = 0; i < p.streets_x; ++i) xs.push_back((i + 1) * L / (p.streets_x + 1));
    for (int j = 0; j < p.streets_y; ++j) ys.push_back((j + 1) * L / (p.streets_y + 1));

    // Edge pieces between intersections; lane centers run the whole street.
    const auto add_broken_edges = [&](bool horizontal, double center) {
        const std::vector<double>& crossings = horizontal ? xs : ys;
        for (const double offset : {-hw, hw}) {
            double begin = 0.0;
            for (std::size_t k = 0; k <= crossings.size(); ++k) {
                const double end = k < crossings.size() ? crossings[k] - hw : L;
                if (end > begin) {
                    const Vec2 a = horizontal ? Vec2(begin, center + offset)
                                              : Vec2(center + offset, begin);
                    const Vec2 b = horizontal ? Vec2(end, center + offset)
                                              : Vec2(center + offset, end);
                    add_line(s, RoadKind::road_edge, a, b, p.point_spacing);
                }
                if (k < crossings.size()) begin = crossings[k] + hw;
            }
        }
    };
    for (const double y : ys) {
        add_broken_edges(true, y);
        add_line(s, RoadKind::lane_center, Vec2(0.0, y), Vec2(L, y), p.lane_center_spacing);
    }
    for (const double x : xs) {
        add_broken_edges(false, x);
        add_line(s, RoadKind::lane_center, Vec2(x, 0.0), Vec2(x, L), p.lane_center_spacing);
    }
    for (const double x : xs) {
        for (const double y : ys) {
            RoadLine sign;
            sign.kind = RoadKind::stop_sign;
            sign.points.push_back(Vec2(x - hw - 1.0, y - hw - 1.0));
            s.roads.push_back(std::move(sign));
        }
    }

    if (p.target_road_points > 0) {
        const std::size_t have = road_point_count(s);
        if (have < static_cast<std::size_t>(p.target_road_points)) {
            // Square filler ring with exactly the missing number of points.
            const std::size_t need = static_cast<std::size_t>(p.target_road_points) - have;
            const double m = 12.0;
            const double side = L + 2.0 * m;
            const double perimeter = 4.0 * side;
            RoadLine ring;
            ring.kind = RoadKind::road_line;
            for (std::size_t k = 0; k < need; ++k) {
                const double d = perimeter * static_cast<double>(k) / static_cast<double>(need);
                Vec2 q;
                if (d < side) {
                    q = Vec2(-m + d, -m);
                } else if (d < 2.0 * side) {
                    q = Vec2(L + m, -m + (d - side));
                } else if (d < 3.0 * side) {
                    q = Vec2(L + m - (d - 2.0 * side), L + m);
                } else {
                    q = Vec2(-m, L + m - (d - 3.0 * side));
                }
                ring.points.push_back(q);
            }
            s.roads.push_back(std::move(ring));
        }
    }

    // Start offsets that keep every spawn box clear of intersections and of
    // the other spawns on the same street. Mirrored starts stay clear too
    // because the crossings are symmetric about the street midpoint.
    const auto safe_slots = [&](const std::vector<double>& crossings) {
        std::vector<double> slots;
        double last = -1e9;
        for (double along = 16.0; along <= L - 88.0; along += 1.0) {
            if (along - last < 13.0) continue;
            bool clear = true;
            for (const double c : crossings) {
                if (std::abs(along - c) < 9.0 || std::abs(L - along - c) < 9.0) {
                    clear = false;
                    break;
                }
            }
            if (clear) {
                slots.push_back(along);
                last = along;
            }
        }
        return slots;
    };
    const std::vector<double> h_slots = safe_slots(xs);
    const std::vector<double> v_slots = safe_slots(ys);

    // Vehicles round-robin across streets, driving on the right side of the
    // centerline, directions alternating per slot.
    Rng rng(p.seed);
    const int n_streets = p.streets_x + p.streets_y;
    for (int k = 0; k < p.n_vehicles; ++k) {
        const int street = k % n_streets;
        const int slot = k / n_streets;
        const bool horizontal = street < p.streets_y;
        const std::vector<double>& slots = horizontal ? h_slots : v_slots;
        if (slot >= static_cast<int>(slots.size())) {
            throw std::invalid_argument("grid_city: too many vehicles for the street grid");
        }
        const double center = horizontal ? ys[static_cast<std::size_t>(street)]
                                         : xs[static_cast<std::size_t>(street - p.streets_y)];
        const bool forward = slot % 2 == 0;
        const double speed = 5.0 + 0.5 * static_cast<double>(rng.next_below(7));
        const double along0 = slots[static_cast<std::size_t>(slot)];
        const double lateral = center + (forward ? -1.2 : 1.2);

        Vec2 start, dir;
        if (horizontal) {
            start = forward ? Vec2(along0, lateral) : Vec2(L - along0, lateral);
            dir = forward ? Vec2(1.0, 0.0) : Vec2(-1.0, 0.0);
        } else {
            start = forward ? Vec2(lateral, along0) : Vec2(lateral, L - along0);
            dir = forward ? Vec2(0.0, 1.0) : Vec2(0.0, -1.0);
        }
        s.objects.push_back(make_vehicle(k + 1, straight_trajectory(start, dir, speed)));
    }
    return s;
}

Scenario corridor(const CorridorParams& p) {
    Scenario s;
    s.name = p.name;
    add_line(s, RoadKind::road_edge, Vec2(0.0, -p.half_width), Vec2(p.length, -p.half_width),
             p.point_spacing);
    add_line(s, RoadKind::road_edge, Vec2(0.0, p.half_width), Vec2(p.length, p.half_width),
             p.point_spacing);
    add_line(s, RoadKind::lane_center, Vec2(0.0, 0.0), Vec2(p.length, 0.0), 2.0);
    for (int k = 0; k < p.n_vehicles; ++k) {
        const Vec2 start(p.start_x + p.gap * k, 0.0);
        s.objects.push_back(make_vehicle(k + 1, straight_trajectory(start, Vec2(1.0, 0.0), p.speed)));
    }
    return s;
}

Scenario crossing_pair(int crossings, const std::string& name) {
    if (crossings < 1) throw std::invalid_argument("crossing_pair: need at least one crossing");
    Scenario s;
    s.name = name;
    add_line(s, RoadKind::lane_center, Vec2(-10.0, -20.0), Vec2(90.0, -20.0), 2.0);

    // A drives straight along y = 0.
    s.objects.push_back(make_vehicle(1, straight_trajectory(Vec2(0.0, 0.0), Vec2(1.0, 0.0), 8.0)));

    // B advances in x while its y flips between +2 and -2; every block
    // crosses y = 0 exactly once.
    Trajectory tb;
    const int blocks = crossings;
    for (int t = 0; t < kTrajectoryLen; ++t) {
        const auto i = static_cast<std::size_t>(t);
        const double progress = static_cast<double>(t) / (kTrajectoryLen - 1);
        const double block_f = progress * blocks;
        const int block = std::min(static_cast<int>(block_f), blocks - 1);
        const double within = block_f - block;
        const double y0 = (block % 2 == 0) ? 2.0 : -2.0;
        const double y1 = -y0;
        tb.positions[i] = Vec2(10.0 + 60.0 * progress, y0 + (y1 - y0) * within);
        tb.valid[i] = true;
    }
    for (int t = 0; t < kTrajectoryLen; ++t) {
        const auto i = static_cast<std::size_t>(t);
        const int tn = std::min(t + 1, kTrajectoryLen - 1);
        const int tp = tn - 1;
        const Vec2 delta = tb.positions[static_cast<std::size_t>(tn)] -
                           tb.positions[static_cast<std::size_t>(tp)];
        tb.velocities[i] = delta / kTimeStep;
        tb.headings[i] = std::atan2(delta.y(), delta.x());
    }
    s.objects.push_back(make_vehicle(2, tb));
    return s;
}

Scenario audit_corpus(const AuditCorpusParams& p) {
    if (p.colliding % 2 != 0) throw std::invalid_argument("audit_corpus: colliding must be even");
    if (p.infeasible + p.colliding > p.total) {
        throw std::invalid_argument("audit_corpus: planted counts exceed total");
    }
    Scenario s;
    s.name = p.name;

    int64_t next_id = 1;
    int lane = 0;
    const auto lane_y = [](int i) { return 6.0 * i; };

    // Vehicles with a road edge planted across their path.
    for (int k = 0; k < p.infeasible; ++k, ++lane) {
        const double y = lane_y(lane);
        s.objects.push_back(
            make_vehicle(next_id++, straight_trajectory(Vec2(10.0, y), Vec2(1.0, 0.0), 5.0)));
        add_line(s, RoadKind::road_edge, Vec2(30.0, y - 2.0), Vec2(30.0, y + 2.0), 0.5);
    }

    // Parked overlapping pairs.
    for (int k = 0; k < p.colliding / 2; ++k, ++lane) {
        const double y = lane_y(lane);
        s.objects.push_back(
            make_vehicle(next_id++, straight_trajectory(Vec2(10.0, y), Vec2(1.0, 0.0), 0.0)));
        s.objects.push_back(
            make_vehicle(next_id++, straight_trajectory(Vec2(12.0, y), Vec2(1.0, 0.0), 0.0)));
    }

    // Clean movers.
    while (next_id <= p.total) {
        const double y = lane_y(lane++);
        s.objects.push_back(
            make_vehicle(next_id++, straight_trajectory(Vec2(10.0, y), Vec2(1.0, 0.0), 5.0)));
        add_line(s, RoadKind::lane_center, Vec2(0.0, y), Vec2(80.0, y), 2.0);
    }
    return s;
}

} // namespace synthetic
} // namespace roadsim
