#include "roadsim/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace roadsim {

using ojson = nlohmann::ordered_json;

Aggregate aggregate(std::span<const VehicleOutcome> outcomes) {
    if (outcomes.empty()) throw std::invalid_argument("aggregate: no vehicles");
    double goals = 0.0;
    double collisions = 0.0;
    for (const VehicleOutcome& o : outcomes) {
        if (o.goal) goals += 1.0;
        if (o.collision != CollisionType::none) collisions += 1.0;
    }
    const double n = static_cast<double>(outcomes.size());
    return Aggregate{goals / n, collisions / n};
}

std::optional<Displacement> displacement(const Simulation::RecordedTrack& track,
                                         const Trajectory& expert, int t_begin, int t_end) {
    double sum = 0.0;
    int count = 0;
    double final_err = 0.0;
    for (int t = t_begin; t <= t_end; ++t) {
        const auto i = static_cast<std::size_t>(t);
        if (!expert.valid[i] || !track[i].has_value()) continue;
        const double err = (track[i]->position - expert.positions[i]).norm();
        sum += err;
        final_err = err; // distance at the final valid expert step
        ++count;
    }
    if (count == 0) return std::nullopt;
    return Displacement{sum / static_cast<double>(count), final_err};
}

namespace {

struct TrajPolyline {
    int64_t id;
    std::vector<Segment> segments;
    AABB bounds;
};

TrajPolyline trajectory_polyline(const RoadObject& obj) {
    TrajPolyline out;
    out.id = obj.id;
    for (int t = 0; t + 1 < kTrajectoryLen; ++t) {
        const auto i = static_cast<std::size_t>(t);
        if (!obj.expert.valid[i] || !obj.expert.valid[i + 1]) continue;
        const Segment seg{obj.expert.positions[i], obj.expert.positions[i + 1]};
        out.bounds.extend(seg.a);
        out.bounds.extend(seg.b);
        out.segments.push_back(seg);
    }
    return out;
}

/// Distinct intersection points between two polylines; shared endpoints of
/// consecutive segments count once.
int polyline_intersections(const TrajPolyline& a, const TrajPolyline& b) {
    if (a.segments.empty() || b.segments.empty()) return 0;
    if (!a.bounds.intersects(b.bounds)) return 0;
    std::vector<Vec2> hits;
    for (const Segment& sa : a.segments) {
        for (const Segment& sb : b.segments) {
            const auto p = segment_intersect(sa, sb);
            if (p) hits.push_back(*p);
        }
    }
    std::sort(hits.begin(), hits.end(), [](const Vec2& l, const Vec2& r) {
        if (l.x() != r.x()) return l.x() < r.x();
        return l.y() < r.y();
    });
    int count = 0;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        if (i > 0 && (hits[i] - hits[i - 1]).norm() <= 1e-9) continue;
        ++count;
    }
    return count;
}

} // namespace

std::map<int64_t, int> count_interactions(const Scenario& s) {
    std::vector<TrajPolyline> lines;
    for (const RoadObject& obj : s.objects) {
        if (obj.kind != ObjectKind::vehicle) continue;
        lines.push_back(trajectory_polyline(obj));
    }
    std::map<int64_t, int> raw;
    for (const TrajPolyline& l : lines) raw[l.id] = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        for (std::size_t j = i + 1; j < lines.size(); ++j) {
            const int crossings = polyline_intersections(lines[i], lines[j]);
            raw[lines[i].id] += crossings;
            raw[lines[j].id] += crossings;
        }
    }
    for (auto& [id, count] : raw) {
        (void)id;
        count = std::min(count, kInteractionBinCap);
    }
    return raw;
}

RunReport make_report(const EpisodeRecord& episode, const Scenario& scenario,
                      const SimConfig& cfg, const std::string& policy, uint64_t seed,
                      bool removal_disabled) {
    RunReport report;
    report.scenario_name = episode.scenario_name;
    report.policy = policy;
    report.seed = seed;
    report.removal_disabled = removal_disabled;
    report.warnings = episode.warnings;

    const std::map<int64_t, int> interactions = count_interactions(scenario);
    std::map<int64_t, const RoadObject*> by_id;
    for (const RoadObject& obj : scenario.objects) by_id[obj.id] = &obj;

    const int t_begin = cfg.warmup_steps + 1;
    const int t_end = cfg.warmup_steps + cfg.horizon;
    for (const VehicleRecord& v : episode.vehicles) {
        if (v.kind != ObjectKind::vehicle) continue;
        VehicleOutcome o;
        o.id = v.id;
        o.controlled = v.controlled;
        o.goal = v.goal;
        o.collision = v.collision;
        if (removal_disabled) {
            const auto d = displacement(v.track, by_id.at(v.id)->expert, t_begin, t_end);
            if (d) {
                o.ade = d->ade;
                o.fde = d->fde;
            }
        }
        const auto it = interactions.find(v.id);
        o.interactions = it == interactions.end() ? 0 : it->second;
        report.outcomes.push_back(o);
    }
    if (!report.outcomes.empty()) report.totals = aggregate(report.outcomes);
    return report;
}

std::string report_to_json(const RunReport& report) {
    ojson j;
    j["scenario"] = report.scenario_name;
    j["policy"] = report.policy;
    j["seed"] = report.seed;
    j["removal_disabled"] = report.removal_disabled;
    j["vehicles"] = ojson::array();
    for (const VehicleOutcome& o : report.outcomes) {
        ojson v;
        v["id"] = o.id;
        v["controlled"] = o.controlled;
        v["goal"] = o.goal;
        v["collision"] = to_string(o.collision);
        if (o.ade) {
            v["ade"] = *o.ade;
        } else {
            v["ade"] = nullptr;
        }
        if (o.fde) {
            v["fde"] = *o.fde;
        } else {
            v["fde"] = nullptr;
        }
        v["interactions"] = o.interactions;
        j["vehicles"].push_back(std::move(v));
    }
    j["totals"] = {{"goal_rate", report.totals.goal_rate},
                   {"collision_rate", report.totals.collision_rate}};
    j["warnings"] = report.warnings;
    return j.dump(2) + "\n";
}

} // namespace roadsim
