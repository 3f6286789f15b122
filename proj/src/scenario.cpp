#include "roadsim/scenario.hpp"

#include "roadsim/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace roadsim {

using ojson = nlohmann::ordered_json;

const char* to_string(RoadKind k) {
    switch (k) {
        case RoadKind::lane_center: return "lane";
        case RoadKind::road_line: return "road_line";
        case RoadKind::road_edge: return "road_edge";
        case RoadKind::stop_sign: return "stop_sign";
        case RoadKind::crosswalk: return "crosswalk";
        case RoadKind::speed_bump: return "speed_bump";
        case RoadKind::unknown: return "unknown";
    }
    return "unknown";
}

const char* to_string(ObjectKind k) {
    switch (k) {
        case ObjectKind::vehicle: return "vehicle";
        case ObjectKind::pedestrian: return "pedestrian";
        case ObjectKind::cyclist: return "cyclist";
    }
    return "vehicle";
}

int Trajectory::first_valid() const {
    for (int t = 0; t < kTrajectoryLen; ++t) {
        if (valid[static_cast<std::size_t>(t)]) return t;
    }
    return -1;
}

int Trajectory::last_valid() const {
    for (int t = kTrajectoryLen - 1; t >= 0; --t) {
        if (valid[static_cast<std::size_t>(t)]) return t;
    }
    return -1;
}

OrientedBox RoadObject::box_at(int t) const {
    const auto i = static_cast<std::size_t>(t);
    return OrientedBox(expert.positions[i], expert.headings[i], length, width);
}

double RoadObject::max_expert_speed() const {
    double best = 0.0;
    for (int t = 0; t < kTrajectoryLen; ++t) {
        const auto i = static_cast<std::size_t>(t);
        if (expert.valid[i]) best = std::max(best, expert.velocities[i].norm());
    }
    return best;
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ScenarioError(path + ": " + msg);
}

const ojson& field(const ojson& j, const std::string& path, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) fail(path, std::string("missing field '") + key + "'");
    return *it;
}

void check_keys(const ojson& j, const std::string& path, std::initializer_list<const char*> keys) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : keys) {
            if (it.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) fail(path, "unknown field '" + it.key() + "'");
    }
}

double get_finite(const ojson& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(path, "non-finite value");
    return v;
}

Vec2 get_vec2(const ojson& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an {x, y} object");
    check_keys(j, path, {"x", "y"});
    return Vec2(get_finite(field(j, path, "x"), path + ".x"),
                get_finite(field(j, path, "y"), path + ".y"));
}

RoadKind parse_road_kind(const std::string& s, const std::string& path) {
    if (s == "lane") return RoadKind::lane_center;
    if (s == "road_line") return RoadKind::road_line;
    if (s == "road_edge") return RoadKind::road_edge;
    if (s == "stop_sign") return RoadKind::stop_sign;
    if (s == "crosswalk") return RoadKind::crosswalk;
    if (s == "speed_bump") return RoadKind::speed_bump;
    if (s == "traffic_light") fail(path, "unsupported element 'traffic_light'");
    return RoadKind::unknown;
}

ObjectKind parse_object_kind(const std::string& s, const std::string& path) {
    if (s == "vehicle") return ObjectKind::vehicle;
    if (s == "pedestrian") return ObjectKind::pedestrian;
    if (s == "cyclist") return ObjectKind::cyclist;
    fail(path, "unknown object type '" + s + "'");
}

template <typename F>
void parse_steps(const ojson& j, const std::string& path, F&& store) {
    if (!j.is_array()) fail(path, "expected an array");
    if (j.size() != kTrajectoryLen) {
        fail(path, "expected " + std::to_string(kTrajectoryLen) + " entries, got " +
                       std::to_string(j.size()));
    }
    for (std::size_t t = 0; t < j.size(); ++t) {
        store(t, j[t], path + "[" + std::to_string(t) + "]");
    }
}

RoadObject parse_object(const ojson& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    check_keys(j, path,
               {"id", "type", "width", "length", "goalPosition", "goalSpeed", "goalHeading",
                "position", "heading", "velocity", "valid"});

    RoadObject obj;
    const ojson& id = field(j, path, "id");
    if (!id.is_number_integer()) fail(path + ".id", "expected an integer");
    obj.id = id.get<int64_t>();

    const ojson& type = field(j, path, "type");
    if (!type.is_string()) fail(path + ".type", "expected a string");
    obj.kind = parse_object_kind(type.get<std::string>(), path + ".type");

    obj.width = get_finite(field(j, path, "width"), path + ".width");
    obj.length = get_finite(field(j, path, "length"), path + ".length");
    if (!(obj.width > 0.0) || !(obj.length > 0.0)) fail(path, "extents must be positive");

    obj.goal_position = get_vec2(field(j, path, "goalPosition"), path + ".goalPosition");
    obj.goal_speed = get_finite(field(j, path, "goalSpeed"), path + ".goalSpeed");
    obj.goal_heading = get_finite(field(j, path, "goalHeading"), path + ".goalHeading");

    parse_steps(field(j, path, "valid"), path + ".valid", [&](std::size_t t, const ojson& e, const std::string& p) {
        if (!e.is_boolean()) fail(p, "expected a boolean");
        obj.expert.valid[t] = e.get<bool>();
    });
    parse_steps(field(j, path, "position"), path + ".position",
                [&](std::size_t t, const ojson& e, const std::string& p) {
                    const Vec2 v = get_vec2(e, p);
                    // Positions at invalid steps must never be read; pin them
                    // to the sentinel so the canonical form is stable.
                    obj.expert.positions[t] = obj.expert.valid[t] ? v : kInvalidPos;
                });
    parse_steps(field(j, path, "heading"), path + ".heading",
                [&](std::size_t t, const ojson& e, const std::string& p) {
                    obj.expert.headings[t] = get_finite(e, p);
                });
    parse_steps(field(j, path, "velocity"), path + ".velocity",
                [&](std::size_t t, const ojson& e, const std::string& p) {
                    obj.expert.velocities[t] = get_vec2(e, p);
                });

    // The goal must restate the final valid expert state.
    const int last = obj.expert.last_valid();
    if (last >= 0) {
        const auto i = static_cast<std::size_t>(last);
        if ((obj.goal_position - obj.expert.positions[i]).norm() > 1e-6 ||
            std::abs(obj.goal_speed - obj.expert.velocities[i].norm()) > 1e-6 ||
            min_angle(obj.goal_heading, obj.expert.headings[i]) > 1e-6) {
            fail(path, "goal fields do not match the final valid expert state");
        }
    }
    return obj;
}

RoadLine parse_road(const ojson& j, const std::string& path) {
    if (!j.is_object()) fail(path, "expected an object");
    check_keys(j, path, {"type", "geometry"});

    RoadLine line;
    const ojson& type = field(j, path, "type");
    if (!type.is_string()) fail(path + ".type", "expected a string");
    line.kind = parse_road_kind(type.get<std::string>(), path + ".type");

    const ojson& geo = field(j, path, "geometry");
    if (!geo.is_array() || geo.empty()) fail(path + ".geometry", "expected a non-empty array");
    line.points.reserve(geo.size());
    for (std::size_t i = 0; i < geo.size(); ++i) {
        line.points.push_back(get_vec2(geo[i], path + ".geometry[" + std::to_string(i) + "]"));
    }
    if (line.kind == RoadKind::stop_sign && line.points.size() != 1) {
        fail(path, "stop_sign must have exactly one point");
    }
    return line;
}

ojson vec2_json(const Vec2& v) {
    ojson j;
    j["x"] = v.x();
    j["y"] = v.y();
    return j;
}

} // namespace

Scenario load_scenario(const std::string& json_text) {
    ojson j;
    try {
        j = ojson::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ScenarioError(std::string("parse error: ") + e.what());
    }

    const std::string root = "$";
    if (!j.is_object()) fail(root, "expected an object");
    check_keys(j, root, {"name", "dt", "objects", "roads"});

    Scenario s;
    const ojson& name = field(j, root, "name");
    if (!name.is_string()) fail(root + ".name", "expected a string");
    s.name = name.get<std::string>();

    s.dt = get_finite(field(j, root, "dt"), root + ".dt");
    if (s.dt != kTimeStep) fail(root + ".dt", "dt must be 0.1");

    const ojson& objects = field(j, root, "objects");
    if (!objects.is_array()) fail(root + ".objects", "expected an array");
    s.objects.reserve(objects.size());
    for (std::size_t i = 0; i < objects.size(); ++i) {
        s.objects.push_back(parse_object(objects[i], root + ".objects[" + std::to_string(i) + "]"));
    }

    const ojson& roads = field(j, root, "roads");
    if (!roads.is_array()) fail(root + ".roads", "expected an array");
    s.roads.reserve(roads.size());
    for (std::size_t i = 0; i < roads.size(); ++i) {
        s.roads.push_back(parse_road(roads[i], root + ".roads[" + std::to_string(i) + "]"));
    }

    // Ids key the disposition and reports; duplicates would corrupt both.
    std::vector<int64_t> ids;
    ids.reserve(s.objects.size());
    for (const RoadObject& o : s.objects) ids.push_back(o.id);
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        fail(root + ".objects", "duplicate object id");
    }
    return s;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return load_scenario(buf.str());
    } catch (const ScenarioError& e) {
        throw ScenarioError(path + ": " + e.what());
    }
}

std::string save_scenario(const Scenario& s) {
    ojson j;
    j["name"] = s.name;
    j["dt"] = s.dt;
    j["objects"] = ojson::array();
    for (const RoadObject& o : s.objects) {
        ojson oj;
        oj["id"] = o.id;
        oj["type"] = to_string(o.kind);
        oj["width"] = o.width;
        oj["length"] = o.length;
        oj["goalPosition"] = vec2_json(o.goal_position);
        oj["goalSpeed"] = o.goal_speed;
        oj["goalHeading"] = o.goal_heading;
        ojson pos = ojson::array();
        ojson head = ojson::array();
        ojson vel = ojson::array();
        ojson val = ojson::array();
        for (int t = 0; t < kTrajectoryLen; ++t) {
            const auto i = static_cast<std::size_t>(t);
            pos.push_back(vec2_json(o.expert.valid[i] ? o.expert.positions[i] : kInvalidPos));
            head.push_back(o.expert.headings[i]);
            vel.push_back(vec2_json(o.expert.velocities[i]));
            val.push_back(o.expert.valid[i]);
        }
        oj["position"] = std::move(pos);
        oj["heading"] = std::move(head);
        oj["velocity"] = std::move(vel);
        oj["valid"] = std::move(val);
        j["objects"].push_back(std::move(oj));
    }
    j["roads"] = ojson::array();
    for (const RoadLine& r : s.roads) {
        ojson rj;
        rj["type"] = to_string(r.kind);
        rj["geometry"] = ojson::array();
        for (const Vec2& p : r.points) rj["geometry"].push_back(vec2_json(p));
        j["roads"].push_back(std::move(rj));
    }
    return j.dump();
}

void save_scenario_file(const Scenario& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ScenarioError("cannot write '" + path + "'");
    out << save_scenario(s);
}

ScenarioIndex ScenarioIndex::build(const Scenario& s) {
    ScenarioIndex idx;
    for (std::size_t r = 0; r < s.roads.size(); ++r) {
        const RoadLine& line = s.roads[r];
        for (std::size_t i = 0; i < line.points.size(); ++i) {
            RoadPoint p;
            p.pos = line.points[i];
            p.neighbor =
                (i + 1 < line.points.size()) ? Vec2(line.points[i + 1] - line.points[i]) : Vec2(0.0, 0.0);
            p.kind = line.kind;
            p.road = static_cast<int32_t>(r);
            idx.points.push_back(p);
        }
        if (line.kind == RoadKind::stop_sign) {
            idx.stop_signs.push_back(StopSign{line.points.front(), static_cast<int32_t>(r)});
        }
        if (line.kind == RoadKind::road_edge) {
            for (std::size_t i = 0; i + 1 < line.points.size(); ++i) {
                if ((line.points[i + 1] - line.points[i]).squaredNorm() == 0.0) continue;
                idx.edge_segments.push_back(Segment{line.points[i], line.points[i + 1]});
            }
        }
    }

    std::vector<Vec2> positions;
    positions.reserve(idx.points.size());
    for (const RoadPoint& p : idx.points) positions.push_back(p.pos);
    idx.point_tree = RangeTree::build(positions);

    std::vector<Vec2> signs;
    signs.reserve(idx.stop_signs.size());
    for (const StopSign& ss : idx.stop_signs) signs.push_back(ss.pos);
    idx.stop_sign_tree = RangeTree::build(signs);

    std::vector<AABB> seg_boxes;
    seg_boxes.reserve(idx.edge_segments.size());
    for (const Segment& seg : idx.edge_segments) seg_boxes.push_back(seg.aabb());
    idx.edge_bvh = Bvh::build(seg_boxes);
    return idx;
}

bool ScenarioIndex::hits_road_edge(const OrientedBox& box) const {
    if (edge_segments.empty()) return false;
    std::vector<int32_t> candidates;
    edge_bvh.query(box.aabb(), candidates);
    for (const int32_t c : candidates) {
        if (box_intersects_segment(box, edge_segments[static_cast<std::size_t>(c)])) return true;
    }
    return false;
}

bool trajectory_crosses_edges(const RoadObject& obj, const ScenarioIndex& index,
                              double width_shrink, double length_shrink) {
    const double w = std::max(obj.width - width_shrink, 1e-3);
    const double l = std::max(obj.length - length_shrink, 1e-3);
    for (int t = 0; t < kTrajectoryLen; ++t) {
        const auto i = static_cast<std::size_t>(t);
        if (!obj.expert.valid[i]) continue;
        const OrientedBox box(obj.expert.positions[i], obj.expert.headings[i], l, w);
        if (index.hits_road_edge(box)) return true;
    }
    return false;
}

bool goal_infeasible(const RoadObject& obj, const ScenarioIndex& index) {
    return trajectory_crosses_edges(obj, index, 0.1, 0.3);
}

bool goal_infeasible(const RoadObject& obj, const Scenario& s) {
    return goal_infeasible(obj, ScenarioIndex::build(s));
}

bool initial_collision(const RoadObject& obj, const Scenario& s, const ScenarioIndex& index) {
    if (!obj.expert.valid[0]) return false;
    const OrientedBox box = obj.box_at(0);
    for (const RoadObject& other : s.objects) {
        if (other.id == obj.id || other.kind != ObjectKind::vehicle) continue;
        if (!other.expert.valid[0]) continue;
        if (box_overlap(box, other.box_at(0))) return true;
    }
    return index.hits_road_edge(box);
}

bool initial_collision(const RoadObject& obj, const Scenario& s) {
    return initial_collision(obj, s, ScenarioIndex::build(s));
}

std::vector<int64_t> VehicleDisposition::controlled_ids() const {
    std::vector<int64_t> out;
    for (const auto& [id, d] : entries) {
        if (d == Disposition::controlled) out.push_back(id);
    }
    return out;
}

std::size_t VehicleDisposition::count(Disposition d) const {
    std::size_t n = 0;
    for (const auto& [id, disp] : entries) {
        (void)id;
        if (disp == d) ++n;
    }
    return n;
}

VehicleDisposition select_controlled(const Scenario& s, int max_controlled, uint64_t seed,
                                     bool include_vru) {
    const ScenarioIndex index = ScenarioIndex::build(s);
    VehicleDisposition disp;
    std::vector<int64_t> candidates;

    // Deterministic id order regardless of file order.
    std::vector<const RoadObject*> ordered;
    ordered.reserve(s.objects.size());
    for (const RoadObject& o : s.objects) ordered.push_back(&o);
    std::sort(ordered.begin(), ordered.end(),
              [](const RoadObject* a, const RoadObject* b) { return a->id < b->id; });

    for (const RoadObject* o : ordered) {
        if (o->kind != ObjectKind::vehicle) {
            disp.entries[o->id] = (include_vru && o->expert.valid[0]) ? Disposition::expert_replay
                                                                      : Disposition::removed;
            continue;
        }
        if (!o->expert.valid[0]) {
            disp.entries[o->id] = Disposition::removed;
            continue;
        }
        if (initial_collision(*o, s, index)) {
            disp.entries[o->id] = Disposition::removed;
            continue;
        }
        disp.entries[o->id] = Disposition::expert_replay;

        const double dist_to_goal = (o->expert.positions[0] - o->goal_position).norm();
        if (o->max_expert_speed() > 0.05 && dist_to_goal > 0.2 && !goal_infeasible(*o, index)) {
            candidates.push_back(o->id);
        }
    }

    const std::size_t want =
        std::min<std::size_t>(candidates.size(), max_controlled < 0 ? 0 : static_cast<std::size_t>(max_controlled));
    Rng rng(seed);
    for (std::size_t i = 0; i < want; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next_below(candidates.size() - i));
        std::swap(candidates[i], candidates[j]);
        disp.entries[candidates[i]] = Disposition::controlled;
    }
    return disp;
}

} // namespace roadsim
