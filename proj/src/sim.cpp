#include "roadsim/sim.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace roadsim {

using ojson = nlohmann::ordered_json;

const char* to_string(CollisionType t) {
    switch (t) {
        case CollisionType::none: return "none";
        case CollisionType::vehicle: return "vehicle";
        case CollisionType::road_edge: return "road_edge";
    }
    return "none";
}

bool goal_achieved(const KinState& s, const Goal& goal, const SimConfig& cfg) {
    return (s.position - goal.position).norm() <= cfg.goal_pos_tol &&
           std::abs(s.speed - goal.speed) <= cfg.goal_speed_tol &&
           min_angle(s.heading, goal.heading) <= cfg.goal_heading_tol;
}

double dense_reward(const KinState& s, const Goal& goal, const Vec2& x0, const SimConfig& cfg) {
    const double start_dist = (x0 - goal.position).norm();
    double pos_term;
    if (start_dist == 0.0) {
        pos_term = cfg.reward_pos_coef; // control started at the goal
    } else {
        pos_term = cfg.reward_pos_coef * (1.0 - (s.position - goal.position).norm() / start_dist);
    }
    const double speed_term =
        cfg.reward_speed_coef * (1.0 - std::abs(s.speed - goal.speed) / cfg.speed_normalizer);
    const double heading_term =
        cfg.reward_heading_coef * (1.0 - min_angle(s.heading, goal.heading) / kTwoPi);
    return pos_term + speed_term + heading_term;
}

namespace {

Vec2 state_velocity(const VehicleStatus& v, const RoadObject& src, int t) {
    if (v.expert_driven) return src.expert.velocities[static_cast<std::size_t>(t)];
    return v.state.speed * Vec2(std::cos(v.state.heading), std::sin(v.state.heading));
}

} // namespace

Simulation::Simulation(std::shared_ptr<const Scenario> scenario, VehicleDisposition disposition,
                       SimConfig config, uint64_t seed)
    : scenario_(std::move(scenario)),
      index_(ScenarioIndex::build(*scenario_)),
      disposition_(std::move(disposition)),
      cfg_(std::move(config)),
      seed_(seed) {
    for (const RoadObject& obj : scenario_->objects) {
        if (disposition_.entries.find(obj.id) == disposition_.entries.end()) {
            throw std::invalid_argument("Simulation: disposition misses object id " +
                                        std::to_string(obj.id));
        }
    }
}

int Simulation::find_vehicle(int64_t id) const {
    const auto it = std::lower_bound(vehicles_.begin(), vehicles_.end(), id,
                                     [](const VehicleStatus& v, int64_t key) { return v.id < key; });
    if (it == vehicles_.end() || it->id != id) return -1;
    return static_cast<int>(it - vehicles_.begin());
}

const VehicleStatus& Simulation::vehicle(int64_t id) const {
    const int i = find_vehicle(id);
    if (i < 0) throw std::out_of_range("Simulation: unknown vehicle id " + std::to_string(id));
    return vehicles_[static_cast<std::size_t>(i)];
}

void Simulation::sync_views() {
    views_.clear();
    view_of_vehicle_.assign(vehicles_.size(), -1);
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        const VehicleStatus& v = vehicles_[i];
        if (!v.alive || !v.present) continue;
        ObjectView view;
        view.id = v.id;
        view.kind = v.kind;
        view.box = OrientedBox(v.state.position, v.state.heading,
                               sources_[i]->length, sources_[i]->width);
        view.velocity = state_velocity(v, *sources_[i], t_);
        view.speed = v.state.speed;
        view_of_vehicle_[i] = static_cast<int32_t>(views_.size());
        views_.push_back(view);
    }
    object_bvh_ = build_object_bvh(views_);
}

void Simulation::record_states() {
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        const VehicleStatus& v = vehicles_[i];
        auto& track = recorded_[v.id];
        track[static_cast<std::size_t>(t_)] =
            (v.alive && v.present) ? std::optional<KinState>(v.state) : std::nullopt;
    }
}

ResetResult Simulation::reset() {
    ResetResult result;
    vehicles_.clear();
    sources_.clear();
    recorded_.clear();
    t_ = 0;

    // Spawn everything the disposition kept, ordered by id.
    std::vector<const RoadObject*> ordered;
    for (const RoadObject& obj : scenario_->objects) ordered.push_back(&obj);
    std::sort(ordered.begin(), ordered.end(),
              [](const RoadObject* a, const RoadObject* b) { return a->id < b->id; });

    for (const RoadObject* obj : ordered) {
        Disposition d = disposition_.of(obj->id);
        if (d == Disposition::removed) continue;
        if (d == Disposition::controlled) {
            // Control needs expert data through the whole warm-up.
            bool ok = true;
            for (int t = 0; t <= cfg_.warmup_steps && ok; ++t) {
                ok = obj->expert.valid[static_cast<std::size_t>(t)];
            }
            if (!ok) {
                result.warnings.push_back("vehicle " + std::to_string(obj->id) +
                                          ": expert data missing during warm-up; removed");
                disposition_.entries[obj->id] = Disposition::removed;
                continue;
            }
        }
        VehicleStatus v;
        v.id = obj->id;
        v.kind = obj->kind;
        v.disposition = d;
        v.goal = Goal{obj->goal_position, obj->goal_speed, obj->goal_heading};
        vehicles_.push_back(v);
        sources_.push_back(obj);
        recorded_[obj->id] = RecordedTrack{};
    }

    // Warm-up: everyone replays expert data from step 0 through the handoff.
    for (int t = 0; t <= cfg_.warmup_steps; ++t) {
        t_ = t;
        for (std::size_t i = 0; i < vehicles_.size(); ++i) {
            VehicleStatus& v = vehicles_[i];
            const auto replayed = replay_step(*sources_[i], t);
            v.present = replayed.has_value();
            if (replayed) v.state = *replayed;
        }
        record_states();
        if (t == 0) continue;
        sync_views();
        for (std::size_t i = 0; i < vehicles_.size(); ++i) {
            VehicleStatus& v = vehicles_[i];
            if (v.disposition != Disposition::controlled) continue;
            const Observation obs = build_observation_from(
                views_[static_cast<std::size_t>(view_of_vehicle_[i])], view_of_vehicle_[i],
                world(), v.goal, 0.0, cfg_.obs, cfg_.view);
            result.warmup[v.id].push_back(obs);
        }
    }

    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        VehicleStatus& v = vehicles_[i];
        if (v.disposition == Disposition::controlled) v.x0 = v.state.position;
    }
    was_reset_ = true;
    return result;
}

std::vector<Transition> Simulation::step(const std::map<int64_t, std::optional<Action>>& actions) {
    if (!was_reset_) throw std::logic_error("Simulation: step before reset");
    if (episode_over()) throw std::logic_error("Simulation: episode is over");

    // Exactly the alive controlled vehicles take actions.
    for (const auto& [id, act] : actions) {
        (void)act;
        const int i = find_vehicle(id);
        if (i < 0 || vehicles_[static_cast<std::size_t>(i)].disposition != Disposition::controlled) {
            throw std::invalid_argument("step: action for non-controlled vehicle " +
                                        std::to_string(id));
        }
        if (!vehicles_[static_cast<std::size_t>(i)].alive) {
            throw std::invalid_argument("step: action for removed vehicle " + std::to_string(id));
        }
    }
    std::vector<std::size_t> acting; // alive controlled, in id order
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        const VehicleStatus& v = vehicles_[i];
        if (v.disposition != Disposition::controlled || !v.alive) continue;
        if (actions.find(v.id) == actions.end()) {
            throw std::invalid_argument("step: missing action for vehicle " + std::to_string(v.id));
        }
        acting.push_back(i);
    }

    const int next_t = t_ + 1;

    // 1. Dynamics.
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        VehicleStatus& v = vehicles_[i];
        if (!v.alive) {
            v.present = false;
            continue;
        }
        if (v.disposition == Disposition::controlled && actions.at(v.id).has_value()) {
            const Action& act = *actions.at(v.id);
            if (std::abs(act.accel) > cfg_.actions.max_accel_bound) {
                throw std::invalid_argument("step: acceleration out of bounds for vehicle " +
                                            std::to_string(v.id));
            }
            v.state = bicycle_step(v.state, act, scenario_->dt, sources_[i]->length, cfg_.v_max,
                                   cfg_.actions.max_heading_rate);
            v.tilt = std::clamp(act.head_tilt, -cfg_.actions.max_tilt, cfg_.actions.max_tilt);
            v.present = true;
            v.expert_driven = false;
        } else {
            const auto replayed = replay_step(*sources_[i], next_t);
            v.present = replayed.has_value();
            if (replayed) v.state = *replayed;
            v.expert_driven = true;
        }
    }
    t_ = next_t;
    record_states();

    // 2. Collisions among present vehicles, and against road edges. Both
    //    flags are sticky; the first cause wins.
    sync_views();
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        VehicleStatus& v = vehicles_[i];
        if (!v.alive || !v.present || v.kind != ObjectKind::vehicle) continue;
        const int32_t vi = view_of_vehicle_[i];
        const OrientedBox& box = views_[static_cast<std::size_t>(vi)].box;
        if (v.collided == CollisionType::none) {
            std::vector<int32_t> near = object_bvh_.query(box.aabb());
            for (const int32_t n : near) {
                if (n == vi) continue;
                const ObjectView& other = views_[static_cast<std::size_t>(n)];
                if (other.kind != ObjectKind::vehicle) continue;
                if (box_overlap(box, other.box)) {
                    v.collided = CollisionType::vehicle;
                    break;
                }
            }
        }
        if (v.collided == CollisionType::none && index_.hits_road_edge(box)) {
            v.collided = CollisionType::road_edge;
        }
    }

    // 3. Goal test for every surviving vehicle; the flag is sticky.
    std::map<int64_t, bool> newly_achieved;
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        VehicleStatus& v = vehicles_[i];
        if (!v.alive || !v.present || v.kind != ObjectKind::vehicle) continue;
        if (!v.goal_achieved && goal_achieved(v.state, v.goal, cfg_)) {
            v.goal_achieved = true;
            newly_achieved[v.id] = true;
        }
    }

    // 4. Rewards for the acting vehicles.
    std::vector<Transition> transitions;
    transitions.reserve(acting.size());
    for (const std::size_t i : acting) {
        VehicleStatus& v = vehicles_[i];
        Transition tr;
        tr.id = v.id;
        tr.reward = dense_reward(v.state, v.goal, v.x0, cfg_);
        if (newly_achieved.count(v.id)) tr.reward += cfg_.goal_bonus;
        tr.collision = v.collided;
        tr.goal = v.goal_achieved;
        tr.done = v.goal_achieved || v.collided != CollisionType::none || episode_over();
        transitions.push_back(std::move(tr));
    }

    // 5. Removals.
    for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        VehicleStatus& v = vehicles_[i];
        if (!v.alive) continue;
        if ((cfg_.remove_on_goal && v.goal_achieved) ||
            (cfg_.remove_on_collision && v.collided != CollisionType::none)) {
            v.alive = false;
            v.present = false;
        }
    }

    // 6. Observations against the post-removal world. Vehicles terminated
    //    this step still observe from their final state.
    sync_views();
    for (Transition& tr : transitions) {
        const int i = find_vehicle(tr.id);
        const VehicleStatus& v = vehicles_[static_cast<std::size_t>(i)];
        const int32_t vi = view_of_vehicle_[static_cast<std::size_t>(i)];
        if (vi >= 0) {
            tr.observation = build_observation(world(), vi, v.goal, v.tilt, cfg_.obs, cfg_.view);
        } else {
            ObjectView ego;
            ego.id = v.id;
            ego.kind = v.kind;
            ego.box = OrientedBox(v.state.position, v.state.heading,
                                  sources_[static_cast<std::size_t>(i)]->length,
                                  sources_[static_cast<std::size_t>(i)]->width);
            ego.velocity = state_velocity(v, *sources_[static_cast<std::size_t>(i)], t_);
            ego.speed = v.state.speed;
            tr.observation =
                build_observation_from(ego, -1, world(), v.goal, v.tilt, cfg_.obs, cfg_.view);
        }
    }
    return transitions;
}

WorldView Simulation::world() const {
    WorldView w;
    w.objects = views_;
    w.object_bvh = &object_bvh_;
    w.road_points = &index_.points;
    w.point_tree = &index_.point_tree;
    w.stop_signs = &index_.stop_signs;
    w.stop_sign_tree = &index_.stop_sign_tree;
    return w;
}

Observation Simulation::observe(int64_t id, double tilt) const {
    const int i = find_vehicle(id);
    if (i < 0) throw std::out_of_range("observe: unknown vehicle id " + std::to_string(id));
    const VehicleStatus& v = vehicles_[static_cast<std::size_t>(i)];
    const int32_t vi = view_of_vehicle_[static_cast<std::size_t>(i)];
    const double applied = std::clamp(tilt, -cfg_.actions.max_tilt, cfg_.actions.max_tilt);
    if (vi >= 0) return build_observation(world(), vi, v.goal, applied, cfg_.obs, cfg_.view);
    ObjectView ego;
    ego.id = v.id;
    ego.kind = v.kind;
    ego.box = OrientedBox(v.state.position, v.state.heading,
                          sources_[static_cast<std::size_t>(i)]->length,
                          sources_[static_cast<std::size_t>(i)]->width);
    ego.speed = v.state.speed;
    return build_observation_from(ego, -1, world(), v.goal, applied, cfg_.obs, cfg_.view);
}

std::vector<ObjectView> replay_views(const Scenario& s, int t, bool include_vru) {
    std::vector<ObjectView> out;
    for (const RoadObject& obj : s.objects) {
        if (!include_vru && obj.kind != ObjectKind::vehicle) continue;
        if (!obj.expert.valid[static_cast<std::size_t>(t)]) continue;
        ObjectView v;
        v.id = obj.id;
        v.kind = obj.kind;
        v.box = obj.box_at(t);
        v.velocity = obj.expert.velocities[static_cast<std::size_t>(t)];
        v.speed = v.velocity.norm();
        out.push_back(v);
    }
    std::sort(out.begin(), out.end(),
              [](const ObjectView& a, const ObjectView& b) { return a.id < b.id; });
    return out;
}

Runner::Runner(Simulation& sim, std::map<int64_t, std::shared_ptr<Policy>> policies)
    : sim_(sim), policies_(std::move(policies)) {
    for (const auto& [id, d] : sim.disposition().entries) {
        if (d == Disposition::controlled &&
            (policies_.find(id) == policies_.end() || policies_.at(id) == nullptr)) {
            throw std::invalid_argument("Runner: no policy for controlled vehicle " +
                                        std::to_string(id));
        }
    }
}

EpisodeRecord Runner::run() {
    const ResetResult reset = sim_.reset();

    std::map<int64_t, Observation> last_obs;
    for (const auto& [id, history] : reset.warmup) {
        if (!history.empty()) last_obs[id] = history.back();
    }
    std::map<int64_t, double> reward_sums;

    while (!sim_.episode_over()) {
        std::map<int64_t, std::optional<Action>> actions;
        for (const VehicleStatus& v : sim_.vehicles()) {
            if (v.disposition != Disposition::controlled || !v.alive) continue;
            actions[v.id] = policies_.at(v.id)->act(v.id, last_obs[v.id]);
        }
        const std::vector<Transition> transitions = sim_.step(actions);
        for (const Transition& tr : transitions) {
            reward_sums[tr.id] += tr.reward;
            last_obs[tr.id] = tr.observation;
        }
    }

    EpisodeRecord record;
    record.scenario_name = sim_.scenario().name;
    record.warnings = reset.warnings;
    for (const VehicleStatus& v : sim_.vehicles()) {
        VehicleRecord r;
        r.id = v.id;
        r.kind = v.kind;
        r.controlled = v.disposition == Disposition::controlled;
        r.goal = v.goal_achieved;
        r.collision = v.collided;
        r.total_reward = reward_sums.count(v.id) ? reward_sums[v.id] : 0.0;
        r.track = sim_.recorded().at(v.id);
        record.vehicles.push_back(std::move(r));
    }
    return record;
}

SimConfig SimConfig::from_json(const std::string& text) {
    ojson j;
    try {
        j = ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    SimConfig cfg;
    const auto num = [&](const char* key, double& out) {
        if (j.contains(key)) out = j.at(key).get<double>();
    };
    const auto integer = [&](const char* key, int& out) {
        if (j.contains(key)) out = j.at(key).get<int>();
    };
    const auto boolean = [&](const char* key, bool& out) {
        if (j.contains(key)) out = j.at(key).get<bool>();
    };
    integer("warmup_steps", cfg.warmup_steps);
    integer("horizon", cfg.horizon);
    num("goal_pos_tol", cfg.goal_pos_tol);
    num("goal_speed_tol", cfg.goal_speed_tol);
    num("goal_heading_tol", cfg.goal_heading_tol);
    num("reward_pos_coef", cfg.reward_pos_coef);
    num("reward_speed_coef", cfg.reward_speed_coef);
    num("reward_heading_coef", cfg.reward_heading_coef);
    num("speed_normalizer", cfg.speed_normalizer);
    num("goal_bonus", cfg.goal_bonus);
    integer("max_controlled", cfg.max_controlled);
    boolean("remove_on_goal", cfg.remove_on_goal);
    boolean("remove_on_collision", cfg.remove_on_collision);
    boolean("include_vru", cfg.include_vru);
    num("v_max", cfg.v_max);
    if (j.contains("view")) {
        const ojson& v = j.at("view");
        if (v.contains("view_angle")) cfg.view.view_angle = v.at("view_angle").get<double>();
        if (v.contains("view_distance")) cfg.view.view_distance = v.at("view_distance").get<double>();
        if (v.contains("samples_per_object")) {
            cfg.view.samples_per_object = v.at("samples_per_object").get<int>();
        }
    }
    const auto axis = [&](const ojson& a) {
        return AxisSpec{a.at("bins").get<int>(), a.at("lo").get<double>(), a.at("hi").get<double>()};
    };
    if (j.contains("actions")) {
        const ojson& a = j.at("actions");
        if (a.contains("accel")) cfg.actions.accel = axis(a.at("accel"));
        if (a.contains("steer")) cfg.actions.steer = axis(a.at("steer"));
        if (a.contains("tilt")) cfg.actions.tilt = axis(a.at("tilt"));
        if (a.contains("max_accel_bound")) {
            cfg.actions.max_accel_bound = a.at("max_accel_bound").get<double>();
        }
        if (a.contains("max_heading_rate")) {
            cfg.actions.max_heading_rate = a.at("max_heading_rate").get<double>();
        }
        if (a.contains("max_tilt")) cfg.actions.max_tilt = a.at("max_tilt").get<double>();
    }
    if (j.contains("obs")) {
        const ojson& o = j.at("obs");
        if (o.contains("max_objects")) cfg.obs.max_objects = o.at("max_objects").get<int>();
        if (o.contains("max_road_points")) {
            cfg.obs.max_road_points = o.at("max_road_points").get<int>();
        }
        if (o.contains("max_stop_signs")) cfg.obs.max_stop_signs = o.at("max_stop_signs").get<int>();
    }
    return cfg;
}

SimConfig SimConfig::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open config '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

std::string SimConfig::to_json() const {
    ojson j;
    j["warmup_steps"] = warmup_steps;
    j["horizon"] = horizon;
    j["goal_pos_tol"] = goal_pos_tol;
    j["goal_speed_tol"] = goal_speed_tol;
    j["goal_heading_tol"] = goal_heading_tol;
    j["reward_pos_coef"] = reward_pos_coef;
    j["reward_speed_coef"] = reward_speed_coef;
    j["reward_heading_coef"] = reward_heading_coef;
    j["speed_normalizer"] = speed_normalizer;
    j["goal_bonus"] = goal_bonus;
    j["max_controlled"] = max_controlled;
    j["remove_on_goal"] = remove_on_goal;
    j["remove_on_collision"] = remove_on_collision;
    j["include_vru"] = include_vru;
    j["v_max"] = v_max;
    j["view"] = {{"view_angle", view.view_angle},
                 {"view_distance", view.view_distance},
                 {"samples_per_object", view.samples_per_object}};
    j["actions"] = {
        {"accel", {{"bins", actions.accel.bins}, {"lo", actions.accel.lo}, {"hi", actions.accel.hi}}},
        {"steer", {{"bins", actions.steer.bins}, {"lo", actions.steer.lo}, {"hi", actions.steer.hi}}},
        {"tilt", {{"bins", actions.tilt.bins}, {"lo", actions.tilt.lo}, {"hi", actions.tilt.hi}}},
        {"max_accel_bound", actions.max_accel_bound},
        {"max_heading_rate", actions.max_heading_rate},
        {"max_tilt", actions.max_tilt},
    };
    j["obs"] = {{"max_objects", obs.max_objects},
                {"max_road_points", obs.max_road_points},
                {"max_stop_signs", obs.max_stop_signs}};
    return j.dump(2) + "\n";
}

} // namespace roadsim
