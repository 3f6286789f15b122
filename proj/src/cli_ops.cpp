#include "roadsim/cli_ops.hpp"

#include "roadsim/rng.hpp"
#include "roadsim/obs.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <istream>
#include <limits>
#include <map>
#include <thread>

namespace roadsim {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> scenario_files(const std::string& path) {
    std::vector<std::string> files;
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json") {
                files.push_back(entry.path().string());
            }
        }
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(path);
    }
    return files;
}

AuditEntry audit_file(const std::string& file) {
    AuditEntry e;
    e.file = file;
    Scenario s;
    try {
        s = load_scenario_file(file);
    } catch (const ScenarioError& err) {
        e.error = err.what();
        return e;
    }
    e.ok = true;
    const ScenarioIndex index = ScenarioIndex::build(s);
    for (const RoadObject& obj : s.objects) {
        if (obj.kind != ObjectKind::vehicle) continue;
        ++e.vehicles;
        if (!obj.expert.valid[0]) {
            ++e.invalid_at_start;
            continue;
        }
        if (goal_infeasible(obj, index)) ++e.infeasible_goals;
        if (initial_collision(obj, s, index)) ++e.initial_collisions;
    }
    return e;
}

} // namespace

AuditReport run_validate(const std::string& path, int workers) {
    const std::vector<std::string> files = scenario_files(path);
    AuditReport report;
    report.entries.resize(files.size());

    const int n_workers = std::max(1, std::min<int>(workers, static_cast<int>(files.size())));
    if (n_workers <= 1) {
        for (std::size_t i = 0; i < files.size(); ++i) report.entries[i] = audit_file(files[i]);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> cursor{0};
        for (int w = 0; w < n_workers; ++w) {
            pool.emplace_back([&]() {
                for (;;) {
                    const std::size_t i = cursor.fetch_add(1);
                    if (i >= files.size()) return;
                    report.entries[i] = audit_file(files[i]);
                }
            });
        }
        for (std::thread& t : pool) t.join();
    }

    for (const AuditEntry& e : report.entries) {
        if (!e.ok) report.schema_ok = false;
        report.vehicles += e.vehicles;
        report.infeasible_goals += e.infeasible_goals;
        report.initial_collisions += e.initial_collisions;
        report.invalid_at_start += e.invalid_at_start;
    }
    if (report.vehicles > 0) {
        const double n = report.vehicles;
        report.infeasible_goal_pct = 100.0 * report.infeasible_goals / n;
        report.initial_collision_pct = 100.0 * report.initial_collisions / n;
        report.invalid_at_start_pct = 100.0 * report.invalid_at_start / n;
    }
    return report;
}

std::string audit_to_json(const AuditReport& report) {
    ojson j;
    j["schema_ok"] = report.schema_ok;
    j["files"] = ojson::array();
    for (const AuditEntry& e : report.entries) {
        ojson f;
        f["file"] = e.file;
        f["ok"] = e.ok;
        if (!e.ok) f["error"] = e.error;
        f["vehicles"] = e.vehicles;
        f["infeasible_goals"] = e.infeasible_goals;
        f["initial_collisions"] = e.initial_collisions;
        f["invalid_at_start"] = e.invalid_at_start;
        j["files"].push_back(std::move(f));
    }
    j["totals"] = {
        {"vehicles", report.vehicles},
        {"infeasible_goals", report.infeasible_goals},
        {"initial_collisions", report.initial_collisions},
        {"invalid_at_start", report.invalid_at_start},
        {"infeasible_goal_pct", report.infeasible_goal_pct},
        {"initial_collision_pct", report.initial_collision_pct},
        {"invalid_at_start_pct", report.invalid_at_start_pct},
    };
    return j.dump(2) + "\n";
}

namespace {

/// Feeds whitespace-separated "accel steer tilt" triples from a stream.
class StreamPolicy final : public Policy {
  public:
    explicit StreamPolicy(std::istream& in) : in_(in) {}
    std::optional<Action> act(int64_t id, const Observation&) override {
        Action a;
        if (!(in_ >> a.accel >> a.steer >> a.head_tilt)) {
            throw std::runtime_error("stdin policy: ran out of actions for vehicle " +
                                     std::to_string(id));
        }
        return a;
    }

  private:
    std::istream& in_;
};

std::shared_ptr<Policy> make_policy(const std::string& name, const ActionGrid& grid,
                                    uint64_t seed, std::istream* stream) {
    if (name == "replay") return std::make_shared<ReplayPolicy>();
    if (name == "random") return std::make_shared<RandomPolicy>(grid, seed);
    if (name.rfind("constant", 0) == 0) {
        Action a;
        if (name.size() > 9 && name[8] == ':') {
            const std::string args = name.substr(9);
            const auto comma = args.find(',');
            if (comma == std::string::npos) {
                throw std::invalid_argument("constant policy expects 'constant:A,S'");
            }
            a.accel = std::stod(args.substr(0, comma));
            a.steer = std::stod(args.substr(comma + 1));
        } else if (name != "constant") {
            throw std::invalid_argument("unknown policy '" + name + "'");
        }
        return std::make_shared<ConstantPolicy>(a);
    }
    if (name == "stdin") {
        if (stream == nullptr) throw std::invalid_argument("stdin policy needs an action stream");
        return std::make_shared<StreamPolicy>(*stream);
    }
    throw std::invalid_argument("unknown policy '" + name + "'");
}

} // namespace

RunReport run_rollout(const RolloutOptions& opts, std::istream* action_stream) {
    auto scenario = std::make_shared<Scenario>(load_scenario_file(opts.scenario_path));
    SimConfig cfg = opts.config;
    if (opts.no_removal) {
        cfg.remove_on_goal = false;
        cfg.remove_on_collision = false;
    }
    const VehicleDisposition disposition =
        select_controlled(*scenario, cfg.max_controlled, opts.seed, cfg.include_vru);

    Simulation sim(scenario, disposition, cfg, opts.seed);
    std::map<int64_t, std::shared_ptr<Policy>> policies;
    uint64_t policy_seed = opts.seed;
    std::shared_ptr<Policy> shared_stream;
    for (const auto& [id, d] : disposition.entries) {
        if (d != Disposition::controlled) continue;
        if (opts.policy == "stdin") {
            if (!shared_stream) {
                shared_stream = make_policy(opts.policy, cfg.actions, 0, action_stream);
            }
            policies[id] = shared_stream;
        } else {
            policies[id] = make_policy(opts.policy, cfg.actions, ++policy_seed, action_stream);
        }
    }

    Runner runner(sim, std::move(policies));
    const EpisodeRecord episode = runner.run();
    return make_report(episode, *scenario, cfg, opts.policy, opts.seed, opts.no_removal);
}

void run_render(const RenderOptions& opts) {
    const Scenario scenario = load_scenario_file(opts.scenario_path);
    if (opts.step < 0 || opts.step >= kTrajectoryLen) {
        throw std::invalid_argument("render: step out of range");
    }
    const ScenarioIndex index = ScenarioIndex::build(scenario);
    const std::vector<ObjectView> views =
        replay_views(scenario, opts.step, opts.config.include_vru);
    int32_t ego_index = -1;
    for (std::size_t i = 0; i < views.size(); ++i) {
        if (views[i].id == opts.ego_id) ego_index = static_cast<int32_t>(i);
    }
    if (ego_index < 0) {
        throw std::invalid_argument("render: ego vehicle " + std::to_string(opts.ego_id) +
                                    " is not present at step " + std::to_string(opts.step));
    }
    const Bvh bvh = build_object_bvh(views);
    WorldView w;
    w.objects = views;
    w.object_bvh = &bvh;
    w.road_points = &index.points;
    w.point_tree = &index.point_tree;
    w.stop_signs = &index.stop_signs;
    w.stop_sign_tree = &index.stop_sign_tree;

    RasterConfig rc;
    rc.px = opts.px;
    rc.meters_per_px = opts.meters_per_px;
    rc.cone_only = opts.cone_view;
    rc.view = opts.config.view;
    write_png(rasterize(w, ego_index, rc), opts.out_path);
}

namespace {

void fold_state(uint64_t& checksum, const KinState& s) {
    const auto mix = [&](double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        checksum ^= bits + 0x9e3779b97f4a7c15ull + (checksum << 6) + (checksum >> 2);
    };
    mix(s.position.x());
    mix(s.position.y());
    mix(s.heading);
    mix(s.speed);
}

struct LoadedScenario {
    std::shared_ptr<Scenario> scenario;
    ScenarioIndex index;
    std::vector<int64_t> controllable; // ids eligible for control
};

LoadedScenario load_for_bench(const std::string& file, uint64_t seed) {
    LoadedScenario out;
    out.scenario = std::make_shared<Scenario>(load_scenario_file(file));
    out.index = ScenarioIndex::build(*out.scenario);
    const VehicleDisposition d =
        select_controlled(*out.scenario, std::numeric_limits<int>::max(), seed, false);
    out.controllable = d.controlled_ids();
    return out;
}

/// Single-agent procedure: at every step pick one agent at random, replay
/// everyone else, build the agent's observation, take a random action, and
/// advance. Collision checks run every step.
double bench_single_file(const LoadedScenario& ls, const SimConfig& cfg, Rng& rng, long& steps,
                         uint64_t& checksum) {
    const Scenario& s = *ls.scenario;
    const std::vector<Action> actions = grid_actions(cfg.actions);
    std::map<int64_t, const RoadObject*> by_id;
    for (const RoadObject& o : s.objects) by_id[o.id] = &o;

    const auto start = std::chrono::steady_clock::now();
    for (int t = 0; t + 1 < kTrajectoryLen; ++t) {
        std::vector<ObjectView> views = replay_views(s, t, cfg.include_vru);
        const Bvh bvh = build_object_bvh(views);
        WorldView w;
        w.objects = views;
        w.object_bvh = &bvh;
        w.road_points = &ls.index.points;
        w.point_tree = &ls.index.point_tree;
        w.stop_signs = &ls.index.stop_signs;
        w.stop_sign_tree = &ls.index.stop_sign_tree;

        if (!ls.controllable.empty()) {
            const int64_t agent_id =
                ls.controllable[static_cast<std::size_t>(rng.next_below(ls.controllable.size()))];
            int32_t ego_index = -1;
            for (std::size_t i = 0; i < views.size(); ++i) {
                if (views[i].id == agent_id) ego_index = static_cast<int32_t>(i);
            }
            if (ego_index >= 0) {
                const RoadObject& src = *by_id.at(agent_id);
                const Goal goal{src.goal_position, src.goal_speed, src.goal_heading};
                const Observation obs =
                    build_observation(w, ego_index, goal, 0.0, cfg.obs, cfg.view);
                (void)obs;
                const Action act =
                    actions[static_cast<std::size_t>(rng.next_below(actions.size()))];
                const ObjectView& ego = views[static_cast<std::size_t>(ego_index)];
                const KinState next = bicycle_step(
                    KinState{ego.box.center, ego.box.heading, ego.speed}, act, s.dt,
                    ego.box.length, cfg.v_max, cfg.actions.max_heading_rate);
                fold_state(checksum, next);
            }
        }

        // Collision pass over the replay world.
        for (std::size_t i = 0; i < views.size(); ++i) {
            const ObjectView& v = views[i];
            if (v.kind != ObjectKind::vehicle) continue;
            std::vector<int32_t> near = bvh.query(v.box.aabb());
            bool hit = false;
            for (const int32_t n : near) {
                if (n == static_cast<int32_t>(i)) continue;
                if (box_overlap(v.box, views[static_cast<std::size_t>(n)].box)) {
                    hit = true;
                    break;
                }
            }
            if (!hit) hit = ls.index.hits_road_edge(v.box);
            checksum ^= (static_cast<uint64_t>(hit) << (i % 61)) + 0x2545f4914f6cdd1dull;
        }
        ++steps;
    }
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

/// Multi-agent procedure: observations for every controlled agent, then one
/// simulator step. Removal is disabled so the agent count stays constant.
double bench_multi_file(const LoadedScenario& ls, const SimConfig& base_cfg, int max_agents,
                        uint64_t seed, long& steps, int& agents, uint64_t& checksum) {
    SimConfig cfg = base_cfg;
    cfg.remove_on_goal = false;
    cfg.remove_on_collision = false;
    cfg.max_controlled = max_agents;
    const VehicleDisposition disposition =
        select_controlled(*ls.scenario, cfg.max_controlled, seed, cfg.include_vru);
    Simulation sim(ls.scenario, disposition, cfg, seed);
    sim.reset();

    std::vector<int64_t> controlled;
    for (const VehicleStatus& v : sim.vehicles()) {
        if (v.disposition == Disposition::controlled) controlled.push_back(v.id);
    }
    agents = static_cast<int>(controlled.size());
    if (agents == 0) return 0.0;

    RandomPolicy policy(cfg.actions, seed ^ 0xabcdef12345ull);
    Observation dummy;

    const auto start = std::chrono::steady_clock::now();
    while (!sim.episode_over()) {
        std::map<int64_t, std::optional<Action>> acts;
        for (const VehicleStatus& v : sim.vehicles()) {
            if (v.disposition != Disposition::controlled || !v.alive) continue;
            acts[v.id] = policy.act(v.id, dummy);
        }
        const std::vector<Transition> transitions = sim.step(acts);
        for (const Transition& tr : transitions) {
            checksum ^= static_cast<uint64_t>(tr.observation.features.size()) * 0x100000001b3ull;
        }
        ++steps;
    }
    for (const auto& [id, track] : sim.recorded()) {
        (void)id;
        for (const auto& st : track) {
            if (st) fold_state(checksum, *st);
        }
    }
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

} // namespace

BenchResult run_bench(const BenchOptions& opts) {
    if (!fs::exists(opts.scenario_dir)) {
        throw std::invalid_argument("bench: no such path '" + opts.scenario_dir + "'");
    }
    const std::vector<std::string> files = scenario_files(opts.scenario_dir);
    if (files.empty()) throw std::invalid_argument("bench: no scenario files under '" +
                                                   opts.scenario_dir + "'");
    BenchResult result;
    result.mode = opts.mode;
    result.repeats = opts.repeats;
    result.files = static_cast<int>(files.size());

    std::vector<LoadedScenario> scenarios;
    scenarios.reserve(files.size());
    for (const std::string& f : files) scenarios.push_back(load_for_bench(f, opts.seed));

    std::vector<double> repeat_sps;
    std::map<int, std::pair<double, long>> curve; // agents -> (sec sum, steps)
    uint64_t checksum = 0;

    for (int rep = 0; rep < opts.repeats; ++rep) {
        double elapsed_sum = 0.0;
        long steps = 0;
        std::vector<double> elapsed_per_file(scenarios.size(), 0.0);
        std::vector<long> steps_per_file(scenarios.size(), 0);
        std::vector<int> agents_per_file(scenarios.size(), 0);
        std::vector<uint64_t> checksum_per_file(scenarios.size(), 0);

        const auto work = [&](std::size_t i) {
            Rng rng(opts.seed + 0x51ed270b * static_cast<uint64_t>(rep) + i);
            if (opts.mode == BenchMode::single) {
                elapsed_per_file[i] = bench_single_file(scenarios[i], opts.config, rng,
                                                        steps_per_file[i], checksum_per_file[i]);
            } else {
                elapsed_per_file[i] =
                    bench_multi_file(scenarios[i], opts.config, opts.max_agents,
                                     opts.seed + static_cast<uint64_t>(rep), steps_per_file[i],
                                     agents_per_file[i], checksum_per_file[i]);
            }
        };
        const int n_workers = std::max(1, std::min<int>(opts.workers, static_cast<int>(scenarios.size())));
        if (n_workers <= 1) {
            for (std::size_t i = 0; i < scenarios.size(); ++i) work(i);
        } else {
            std::atomic<std::size_t> cursor{0};
            std::vector<std::thread> pool;
            for (int t = 0; t < n_workers; ++t) {
                pool.emplace_back([&]() {
                    for (;;) {
                        const std::size_t i = cursor.fetch_add(1);
                        if (i >= scenarios.size()) return;
                        work(i);
                    }
                });
            }
            for (std::thread& t : pool) t.join();
        }

        for (std::size_t i = 0; i < scenarios.size(); ++i) {
            elapsed_sum += elapsed_per_file[i];
            steps += steps_per_file[i];
            checksum ^= checksum_per_file[i];
            if (opts.mode == BenchMode::multi && steps_per_file[i] > 0) {
                auto& [sec, n] = curve[agents_per_file[i]];
                sec += elapsed_per_file[i];
                n += steps_per_file[i];
            }
        }
        result.total_steps += steps;
        repeat_sps.push_back(elapsed_sum > 0.0 ? static_cast<double>(steps) / elapsed_sum : 0.0);
    }

    double mean = 0.0;
    for (const double v : repeat_sps) mean += v;
    mean /= static_cast<double>(repeat_sps.size());
    double var = 0.0;
    for (const double v : repeat_sps) var += (v - mean) * (v - mean);
    var /= static_cast<double>(repeat_sps.size());
    result.sps_mean = mean;
    result.sps_std = std::sqrt(var);
    for (const auto& [agents, acc] : curve) {
        result.agent_curve.emplace_back(agents, acc.first / static_cast<double>(acc.second));
    }
    result.state_checksum = checksum;
    return result;
}

std::string bench_to_json(const BenchResult& result) {
    ojson j;
    j["mode"] = result.mode == BenchMode::single ? "single" : "multi";
    j["repeats"] = result.repeats;
    j["files"] = result.files;
    j["total_steps"] = result.total_steps;
    j["sps_mean"] = result.sps_mean;
    j["sps_std"] = result.sps_std;
    j["agent_curve"] = ojson::array();
    for (const auto& [agents, sec] : result.agent_curve) {
        j["agent_curve"].push_back({{"agents", agents}, {"sec_per_step", sec}});
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(result.state_checksum));
    j["state_checksum"] = buf;
    return j.dump(2) + "\n";
}

} // namespace roadsim
