#include "roadsim/sim.hpp"
#include "roadsim/metrics.hpp"
#include "roadsim/synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace roadsim;

namespace {

std::shared_ptr<Scenario> corridor_scenario(int n_vehicles, double speed = 8.0) {
    return std::make_shared<Scenario>(synthetic::corridor(synthetic::CorridorParams{
        .length = 400.0, .n_vehicles = n_vehicles, .speed = speed, .gap = 40.0}));
}

VehicleDisposition all_replay(const Scenario& s) {
    return select_controlled(s, 0, 1);
}

VehicleDisposition control_all(const Scenario& s) {
    return select_controlled(s, 1000, 1);
}

std::map<int64_t, std::optional<Action>> replay_actions(const Simulation& sim) {
    std::map<int64_t, std::optional<Action>> acts;
    for (const VehicleStatus& v : sim.vehicles()) {
        if (v.disposition == Disposition::controlled && v.alive) acts[v.id] = std::nullopt;
    }
    return acts;
}

} // namespace

TEST_CASE("goal_achieved: tolerance triple") {
    const SimConfig cfg;
    const Goal goal{Vec2(0, 0), 10.0, 0.0};
    CHECK(goal_achieved(KinState{Vec2(0.9, 0), 0.2, 10.5}, goal, cfg));
    CHECK_FALSE(goal_achieved(KinState{Vec2(1.1, 0), 0.0, 10.0}, goal, cfg));
    CHECK_FALSE(goal_achieved(KinState{Vec2(0.5, 0), 0.31, 10.0}, goal, cfg));
}

TEST_CASE("dense_reward: boundary values") {
    const SimConfig cfg;
    const Goal goal{Vec2(100, 0), 10.0, 1.0};
    const Vec2 x0(0, 0);
    CHECK(dense_reward(KinState{x0, 1.0, 10.0}, goal, x0, cfg) == 0.2 + 0.2);
    CHECK(dense_reward(KinState{Vec2(100, 0), 1.0, 10.0}, goal, x0, cfg) == 0.2 + 0.2 + 0.2);
    // Speed term vanishes at a 40 m/s error.
    const double r = dense_reward(KinState{Vec2(100, 0), 1.0, 50.0}, goal, x0, cfg);
    CHECK(r == doctest::Approx(0.4));
}

TEST_CASE("dense_reward: control starting at the goal still grants the position term") {
    const SimConfig cfg;
    const Goal goal{Vec2(5, 5), 0.0, 0.0};
    CHECK(dense_reward(KinState{Vec2(5, 5), 0.0, 0.0}, goal, Vec2(5, 5), cfg) ==
          0.2 + 0.2 + 0.2);
}

TEST_CASE("dense_reward: bounded by 0.6, nonnegative between x0 and goal") {
    const SimConfig cfg;
    const Goal goal{Vec2(50, 0), 5.0, 0.0};
    const Vec2 x0(0, 0);
    for (double f = 0.0; f <= 1.0; f += 0.05) {
        for (double dv = -30.0; dv <= 30.0; dv += 10.0) {
            const KinState s{Vec2(50.0 * f, 0), 0.0, 5.0 + dv};
            const double r = dense_reward(s, goal, x0, cfg);
            CHECK(r <= 0.6 + 1e-12);
            CHECK(r >= 0.0);
        }
    }
}

TEST_CASE("reset: replay world equals expert data at the handoff step") {
    auto scenario = corridor_scenario(3);
    Simulation sim(scenario, all_replay(*scenario), SimConfig{}, 1);
    sim.reset();
    CHECK(sim.current_step() == 10);
    for (const VehicleStatus& v : sim.vehicles()) {
        const RoadObject* src = nullptr;
        for (const RoadObject& o : scenario->objects) {
            if (o.id == v.id) src = &o;
        }
        REQUIRE(src != nullptr);
        CHECK(v.state.position == src->expert.positions[10]);
        CHECK(v.state.heading == src->expert.headings[10]);
        CHECK(v.state.speed == src->expert.velocities[10].norm());
    }
}

TEST_CASE("reset: warm-up history has exactly 10 observations per controlled vehicle") {
    auto scenario = corridor_scenario(2);
    const VehicleDisposition d = control_all(*scenario);
    REQUIRE(d.count(Disposition::controlled) == 2);
    Simulation sim(scenario, d, SimConfig{}, 1);
    const ResetResult r = sim.reset();
    CHECK(r.warmup.size() == 2);
    for (const auto& [id, history] : r.warmup) {
        (void)id;
        CHECK(history.size() == 10);
    }
}

TEST_CASE("reset: identical seeds reset identically") {
    auto scenario = corridor_scenario(2);
    const VehicleDisposition d = control_all(*scenario);
    Simulation a(scenario, d, SimConfig{}, 7);
    Simulation b(scenario, d, SimConfig{}, 7);
    const ResetResult ra = a.reset();
    const ResetResult rb = b.reset();
    for (const auto& [id, ha] : ra.warmup) {
        const auto& hb = rb.warmup.at(id);
        REQUIRE(ha.size() == hb.size());
        for (std::size_t i = 0; i < ha.size(); ++i) {
            CHECK(ha[i].features == hb[i].features);
        }
    }
}

TEST_CASE("reset: controlled vehicle with missing warm-up data is demoted") {
    auto scenario = corridor_scenario(2);
    Scenario patched = *scenario;
    patched.objects[0].expert.valid[5] = false;
    auto shared = std::make_shared<Scenario>(patched);
    VehicleDisposition d;
    d.entries[1] = Disposition::controlled;
    d.entries[2] = Disposition::controlled;
    Simulation sim(shared, d, SimConfig{}, 1);
    const ResetResult r = sim.reset();
    CHECK(r.warnings.size() == 1);
    CHECK(r.warmup.size() == 1);
    CHECK(sim.vehicles().size() == 1);
    CHECK(sim.vehicles()[0].id == 2);
}

TEST_CASE("step: controlled replay reproduces expert trajectories bitwise") {
    auto scenario = corridor_scenario(3);
    SimConfig cfg;
    cfg.remove_on_goal = false;
    cfg.remove_on_collision = false;
    Simulation sim(scenario, control_all(*scenario), cfg, 1);
    sim.reset();
    while (!sim.episode_over()) sim.step(replay_actions(sim));

    for (const RoadObject& src : scenario->objects) {
        const auto& track = sim.recorded().at(src.id);
        for (int t = 0; t < kTrajectoryLen; ++t) {
            const auto i = static_cast<std::size_t>(t);
            REQUIRE(track[i].has_value());
            CHECK(track[i]->position == src.expert.positions[i]);
            CHECK(track[i]->heading == src.expert.headings[i]);
            CHECK(track[i]->speed == src.expert.velocities[i].norm());
        }
    }
}

TEST_CASE("step: lone vehicle drives to its goal, banks the bonus, and is removed") {
    auto scenario = corridor_scenario(1);
    Simulation sim(scenario, control_all(*scenario), SimConfig{}, 1);
    sim.reset();

    bool saw_bonus = false;
    int done_step = -1;
    while (!sim.episode_over()) {
        const auto acts = replay_actions(sim);
        if (acts.empty()) break;
        // Keep driving exactly like the expert, but through the dynamics.
        std::map<int64_t, std::optional<Action>> control;
        control[1] = Action{0.0, 0.0, 0.0};
        const auto transitions = sim.step(control);
        REQUIRE(transitions.size() == 1);
        const Transition& tr = transitions[0];
        CHECK(tr.reward >= 0.0);
        if (tr.reward > SimConfig{}.goal_bonus) {
            saw_bonus = true;
            CHECK(tr.goal);
            CHECK(tr.done);
            done_step = sim.current_step();
        }
    }
    CHECK(saw_bonus);
    CHECK(done_step <= 90);
    CHECK_FALSE(sim.vehicle(1).alive);
    CHECK(sim.vehicle(1).goal_achieved);
}

TEST_CASE("step: rear-end collision flags both vehicles") {
    auto scenario = corridor_scenario(2);
    // Vehicle 2 starts 40 m ahead of vehicle 1, both at 8 m/s. Control
    // vehicle 2 to brake hard; the replaying vehicle 1 rams it.
    VehicleDisposition d;
    d.entries[1] = Disposition::expert_replay;
    d.entries[2] = Disposition::controlled;
    Simulation sim(scenario, d, SimConfig{}, 1);
    sim.reset();
    bool collided = false;
    while (!sim.episode_over() && !collided) {
        std::map<int64_t, std::optional<Action>> acts;
        if (sim.vehicle(2).alive) acts[2] = Action{-3.0, 0.0, 0.0};
        const auto transitions = sim.step(acts);
        for (const Transition& tr : transitions) {
            if (tr.collision == CollisionType::vehicle) collided = true;
        }
    }
    CHECK(collided);
    CHECK(sim.vehicle(1).collided == CollisionType::vehicle);
    CHECK(sim.vehicle(2).collided == CollisionType::vehicle);
    CHECK_FALSE(sim.vehicle(1).alive);
    CHECK_FALSE(sim.vehicle(2).alive);
}

TEST_CASE("step: steering into the corridor wall is a road edge collision") {
    auto scenario = corridor_scenario(1);
    Simulation sim(scenario, control_all(*scenario), SimConfig{}, 1);
    sim.reset();
    CollisionType hit = CollisionType::none;
    while (!sim.episode_over() && hit == CollisionType::none) {
        std::map<int64_t, std::optional<Action>> acts;
        if (!sim.vehicle(1).alive) break;
        acts[1] = Action{0.0, 0.7, 0.0};
        for (const Transition& tr : sim.step(acts)) hit = tr.collision;
    }
    CHECK(hit == CollisionType::road_edge);
}

TEST_CASE("step: rejects missing and stale actions") {
    auto scenario = corridor_scenario(2);
    Simulation sim(scenario, control_all(*scenario), SimConfig{}, 1);
    sim.reset();

    std::map<int64_t, std::optional<Action>> missing;
    missing[1] = Action{};
    CHECK_THROWS_AS(sim.step(missing), std::invalid_argument);

    std::map<int64_t, std::optional<Action>> unknown = replay_actions(sim);
    unknown[99] = Action{};
    CHECK_THROWS_AS(sim.step(unknown), std::invalid_argument);

    std::map<int64_t, std::optional<Action>> wild = replay_actions(sim);
    wild[1] = Action{20.0, 0.0, 0.0};
    CHECK_THROWS_AS(sim.step(wild), std::invalid_argument);
}

TEST_CASE("step: flickering replay vehicles vanish without teleporting") {
    auto scenario = corridor_scenario(2);
    Scenario patched = *scenario;
    for (int t = 30; t < 40; ++t) patched.objects[0].expert.valid[static_cast<std::size_t>(t)] = false;
    auto shared = std::make_shared<Scenario>(patched);
    Simulation sim(shared, all_replay(*shared), SimConfig{}, 1);
    sim.reset();
    while (!sim.episode_over()) sim.step({});
    const auto& track = sim.recorded().at(1);
    for (int t = 30; t < 40; ++t) CHECK_FALSE(track[static_cast<std::size_t>(t)].has_value());
    CHECK(track[40].has_value());
    CHECK(track[40]->position == patched.objects[0].expert.positions[40]);
}

TEST_CASE("step: disposition categories only ever change to removed") {
    auto scenario = corridor_scenario(3);
    const VehicleDisposition d = select_controlled(*scenario, 1, 5);
    Simulation sim(scenario, d, SimConfig{}, 5);
    sim.reset();
    std::map<int64_t, Disposition> initial;
    for (const VehicleStatus& v : sim.vehicles()) initial[v.id] = v.disposition;
    while (!sim.episode_over()) sim.step(replay_actions(sim));
    for (const VehicleStatus& v : sim.vehicles()) {
        CHECK(v.disposition == initial.at(v.id));
    }
}

TEST_CASE("runner: unmapped controlled id is a config error") {
    auto scenario = corridor_scenario(2);
    Simulation sim(scenario, control_all(*scenario), SimConfig{}, 1);
    std::map<int64_t, std::shared_ptr<Policy>> policies;
    policies[1] = std::make_shared<ReplayPolicy>();
    CHECK_THROWS_AS(Runner(sim, policies), std::invalid_argument);
}

TEST_CASE("runner: per-vehicle policies act independently") {
    auto scenario = corridor_scenario(2, 5.0);
    SimConfig cfg;
    cfg.remove_on_collision = false;
    cfg.remove_on_goal = false;
    Simulation sim(scenario, control_all(*scenario), cfg, 1);
    std::map<int64_t, std::shared_ptr<Policy>> policies;
    policies[1] = std::make_shared<ConstantPolicy>(Action{0.0, 0.3, 0.0});
    policies[2] = std::make_shared<ConstantPolicy>(Action{0.0, -0.3, 0.0});
    Runner runner(sim, policies);
    runner.run();
    // Left-steering vehicle curls up, right-steering curls down.
    const auto& t1 = sim.recorded().at(1);
    const auto& t2 = sim.recorded().at(2);
    CHECK(t1[30]->position.y() > 0.5);
    CHECK(t2[30]->position.y() < -0.5);
}

TEST_CASE("runner: seeded random policies roll out deterministically") {
    auto scenario = corridor_scenario(2);
    const VehicleDisposition d = control_all(*scenario);
    SimConfig cfg;
    cfg.remove_on_collision = false;
    cfg.remove_on_goal = false;

    const auto roll = [&]() {
        Simulation sim(scenario, d, cfg, 3);
        std::map<int64_t, std::shared_ptr<Policy>> policies;
        policies[1] = std::make_shared<RandomPolicy>(cfg.actions, 11);
        policies[2] = std::make_shared<RandomPolicy>(cfg.actions, 22);
        Runner runner(sim, policies);
        runner.run();
        return sim.recorded();
    };
    const auto a = roll();
    const auto b = roll();
    for (const auto& [id, track] : a) {
        const auto& other = b.at(id);
        for (int t = 0; t < kTrajectoryLen; ++t) {
            const auto i = static_cast<std::size_t>(t);
            REQUIRE(track[i].has_value() == other[i].has_value());
            if (track[i]) {
                CHECK(track[i]->position == other[i]->position);
                CHECK(track[i]->heading == other[i]->heading);
                CHECK(track[i]->speed == other[i]->speed);
            }
        }
    }
}

TEST_CASE("runner: episodes span exactly 91 recorded states") {
    auto scenario = corridor_scenario(1);
    Simulation sim(scenario, all_replay(*scenario), SimConfig{}, 1);
    std::map<int64_t, std::shared_ptr<Policy>> policies;
    Runner runner(sim, policies);
    runner.run();
    CHECK(sim.current_step() == 90);
    CHECK(sim.episode_over());
    CHECK_THROWS_AS(sim.step({}), std::logic_error);
}

TEST_CASE("config: benchmark preset round-trips through JSON") {
    const SimConfig preset = SimConfig::benchmark_preset();
    const SimConfig back = SimConfig::from_json(preset.to_json());
    CHECK(back.to_json() == preset.to_json());
    CHECK(back.goal_pos_tol == 1.0);
    CHECK(back.goal_speed_tol == 1.0);
    CHECK(back.goal_heading_tol == 0.3);
    CHECK(back.goal_bonus == 80.0);
    CHECK(back.speed_normalizer == 40.0);
    CHECK(back.horizon == 80);
    CHECK(back.warmup_steps == 10);
    CHECK(back.max_controlled == 20);
    CHECK(back.view.view_angle == doctest::Approx(2.0 * kPi / 3.0));
    CHECK(back.view.view_distance == 80.0);
    CHECK(back.actions.max_heading_rate == doctest::Approx(40.0 * kPi / 180.0));
    CHECK(back.actions.max_tilt == doctest::Approx(kPi / 2.0));
}
