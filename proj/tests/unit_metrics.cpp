#include "roadsim/metrics.hpp"
#include "roadsim/synthetic.hpp"

#include <doctest.h>

#include <cmath>

using namespace roadsim;

namespace {

EpisodeRecord replay_episode(std::shared_ptr<Scenario> scenario, bool removal) {
    SimConfig cfg;
    cfg.remove_on_goal = removal;
    cfg.remove_on_collision = removal;
    const VehicleDisposition d = select_controlled(*scenario, 0, 1);
    Simulation sim(scenario, d, cfg, 1);
    Runner runner(sim, {});
    return runner.run();
}

} // namespace

TEST_CASE("aggregate: clean replay of a corridor is all goals, no collisions") {
    auto scenario = std::make_shared<Scenario>(
        synthetic::corridor(synthetic::CorridorParams{.length = 400.0, .n_vehicles = 4}));
    const EpisodeRecord episode = replay_episode(scenario, true);
    const RunReport report = make_report(episode, *scenario, SimConfig{}, "replay", 1, false);
    CHECK(report.totals.goal_rate == 1.0);
    CHECK(report.totals.collision_rate == 0.0);
}

TEST_CASE("aggregate: one collision in four vehicles is 25 percent") {
    std::vector<VehicleOutcome> outcomes(4);
    outcomes[2].collision = CollisionType::road_edge;
    outcomes[0].goal = true;
    const Aggregate a = aggregate(outcomes);
    CHECK(a.collision_rate == 0.25);
    CHECK(a.goal_rate == 0.25);
    CHECK_THROWS_AS(aggregate(std::vector<VehicleOutcome>{}), std::invalid_argument);
}

TEST_CASE("displacement: replay equals the expert, so ADE and FDE vanish") {
    auto scenario = std::make_shared<Scenario>(
        synthetic::corridor(synthetic::CorridorParams{.length = 400.0, .n_vehicles = 2}));
    const EpisodeRecord episode = replay_episode(scenario, false);
    for (const VehicleRecord& v : episode.vehicles) {
        const RoadObject* src = nullptr;
        for (const RoadObject& o : scenario->objects) {
            if (o.id == v.id) src = &o;
        }
        const auto d = displacement(v.track, src->expert, 11, 90);
        REQUIRE(d.has_value());
        CHECK(d->ade == 0.0);
        CHECK(d->fde == 0.0);
    }
}

TEST_CASE("displacement: constant lateral offset reads back exactly") {
    auto scenario = std::make_shared<Scenario>(
        synthetic::corridor(synthetic::CorridorParams{.length = 400.0, .n_vehicles = 1}));
    const EpisodeRecord episode = replay_episode(scenario, false);
    Simulation::RecordedTrack track = episode.vehicles[0].track;
    for (auto& s : track) {
        if (s) s->position += Vec2(0.0, 2.0);
    }
    const auto d = displacement(track, scenario->objects[0].expert, 11, 90);
    REQUIRE(d.has_value());
    CHECK(d->ade == doctest::Approx(2.0));
    CHECK(d->fde == doctest::Approx(2.0));
}

TEST_CASE("displacement: stationary agent against a linear ramp") {
    // Expert advances 0.1 m per step over 80 valid steps (1..80); the agent
    // never moves from the origin. Mean error is the ramp mean 4.05, final
    // error is 8.
    Trajectory expert{};
    for (int t = 0; t < kTrajectoryLen; ++t) {
        const auto i = static_cast<std::size_t>(t);
        expert.valid[i] = t >= 1 && t <= 80;
        expert.positions[i] = Vec2(0.1 * t, 0.0);
        expert.headings[i] = 0.0;
        expert.velocities[i] = Vec2(1.0, 0.0);
    }
    Simulation::RecordedTrack track{};
    for (auto& s : track) s = KinState{Vec2(0, 0), 0.0, 0.0};

    const auto d = displacement(track, expert, 0, 90);
    REQUIRE(d.has_value());
    CHECK(d->ade == doctest::Approx(4.05));
    CHECK(d->fde == doctest::Approx(8.0));
}

TEST_CASE("displacement: no valid expert step reports absent") {
    Trajectory expert{};
    for (auto& v : expert.valid) v = false;
    Simulation::RecordedTrack track{};
    CHECK_FALSE(displacement(track, expert, 0, 90).has_value());
}

TEST_CASE("displacement: invariant under rigid transforms of both tracks") {
    auto scenario = std::make_shared<Scenario>(
        synthetic::corridor(synthetic::CorridorParams{.length = 400.0, .n_vehicles = 1}));
    const EpisodeRecord episode = replay_episode(scenario, false);
    Simulation::RecordedTrack track = episode.vehicles[0].track;
    for (auto& s : track) {
        if (s) s->position += Vec2(1.0, -0.5);
    }
    Trajectory expert = scenario->objects[0].expert;
    const auto before = displacement(track, expert, 11, 90);

    const double c = std::cos(0.9), sn = std::sin(0.9);
    const auto rot = [&](const Vec2& p) -> Vec2 {
        return Vec2(c * p.x() - sn * p.y() + 12.0, sn * p.x() + c * p.y() - 7.0);
    };
    for (auto& s : track) {
        if (s) s->position = rot(s->position);
    }
    for (int t = 0; t < kTrajectoryLen; ++t) {
        expert.positions[static_cast<std::size_t>(t)] =
            rot(expert.positions[static_cast<std::size_t>(t)]);
    }
    const auto after = displacement(track, expert, 11, 90);
    REQUIRE(before.has_value());
    REQUIRE(after.has_value());
    CHECK(after->ade == doctest::Approx(before->ade).epsilon(1e-12));
    CHECK(after->fde == doctest::Approx(before->fde).epsilon(1e-12));
}

TEST_CASE("count_interactions: straight crossing pair scores one each") {
    const Scenario s = synthetic::crossing_pair(1);
    const auto counts = count_interactions(s);
    CHECK(counts.at(1) == 1);
    CHECK(counts.at(2) == 1);
}

TEST_CASE("count_interactions: parallel lanes never interact") {
    // Side-by-side lanes; same-lane followers would legitimately count.
    const Scenario s = synthetic::audit_corpus(
        synthetic::AuditCorpusParams{.total = 3, .infeasible = 0, .colliding = 0});
    for (const auto& [id, count] : count_interactions(s)) {
        (void)id;
        CHECK(count == 0);
    }
}

TEST_CASE("count_interactions: following on the same lane is picked up") {
    const Scenario s = synthetic::corridor(synthetic::CorridorParams{.n_vehicles = 2});
    const auto counts = count_interactions(s);
    CHECK(counts.at(1) > 0); // overlapping collinear paths register
    CHECK(counts.at(1) == counts.at(2));
}

TEST_CASE("count_interactions: exact below the cap, binned above") {
    for (int k = 1; k <= 3; ++k) {
        const auto counts = count_interactions(synthetic::crossing_pair(k));
        CHECK(counts.at(1) == k);
        CHECK(counts.at(2) == k);
    }
    const auto capped = count_interactions(synthetic::crossing_pair(5));
    CHECK(capped.at(1) == 3);
    CHECK(capped.at(2) == 3);
}

TEST_CASE("count_interactions: pairs contribute symmetrically") {
    const Scenario s = synthetic::crossing_pair(2);
    const auto counts = count_interactions(s);
    CHECK(counts.at(1) == counts.at(2));
}

TEST_CASE("report: serialization carries rows and totals") {
    auto scenario = std::make_shared<Scenario>(
        synthetic::corridor(synthetic::CorridorParams{.length = 400.0, .n_vehicles = 2}));
    const EpisodeRecord episode = replay_episode(scenario, true);
    const RunReport report = make_report(episode, *scenario, SimConfig{}, "replay", 4, false);
    const std::string text = report_to_json(report);
    CHECK(text.find("\"goal_rate\": 1.0") != std::string::npos);
    CHECK(text.find("\"policy\": \"replay\"") != std::string::npos);
    CHECK(text.find("\"vehicles\"") != std::string::npos);
}
