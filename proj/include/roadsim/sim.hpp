#pragma once

#include "roadsim/dynamics.hpp"
#include "roadsim/obs.hpp"
#include "roadsim/rng.hpp"
#include "roadsim/scenario.hpp"
#include "roadsim/visibility.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace roadsim {

/// Episode parameters. The default-constructed value is the benchmark
/// preset; every rule bound is pinned here.
struct SimConfig {
    int warmup_steps = 10; // expert-driven context, 1 second
    int horizon = 80;      // controlled steps after the warm-up

    double goal_pos_tol = 1.0;     // m
    double goal_speed_tol = 1.0;   // m/s
    double goal_heading_tol = 0.3; // rad

    double reward_pos_coef = 0.2;
    double reward_speed_coef = 0.2;
    double reward_heading_coef = 0.2;
    double speed_normalizer = 40.0; // m/s
    double goal_bonus = 80.0;       // granted once, on first goal achievement

    int max_controlled = 20;
    bool remove_on_goal = true;
    bool remove_on_collision = true;
    bool include_vru = false;

    double v_max = 100.0; // speed clip for the bicycle model

    ViewConfig view;
    ActionGrid actions;
    ObsLayout obs;

    static SimConfig benchmark_preset() { return SimConfig{}; }
    static SimConfig from_json(const std::string& text);
    static SimConfig load(const std::string& path);
    std::string to_json() const;
};

enum class CollisionType : uint8_t { none, vehicle, road_edge };
const char* to_string(CollisionType t);

struct VehicleStatus {
    int64_t id = 0;
    ObjectKind kind = ObjectKind::vehicle;
    Disposition disposition = Disposition::expert_replay;
    KinState state;
    bool alive = true;   // false once removed
    bool present = true; // false while expert data is missing for the step
    CollisionType collided = CollisionType::none; // sticky
    bool goal_achieved = false;                   // sticky
    bool expert_driven = true; // whether the current state came from expert data
    Vec2 x0{0.0, 0.0}; // position at control handoff
    double tilt = 0.0; // last applied head tilt
    Goal goal;
};

struct Transition {
    int64_t id = 0;
    Observation observation;
    double reward = 0.0;
    bool done = false;
    CollisionType collision = CollisionType::none;
    bool goal = false;
};

struct ResetResult {
    /// Post-transition observations at warm-up steps 1..warmup, newest last.
    std::map<int64_t, std::vector<Observation>> warmup;
    std::vector<std::string> warnings;
};

bool goal_achieved(const KinState& s, const Goal& goal, const SimConfig& cfg);

/// Progress reward: position progress from x0 toward the goal, speed error
/// against the normalizer, and heading error against a full turn, each scaled
/// by its coefficient. When x0 coincides with the goal the position term is
/// granted in full.
double dense_reward(const KinState& s, const Goal& goal, const Vec2& x0, const SimConfig& cfg);

/// One episode over one scenario. Stepping is serialized per instance;
/// distinct instances are independent. Identical (scenario, disposition,
/// config, seed, action sequence) yields bitwise-identical trajectories.
class Simulation {
  public:
    Simulation(std::shared_ptr<const Scenario> scenario, VehicleDisposition disposition,
               SimConfig config, uint64_t seed);

    /// Replays the warm-up from expert data and records x0 at the handoff
    /// step. Controlled vehicles with missing expert data during the warm-up
    /// are demoted to removed with a warning.
    ResetResult reset();

    /// Advances one step. `actions` must contain exactly the alive controlled
    /// ids; an entry without a value replays expert data for that vehicle
    /// this step.
    std::vector<Transition> step(const std::map<int64_t, std::optional<Action>>& actions);

    int current_step() const { return t_; }
    bool episode_over() const { return t_ >= kTrajectoryLen - 1; }

    const std::vector<VehicleStatus>& vehicles() const { return vehicles_; }
    const VehicleStatus& vehicle(int64_t id) const;
    const VehicleDisposition& disposition() const { return disposition_; }
    const SimConfig& config() const { return cfg_; }
    const Scenario& scenario() const { return *scenario_; }
    const ScenarioIndex& index() const { return index_; }

    /// Frozen view of the current world (post-removal snapshot).
    WorldView world() const;

    Observation observe(int64_t id, double tilt) const;

    /// Recorded state per vehicle and step; empty while absent.
    using RecordedTrack = std::array<std::optional<KinState>, kTrajectoryLen>;
    const std::map<int64_t, RecordedTrack>& recorded() const { return recorded_; }

  private:
    void sync_views();
    void record_states();
    int find_vehicle(int64_t id) const;

    std::shared_ptr<const Scenario> scenario_;
    ScenarioIndex index_;
    VehicleDisposition disposition_;
    SimConfig cfg_;
    uint64_t seed_;
    int t_ = 0;
    bool was_reset_ = false;

    std::vector<VehicleStatus> vehicles_; // sorted by id
    std::vector<const RoadObject*> sources_;
    std::map<int64_t, RecordedTrack> recorded_;

    std::vector<ObjectView> views_;
    std::vector<int32_t> view_of_vehicle_; // -1 when not present
    Bvh object_bvh_;
};

/// Builds the per-step object views of a pure expert replay, for rendering
/// and benchmarking outside a Simulation.
std::vector<ObjectView> replay_views(const Scenario& s, int t, bool include_vru);

class Policy {
  public:
    virtual ~Policy() = default;
    /// Empty result means "replay expert data this step".
    virtual std::optional<Action> act(int64_t vehicle_id, const Observation& obs) = 0;
};

class ReplayPolicy final : public Policy {
  public:
    std::optional<Action> act(int64_t, const Observation&) override { return std::nullopt; }
};

class ConstantPolicy final : public Policy {
  public:
    explicit ConstantPolicy(Action a) : action_(a) {}
    std::optional<Action> act(int64_t, const Observation&) override { return action_; }

  private:
    Action action_;
};

class RandomPolicy final : public Policy {
  public:
    RandomPolicy(const ActionGrid& grid, uint64_t seed)
        : actions_(grid_actions(grid)), rng_(seed) {}
    std::optional<Action> act(int64_t, const Observation&) override {
        return actions_[static_cast<std::size_t>(rng_.next_below(actions_.size()))];
    }

  private:
    std::vector<Action> actions_;
    Rng rng_;
};

struct VehicleRecord {
    int64_t id = 0;
    ObjectKind kind = ObjectKind::vehicle;
    bool controlled = false;
    bool goal = false;
    CollisionType collision = CollisionType::none;
    double total_reward = 0.0;
    Simulation::RecordedTrack track;
};

struct EpisodeRecord {
    std::string scenario_name;
    std::vector<VehicleRecord> vehicles;
    std::vector<std::string> warnings;
};

/// Drives one full episode, querying each controlled vehicle's own policy at
/// every step. Every controlled id must be mapped.
class Runner {
  public:
    Runner(Simulation& sim, std::map<int64_t, std::shared_ptr<Policy>> policies);
    EpisodeRecord run();

  private:
    Simulation& sim_;
    std::map<int64_t, std::shared_ptr<Policy>> policies_;
};

} // namespace roadsim
