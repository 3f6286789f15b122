#pragma once

#include "roadsim/sim.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace roadsim {

/// Raw interaction counts above this are reported in the top bin.
inline constexpr int kInteractionBinCap = 3;

struct VehicleOutcome {
    int64_t id = 0;
    bool controlled = false;
    bool goal = false;
    CollisionType collision = CollisionType::none;
    std::optional<double> ade;
    std::optional<double> fde;
    int interactions = 0; // capped at kInteractionBinCap
};

struct Aggregate {
    double goal_rate = 0.0;      // fraction of vehicles that achieved their goal
    double collision_rate = 0.0; // fraction of vehicles with any collision
};

/// Per-vehicle fractions over the given outcomes. Requires at least one
/// vehicle.
Aggregate aggregate(std::span<const VehicleOutcome> outcomes);

struct Displacement {
    double ade = 0.0;
    double fde = 0.0;
};

/// Mean and final L2 distance between the recorded track and the expert
/// trajectory over steps in [t_begin, t_end] where the expert is valid and
/// the agent was present. Empty when no such step exists. Meaningful only
/// for rollouts with removal disabled.
std::optional<Displacement> displacement(const Simulation::RecordedTrack& track,
                                         const Trajectory& expert, int t_begin, int t_end);

/// Interaction proxy: for each vehicle pair, the number of distinct
/// intersection points between their expert-trajectory polylines (segments
/// over consecutive valid steps only). Per-vehicle sums are reported capped
/// at kInteractionBinCap.
std::map<int64_t, int> count_interactions(const Scenario& s);

struct RunReport {
    std::string scenario_name;
    std::string policy;
    uint64_t seed = 0;
    bool removal_disabled = false;
    std::vector<VehicleOutcome> outcomes;
    Aggregate totals;
    std::vector<std::string> warnings;
};

/// Assembles outcomes for the vehicles of one episode. Displacement spans the
/// controlled window (after the warm-up).
RunReport make_report(const EpisodeRecord& episode, const Scenario& scenario,
                      const SimConfig& cfg, const std::string& policy, uint64_t seed,
                      bool removal_disabled);

std::string report_to_json(const RunReport& report);

} // namespace roadsim
