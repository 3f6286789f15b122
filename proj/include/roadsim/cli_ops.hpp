#pragma once

#include "roadsim/metrics.hpp"
#include "roadsim/sim.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace roadsim {

struct AuditEntry {
    std::string file;
    bool ok = false;
    std::string error;
    int vehicles = 0;
    int infeasible_goals = 0;
    int initial_collisions = 0;
    int invalid_at_start = 0;
};

struct AuditReport {
    std::vector<AuditEntry> entries;
    bool schema_ok = true;
    int vehicles = 0;
    int infeasible_goals = 0;
    int initial_collisions = 0;
    int invalid_at_start = 0;
    double infeasible_goal_pct = 0.0;
    double initial_collision_pct = 0.0;
    double invalid_at_start_pct = 0.0;
};

/// Audits one scenario file, or every *.json under a directory. Counting
/// covers all vehicles; percentages are over the corpus total.
AuditReport run_validate(const std::string& path, int workers = 1);
std::string audit_to_json(const AuditReport& report);

struct RolloutOptions {
    std::string scenario_path;
    std::string policy = "replay"; // replay | random | constant:A,S | stdin
    uint64_t seed = 0;
    bool no_removal = false;
    SimConfig config = SimConfig::benchmark_preset();
};

/// Full 90-step episode with the named built-in policy; returns the report.
/// `action_stream` feeds the `stdin` policy (one "accel steer tilt" triple
/// per alive controlled vehicle per step, in ascending id order).
RunReport run_rollout(const RolloutOptions& opts, std::istream* action_stream = nullptr);

struct RenderOptions {
    std::string scenario_path;
    int step = 0;
    int64_t ego_id = 0;
    bool cone_view = true;
    std::string out_path;
    int px = 500;
    double meters_per_px = 0.32;
    SimConfig config = SimConfig::benchmark_preset();
};

void run_render(const RenderOptions& opts);

enum class BenchMode { single, multi };

struct BenchOptions {
    std::string scenario_dir;
    BenchMode mode = BenchMode::single;
    int repeats = 5;
    uint64_t seed = 0;
    int workers = 1;
    int max_agents = 50; // multi mode cap
    SimConfig config = SimConfig::benchmark_preset();
};

struct BenchResult {
    BenchMode mode = BenchMode::single;
    int repeats = 0;
    int files = 0;
    long total_steps = 0;
    double sps_mean = 0.0; // env steps per second, summed per-scenario time
    double sps_std = 0.0;  // population std over repeat means
    std::vector<std::pair<int, double>> agent_curve; // controlled count -> sec/step
    uint64_t state_checksum = 0; // deterministic digest of all simulated states
};

BenchResult run_bench(const BenchOptions& opts);
std::string bench_to_json(const BenchResult& result);

} // namespace roadsim
