#include "roadsim/cli_ops.hpp"
#include "roadsim/scenario.hpp"
#include "roadsim/sim.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

void write_or_print(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
    out << text;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D partially observable multi-agent driving simulator"};
    app.require_subcommand(1);
    app.fallthrough(); // accept --config after the subcommand name too

    std::string config_path;
    app.add_option("--config", config_path, "simulation config JSON (defaults to the benchmark preset)");

    // bench
    auto* bench = app.add_subcommand("bench", "measure steps-per-second over a scenario directory");
    std::string bench_dir;
    std::string bench_mode = "single";
    int repeats = 5;
    uint64_t bench_seed = 0;
    int bench_workers = 1;
    int max_agents = 50;
    std::string bench_out;
    bench->add_option("--scenarios", bench_dir, "scenario directory")->required();
    bench->add_option("--mode", bench_mode, "single|multi")->check(CLI::IsMember({"single", "multi"}));
    bench->add_option("--repeats", repeats, "benchmark repetitions");
    bench->add_option("--seed", bench_seed, "rng seed");
    bench->add_option("--workers", bench_workers, "worker threads, one scenario per worker");
    bench->add_option("--max-agents", max_agents, "controlled-agent cap in multi mode");
    bench->add_option("--out", bench_out, "write the JSON result here instead of stdout");

    // validate
    auto* validate = app.add_subcommand("validate", "audit scenario files");
    std::string validate_path;
    int validate_workers = 1;
    std::string validate_out;
    validate->add_option("path", validate_path, "scenario file or directory")->required();
    validate->add_option("--workers", validate_workers, "worker threads");
    validate->add_option("--out", validate_out, "write the JSON audit here instead of stdout");

    // rollout
    auto* rollout = app.add_subcommand("rollout", "run one episode and write a report");
    std::string rollout_scenario;
    std::string policy = "replay";
    uint64_t rollout_seed = 0;
    bool no_removal = false;
    std::string rollout_out;
    rollout->add_option("--scenario", rollout_scenario, "scenario file")->required();
    rollout->add_option("--policy", policy, "replay | random | constant:A,S | stdin");
    rollout->add_option("--seed", rollout_seed, "rng seed");
    rollout->add_flag("--no-removal", no_removal, "keep vehicles after goal or collision");
    rollout->add_option("--out", rollout_out, "write the JSON report here instead of stdout");

    // render
    auto* render = app.add_subcommand("render", "draw one step to a PNG");
    std::string render_scenario;
    int step = 0;
    int64_t ego_id = 0;
    std::string view = "cone";
    std::string render_out = "frame.png";
    int px = 500;
    double mpp = 0.32;
    render->add_option("--scenario", render_scenario, "scenario file")->required();
    render->add_option("--step", step, "expert step to draw (0..90)");
    render->add_option("--ego", ego_id, "viewing vehicle id")->required();
    render->add_option("--view", view, "cone|full")->check(CLI::IsMember({"cone", "full"}));
    render->add_option("--out", render_out, "output PNG path");
    render->add_option("--px", px, "image resolution");
    render->add_option("--mpp", mpp, "meters per pixel");

    CLI11_PARSE(app, argc, argv);

    try {
        roadsim::SimConfig config = config_path.empty()
                                        ? roadsim::SimConfig::benchmark_preset()
                                        : roadsim::SimConfig::load(config_path);
        if (bench->parsed()) {
            roadsim::BenchOptions opts;
            opts.scenario_dir = bench_dir;
            opts.mode = bench_mode == "single" ? roadsim::BenchMode::single
                                               : roadsim::BenchMode::multi;
            opts.repeats = repeats;
            opts.seed = bench_seed;
            opts.workers = bench_workers;
            opts.max_agents = max_agents;
            opts.config = config;
            write_or_print(roadsim::bench_to_json(roadsim::run_bench(opts)), bench_out);
        } else if (validate->parsed()) {
            const roadsim::AuditReport report = roadsim::run_validate(validate_path, validate_workers);
            write_or_print(roadsim::audit_to_json(report), validate_out);
            if (!report.schema_ok) return 1;
        } else if (rollout->parsed()) {
            roadsim::RolloutOptions opts;
            opts.scenario_path = rollout_scenario;
            opts.policy = policy;
            opts.seed = rollout_seed;
            opts.no_removal = no_removal;
            opts.config = config;
            const roadsim::RunReport report = roadsim::run_rollout(opts, &std::cin);
            write_or_print(roadsim::report_to_json(report), rollout_out);
        } else if (render->parsed()) {
            roadsim::RenderOptions opts;
            opts.scenario_path = render_scenario;
            opts.step = step;
            opts.ego_id = ego_id;
            opts.cone_view = view == "cone";
            opts.out_path = render_out;
            opts.px = px;
            opts.meters_per_px = mpp;
            opts.config = config;
            roadsim::run_render(opts);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
