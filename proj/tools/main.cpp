#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "aoi/acceptance.hpp"
#include "aoi/scenario.hpp"
#include "aoi/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Exit codes: 0 success, 1 validation error, 2 runtime/infeasibility.
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

double parse_fmax(const std::string& s) {
    if (s.empty() || s == "inf" || s == "infinity") return aoi::kInf;
    double f = std::stod(s);
    if (!(f > 0.0)) throw std::invalid_argument("--fmax must be > 0");
    return f;
}

void write_file(const fs::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << contents;
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

struct CommonRunFlags {
    std::string config_path;
    std::string model_spec;
    std::string policy_spec;  // empty = from config, or "online" without one
    std::int64_t cycles = 0;
    std::string fmax_spec;
    std::optional<std::uint64_t> seed;
    std::string bounds;
    int warmup = 0;
    std::int64_t record_every = 0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON run configuration file");
        cmd->add_option("--model", model_spec,
                        "delay model, e.g. uniform:0,1 | lognormal:1,1.3[,trunc|,B] | "
                        "deterministic:1 | lecam:0.1611,0.5,100 | empirical:delays.csv");
        cmd->add_option("--policy", policy_spec,
                        "policy: online[:v=V] | zero_wait | constant_wait[:w] | oracle[:beta] | "
                        "plugin[:refit_every]");
        cmd->add_option("--cycles", cycles, "number of sampling cycles");
        cmd->add_option("--fmax", fmax_spec, "max sampling frequency (default: unconstrained)");
        cmd->add_option("--seed", seed, "master seed");
        cmd->add_option("--bounds", bounds, "moment bounds: exact | estimated");
        cmd->add_option("--warmup", warmup, "warmup delays for estimated bounds");
        cmd->add_option("--record-every", record_every, "trajectory thinning for CSV output");
    }

    aoi::RunConfig resolve() const {
        aoi::RunConfig cfg;
        bool have_config = !config_path.empty();
        if (have_config) {
            std::ifstream in(config_path);
            if (!in) throw std::runtime_error("cannot open config: " + config_path);
            json j = json::parse(in);
            cfg = aoi::RunConfig::from_json(j);
        } else if (model_spec.empty()) {
            throw std::invalid_argument("either --config or --model is required");
        }
        if (!model_spec.empty()) cfg.model = aoi::DelayModel::parse(model_spec);
        if (!policy_spec.empty()) {
            cfg.policy = aoi::PolicySpec::parse(policy_spec);
        } else if (!have_config) {
            cfg.policy = aoi::PolicySpec::parse("online");
        }
        if (cycles != 0) cfg.cycles = cycles;
        if (!fmax_spec.empty()) {
            double f = parse_fmax(fmax_spec);
            cfg.inv_f_max = std::isinf(f) ? 0.0 : 1.0 / f;
        }
        if (seed) cfg.seed = *seed;
        if (!bounds.empty()) cfg.bounds_mode = aoi::bounds_mode_from_string(bounds);
        if (warmup != 0) cfg.warmup_n = warmup;
        if (record_every != 0) cfg.record_every = record_every;
        cfg.validate();
        return cfg;
    }
};

int cmd_oracle(const std::string& model_spec, const std::string& fmax_spec, double tol,
               int grid_points, const std::string& grid_out) {
    auto model = aoi::DelayModel::parse(model_spec);
    double f_max = parse_fmax(fmax_spec);
    auto sol = aoi::solve_constrained(model, f_max, tol);
    json out = sol.to_json();
    out["model"] = model.to_json();
    if (!std::isinf(f_max)) out["f_max"] = f_max;
    out["version"] = aoi::kVersion;
    std::cout << out.dump(2) << "\n";

    if (grid_points > 0) {
        std::ostringstream csv;
        csv << "beta,aoi\n";
        double hi = 2.0 * sol.beta;
        for (int i = 0; i <= grid_points; ++i) {
            double beta = hi * i / grid_points;
            char line[64];
            std::snprintf(line, sizeof(line), "%.12g,%.12g\n", beta,
                          aoi::stationary_policy_aoi(model, beta));
            csv << line;
        }
        write_file(grid_out.empty() ? "oracle_grid.csv" : grid_out, csv.str());
    }
    return 0;
}

int cmd_simulate(const CommonRunFlags& flags, const std::string& out_dir) {
    aoi::RunConfig cfg = flags.resolve();
    if (cfg.record_every == 0) cfg.record_every = 1;
    auto checkpoints = aoi::default_checkpoints(cfg.cycles);
    auto result = aoi::run(cfg, checkpoints);

    fs::create_directories(out_dir);
    std::ostringstream csv;
    aoi::write_trajectory_csv(result.trajectory, csv);
    write_file(fs::path(out_dir) / "trajectory.csv", csv.str());
    write_json(fs::path(out_dir) / "summary.json", aoi::run_summary_json(cfg, result));
    std::cout << "wrote " << out_dir << "/trajectory.csv and summary.json (aoi_ratio = "
              << result.trajectory.aoi_ratio() << ")\n";
    return 0;
}

int cmd_ensemble(const CommonRunFlags& flags, int runs, const std::string& out_dir,
                 unsigned workers, int emit_runs) {
    aoi::RunConfig cfg = flags.resolve();
    auto checkpoints = aoi::default_checkpoints(cfg.cycles);
    auto summary = aoi::ensemble(cfg, runs, checkpoints, workers);

    fs::create_directories(out_dir);
    std::ostringstream csv;
    aoi::write_ensemble_csv(summary, csv);
    write_file(fs::path(out_dir) / "ensemble.csv", csv.str());
    write_json(fs::path(out_dir) / "summary.json", aoi::ensemble_summary_json(cfg, runs, summary));

    // Optional single-path exports, re-run with the same derived seeds.
    int emit = std::min<int>(emit_runs, runs);
    for (int i = 0; i < emit; ++i) {
        aoi::RunConfig rc = cfg;
        rc.seed = aoi::derive_seed(cfg.seed, 2 + static_cast<std::uint64_t>(i));
        rc.record_every = std::max<std::int64_t>(cfg.record_every, 1);
        auto result = aoi::run(rc, checkpoints);
        std::ostringstream traj;
        aoi::write_trajectory_csv(result.trajectory, traj);
        write_file(fs::path(out_dir) / ("run" + std::to_string(i) + ".csv"), traj.str());
    }
    std::cout << "wrote " << out_dir << "/ensemble.csv (final mean aoi_ratio = "
              << summary.metrics["aoi_ratio"].back().mean << ")\n";
    return 0;
}

int cmd_scenario(const std::string& name, const std::string& out_dir, int runs,
                 std::int64_t cycles, std::optional<std::uint64_t> seed, unsigned workers,
                 std::int64_t record_every) {
    auto scenario = aoi::make_scenario(name);
    if (cycles > 0) scenario.base.cycles = cycles;
    if (seed) scenario.base.seed = *seed;

    fs::path dir = fs::path(out_dir) / scenario.name;
    fs::create_directories(dir);
    write_json(dir / "scenario.json", scenario.to_json());

    auto checkpoints = aoi::default_checkpoints(scenario.base.cycles);
    for (const auto& [label, policy] : scenario.policies) {
        aoi::RunConfig cfg = scenario.base;
        cfg.policy = policy;
        auto summary = aoi::ensemble(cfg, runs, checkpoints, workers);
        std::ostringstream csv;
        aoi::write_ensemble_csv(summary, csv);
        write_file(dir / (label + ".ensemble.csv"), csv.str());

        // One full sample path per policy for time-axis plots.
        aoi::RunConfig single = cfg;
        single.seed = aoi::derive_seed(cfg.seed, 2);
        single.record_every = std::max<std::int64_t>(record_every, 1);
        auto result = aoi::run(single, checkpoints);
        std::ostringstream traj;
        aoi::write_trajectory_csv(result.trajectory, traj);
        write_file(dir / (label + ".run0.csv"), traj.str());
        write_json(dir / (label + ".summary.json"),
                   aoi::ensemble_summary_json(cfg, runs, summary));
        std::cout << scenario.name << "/" << label << ": final mean aoi_ratio = "
                  << summary.metrics["aoi_ratio"].back().mean << "\n";
    }
    std::cout << "wrote scenario outputs under " << dir.string() << "\n";
    return 0;
}

int cmd_acceptance(const std::string& filter, unsigned workers) {
    auto results = aoi::run_acceptance(filter, workers);
    aoi::print_acceptance(results, std::cout);
    return aoi::all_passed(results) ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Age-of-information sampling: oracle solver, online learner and simulator"};
    app.require_subcommand(1);

    // oracle
    auto* oracle_cmd = app.add_subcommand("oracle", "solve the known-distribution optimum");
    std::string oracle_model, oracle_fmax, oracle_grid_out;
    double oracle_tol = 1e-10;
    int oracle_grid = 0;
    oracle_cmd->add_option("--model", oracle_model, "delay model spec")->required();
    oracle_cmd->add_option("--fmax", oracle_fmax, "max sampling frequency");
    oracle_cmd->add_option("--tol", oracle_tol, "bisection tolerance");
    oracle_cmd->add_option("--grid", oracle_grid, "emit CSV of (beta, aoi) over a grid");
    oracle_cmd->add_option("--out", oracle_grid_out, "grid CSV path");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "run a single seeded simulation");
    CommonRunFlags sim_flags;
    sim_flags.attach(sim_cmd);
    std::string sim_out = "out/simulate";
    sim_cmd->add_option("--out", sim_out, "output directory");

    // ensemble
    auto* ens_cmd = app.add_subcommand("ensemble", "run independent seeded runs and aggregate");
    CommonRunFlags ens_flags;
    ens_flags.attach(ens_cmd);
    std::string ens_out = "out/ensemble";
    int ens_runs = 100;
    unsigned ens_workers = 0;
    int ens_emit = 0;
    ens_cmd->add_option("--out", ens_out, "output directory");
    ens_cmd->add_option("--runs", ens_runs, "number of runs");
    ens_cmd->add_option("--workers", ens_workers, "worker threads (0 = hardware)");
    ens_cmd->add_option("--emit-runs", ens_emit, "also write the first N per-run trajectories");

    // scenario
    auto* scen_cmd = app.add_subcommand("scenario", "run a canned experiment scenario");
    std::string scen_name, scen_out = "out";
    int scen_runs = 100;
    std::int64_t scen_cycles = 0, scen_record = 100;
    std::optional<std::uint64_t> scen_seed;
    unsigned scen_workers = 0;
    bool scen_list = false;
    scen_cmd->add_option("name", scen_name, "scenario name");
    scen_cmd->add_flag("--list", scen_list, "list scenario names");
    scen_cmd->add_option("--out", scen_out, "output directory");
    scen_cmd->add_option("--runs", scen_runs, "runs per policy");
    scen_cmd->add_option("--cycles", scen_cycles, "override cycle count");
    scen_cmd->add_option("--seed", scen_seed, "override master seed");
    scen_cmd->add_option("--workers", scen_workers, "worker threads (0 = hardware)");
    scen_cmd->add_option("--record-every", scen_record, "sample-path CSV thinning");

    // acceptance
    auto* acc_cmd = app.add_subcommand("acceptance", "run the release acceptance checks");
    std::string acc_filter;
    unsigned acc_workers = 0;
    acc_cmd->add_option("--filter", acc_filter, "run only criteria whose name contains this");
    acc_cmd->add_option("--workers", acc_workers, "worker threads (0 = hardware)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (oracle_cmd->parsed()) {
            return cmd_oracle(oracle_model, oracle_fmax, oracle_tol, oracle_grid, oracle_grid_out);
        }
        if (sim_cmd->parsed()) return cmd_simulate(sim_flags, sim_out);
        if (ens_cmd->parsed()) return cmd_ensemble(ens_flags, ens_runs, ens_out, ens_workers, ens_emit);
        if (scen_cmd->parsed()) {
            if (scen_list) {
                for (const auto& n : aoi::scenario_names()) std::cout << n << "\n";
                return 0;
            }
            if (scen_name.empty()) throw std::invalid_argument("scenario: name required (or --list)");
            return cmd_scenario(scen_name, scen_out, scen_runs, scen_cycles, scen_seed, scen_workers,
                                scen_record);
        }
        if (acc_cmd->parsed()) return cmd_acceptance(acc_filter, acc_workers);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
