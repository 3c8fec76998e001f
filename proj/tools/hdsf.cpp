// Command-line front end: single runs, fuzzing campaigns, conformance and margin export.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hdsf/drone.hpp"
#include "hdsf/error.hpp"
#include "hdsf/falsification.hpp"
#include "hdsf/margins.hpp"
#include "hdsf/report.hpp"

namespace {

using namespace hdsf;

constexpr int kExitViolated = 1;
constexpr int kExitError = 2;
constexpr int kExitFault = 3;

struct Common {
    std::string scenario;
    std::optional<double> min_deploy_alt;
    std::optional<double> max_deploy_alt;
    std::optional<double> batt_threshold;
    std::optional<double> delta;
    std::optional<double> dt;
    std::optional<double> horizon;
    std::string variant = "buggy";
    std::uint64_t seed = 0;
};

std::uint64_t default_seed() {
    if (const char* env = std::getenv("HDSF_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            std::cerr << "warning: ignoring non-numeric HDSF_SEED\n";
        }
    }
    return 0;
}

void add_model_flags(CLI::App* cmd, Common& c) {
    cmd->add_option("--scenario", c.scenario, "JSON file with drone parameters")->check(CLI::ExistingFile);
    cmd->add_option("--min-deploy-alt", c.min_deploy_alt, "lowest altitude that allows deployment [m] (60.0)");
    cmd->add_option("--max-deploy-alt", c.max_deploy_alt, "highest altitude that allows deployment [m] (80.0)");
    cmd->add_option("--batt-threshold", c.batt_threshold, "critical battery level [%] (10.0)");
    cmd->add_option("--delta", c.delta, "deployment deadline [s] (2.0)");
    cmd->add_option("--dt", c.dt, "surrogate time step [s] (0.05)");
    cmd->add_option("--horizon", c.horizon, "simulated time [s] (120)");
    cmd->add_option("--variant", c.variant, "controller variant")->check(CLI::IsMember({"buggy", "patched"}));
}

drone::DroneParams resolve(const Common& c) {
    drone::DroneParams p = c.scenario.empty() ? drone::DroneParams{} : drone::load_params(c.scenario);
    if (c.min_deploy_alt) p.min_deploy_alt = *c.min_deploy_alt;
    if (c.max_deploy_alt) p.max_deploy_alt = *c.max_deploy_alt;
    if (c.batt_threshold) p.low_batt_threshold = *c.batt_threshold;
    if (c.delta) p.delta = *c.delta;
    if (c.dt) p.dt = *c.dt;
    if (c.horizon) p.horizon = *c.horizon;
    p.validate();
    return p;
}

int print_run(const Configuration& config, const TrialOutcome& o, double airborne_min) {
    std::cout << format_run_report(config, summarize_run(o.trace, config, o.verdict, airborne_min));
    return o.verdict.satisfied() ? 0 : kExitViolated;
}

int cmd_run(const Common& c, double battery, double altitude) {
    const auto p = resolve(c);
    const auto variant = drone::variant_from_string(c.variant);
    const auto surrogate = drone::build_surrogate_system(p, variant);
    const auto config = drone::make_configuration(p, battery, altitude);
    const auto o = run_trial(surrogate, config, drone::property(p), p.dt, p.horizon);
    return print_run(config, o, p.airborne_min_altitude);
}

int cmd_run_full(const Common& c, double battery, double altitude) {
    const auto p = resolve(c);
    const auto variant = drone::variant_from_string(c.variant);
    const auto full = drone::build_full_system(p, variant);
    const auto config = drone::make_configuration(p, battery, altitude);
    const auto t0 = std::chrono::steady_clock::now();
    const auto o = drone::run_full_trial(full, p, config, p.horizon);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const int code = print_run(config, o, p.airborne_min_altitude);
    std::cout << "Full model: " << o.trace.size() << " samples at " << format_number(p.physics_rate_hz)
              << " Hz in " << format_fixed(secs, 3) << "s\n";
    return code;
}

int cmd_fuzz(const Common& c, std::size_t runs, const std::string& space_file, const std::string& out_dir,
             unsigned threads, std::optional<double> wall_time) {
    const auto p = resolve(c);
    const auto variant = drone::variant_from_string(c.variant);
    ConfigSpace space;
    try {
        space = space_file.empty() ? drone::default_space(c.seed) : load_config_space(space_file);
        if (!space_file.empty()) {
            space.rng_seed = c.seed;
        }
        space.validate();
    } catch (const SpaceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }

    CampaignOptions opts;
    opts.runs = runs;
    opts.wall_time_seconds = wall_time;
    opts.dt = p.dt;
    opts.horizon = p.horizon;
    opts.threads = threads;
    opts.airborne_min_altitude = p.airborne_min_altitude;
    opts.base = drone::make_configuration(p, 100.0, 0.0);

    const auto surrogate = drone::build_surrogate_system(p, variant);
    const auto result = campaign(surrogate, drone::property(p), space, opts);
    write_campaign_outputs(out_dir, result);

    const auto& s = result.summary;
    std::cout << "Variant: " << drone::to_string(variant) << "\n";
    std::cout << "Total Runs: " << s.total_runs << "\n";
    std::cout << "Violating Runs: " << s.violating_runs << "\n";
    std::cout << "Unique Violations: " << s.unique_violations << "\n";
    std::cout << "Violation Rate: " << format_fixed(100.0 * s.violation_rate, 1) << "%\n";
    std::cout << "Seed: " << s.seed << "\n";
    std::cout << "Wall time: " << format_fixed(s.wall_time, 3) << "s\n";
    std::cout << "Outputs: " << out_dir << "\n";
    return 0;
}

int cmd_conformance(const Common& c, std::size_t n, std::optional<double> battery, std::optional<double> altitude) {
    const auto p = resolve(c);
    const auto variant = drone::variant_from_string(c.variant);
    std::vector<Configuration> configs;
    if (battery || altitude) {
        if (!battery || !altitude) {
            std::cerr << "error: --battery and --altitude go together\n";
            return kExitError;
        }
        configs.push_back(drone::make_configuration(p, *battery, *altitude));
    } else {
        if (n == 0) {
            std::cerr << "error: --configs must be at least 1\n";
            return kExitError;
        }
        const ConfigSpace space = drone::default_space(c.seed);
        for (std::size_t i = 0; i < n; ++i) {
            Rng rng = Rng::for_trial(c.seed, i);
            configs.push_back(generate(space, rng));
        }
    }
    const auto report = drone::conformance_check(p, variant, configs, p.dt, p.horizon);
    auto verdict = [](const std::optional<stl::Verdict>& v) {
        return v ? stl::to_string(v->outcome) : std::string("-");
    };
    std::cout << "config,battery_init,altitude_init,full,surrogate,agree\n";
    for (std::size_t i = 0; i < report.entries.size(); ++i) {
        const auto& e = report.entries[i];
        std::cout << i << ',' << format_number(e.config.at(drone::kBatteryInit)) << ','
                  << format_number(e.config.at(drone::kAltitudeInit)) << ',' << verdict(e.full) << ','
                  << verdict(e.surrogate) << ',' << (e.fault.empty() ? (e.agrees() ? "yes" : "NO") : "FAULT")
                  << "\n";
        if (!e.fault.empty()) {
            std::cerr << "fault: " << e.fault << "\n";
        }
    }
    std::cout << "Agreement: " << report.agreed << "/" << report.compared << " ("
              << format_fixed(100.0 * report.agreement(), 1) << "%)\n";
    if (report.faults > 0) {
        std::cout << "Faults: " << report.faults << "\n";
        return kExitFault;
    }
    return report.agreed == report.compared ? 0 : 1;
}

int cmd_margins(const Common& c, std::size_t n, const std::string& out_file) {
    const auto p = resolve(c);
    const auto variant = drone::variant_from_string(c.variant);
    const auto surrogate = drone::build_surrogate_system(p, variant);
    const auto phi = drone::property(p);
    const ConfigSpace space = drone::default_space(c.seed);
    std::vector<TrialRecord> rows;
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng = Rng::for_trial(c.seed, i);
        TrialRecord r;
        r.trial = i;
        r.config = generate(space, rng);
        const auto o = run_trial(surrogate, r.config, phi, p.dt, p.horizon);
        r.verdict = o.verdict.outcome;
        r.margins = compute_margins(o.trace, r.config, r.verdict, p.airborne_min_altitude);
        rows.push_back(std::move(r));
    }
    const std::string csv = margins_csv(rows);
    if (out_file == "-") {
        std::cout << csv;
    } else {
        std::ofstream(out_file, std::ios::binary) << csv;
        std::cout << "Wrote " << n << " rows to " << out_file << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Property-scoped surrogate simulation and fuzzing for the parachute controller"};
    app.require_subcommand(1);
    Common common;
    common.seed = default_seed();

    double battery = 0.0;
    double altitude = 0.0;
    auto* run = app.add_subcommand("run", "one surrogate run with a configuration and result report");
    add_model_flags(run, common);
    run->add_option("--battery", battery, "initial battery [%]")->required();
    run->add_option("--altitude", altitude, "initial altitude [m]")->required();

    auto* run_full = app.add_subcommand("run-full", "one run of the five-mode model");
    add_model_flags(run_full, common);
    run_full->add_option("--battery", battery, "initial battery [%]")->required();
    run_full->add_option("--altitude", altitude, "initial altitude [m]")->required();

    std::size_t runs = 200;
    std::string space_file;
    std::string out_dir = "fuzz_out";
    unsigned threads = 1;
    std::optional<double> wall_time;
    auto* fuzz = app.add_subcommand("fuzz", "falsification campaign on the surrogate");
    add_model_flags(fuzz, common);
    fuzz->add_option("--runs", runs, "number of trials");
    fuzz->add_option("--seed", common.seed, "campaign seed (default $HDSF_SEED or 0)");
    fuzz->add_option("--space", space_file, "parameter space JSON")->check(CLI::ExistingFile);
    fuzz->add_option("--out-dir", out_dir, "output directory");
    fuzz->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    fuzz->add_option("--wall-time", wall_time, "stop after this many seconds (non-deterministic)");

    std::size_t n_configs = 100;
    std::optional<double> conf_battery;
    std::optional<double> conf_altitude;
    auto* conformance = app.add_subcommand("conformance", "compare verdicts of the full model and the surrogate");
    add_model_flags(conformance, common);
    conformance->add_option("--configs,-n", n_configs, "number of sampled configurations");
    conformance->add_option("--seed", common.seed, "sampling seed");
    conformance->add_option("--battery", conf_battery, "single configuration: initial battery [%]");
    conformance->add_option("--altitude", conf_altitude, "single configuration: initial altitude [m]");

    std::size_t margin_runs = 200;
    std::string margin_out = "margins.csv";
    auto* margins = app.add_subcommand("margins", "export margin-space points for sampled configurations");
    add_model_flags(margins, common);
    margins->add_option("--runs", margin_runs, "number of sampled configurations");
    margins->add_option("--seed", common.seed, "sampling seed");
    margins->add_option("--out", margin_out, "CSV path, - for stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitError;
    }

    try {
        if (*run) return cmd_run(common, battery, altitude);
        if (*run_full) return cmd_run_full(common, battery, altitude);
        if (*fuzz) return cmd_fuzz(common, runs, space_file, out_dir, threads, wall_time);
        if (*conformance) return cmd_conformance(common, n_configs, conf_battery, conf_altitude);
        if (*margins) return cmd_margins(common, margin_runs, margin_out);
    } catch (const CampaignAborted& e) {
        std::cerr << "campaign aborted: " << e.what() << "\n";
        return kExitFault;
    } catch (const hdsf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
