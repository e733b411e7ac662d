#include "mechnum/experiments.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

namespace {

void print_report(const mechnum::ExperimentReport& report) {
    for (const auto& c : report.checks)
        std::printf("%s %s: %s%s%s\n", c.pass ? "PASS" : "FAIL",
                    report.experiment.c_str(), c.name.c_str(), c.detail.empty() ? "" : " — ",
                    c.detail.c_str());
}

mechnum::ExperimentConfig make_config(const std::string& config_path,
                                      const std::string& experiment, std::uint64_t seed,
                                      bool seed_set, const std::string& out_dir) {
    mechnum::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = mechnum::load_experiment_config(config_path);
    if (!experiment.empty()) cfg.experiment = experiment;
    if (seed_set) cfg.seed = seed;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    cfg.scenario.seed = cfg.seed;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Incentive-audited network resource allocation experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir, experiment, suite;
    std::uint64_t seed = 0;

    auto* run = app.add_subcommand("run", "Run an experiment and emit CSV plot data");
    run->add_option("experiment", experiment,
                    "example1|example2|example3|dual_audit|oracle_check")
        ->required();
    run->add_option("--config", config_path, "TOML config file");
    auto* seed_opt = run->add_option("--seed", seed, "Override the config seed");
    run->add_option("--out", out_dir, "Output directory");

    auto* check = app.add_subcommand("check", "Run a property suite and report pass/fail");
    check->add_option("suite", suite, "oracle|lemmas|sem|esem")->required();
    check->add_option("--config", config_path, "TOML config file");
    auto* seed_opt2 = check->add_option("--seed", seed, "Override the config seed");
    check->add_option("--out", out_dir, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            auto cfg = make_config(config_path, experiment, seed, !seed_opt->empty(), out_dir);
            auto report = mechnum::run_experiment(cfg);
            print_report(report);
            return report.all_pass() ? 0 : 1;
        }

        auto cfg = make_config(config_path, "", seed, !seed_opt2->empty(), out_dir);
        mechnum::ExperimentReport report;
        if (suite == "oracle") {
            cfg.experiment = "oracle_check";
            if (config_path.empty()) cfg.n_samples = 50;
            report = mechnum::run_oracle_check(cfg);
        } else if (suite == "lemmas") {
            cfg.experiment = "dual_audit";
            if (config_path.empty()) cfg.n_samples = 50;
            report = mechnum::run_dual_audit(cfg);
        } else if (suite == "sem") {
            cfg.experiment = "example2";
            if (config_path.empty()) {
                cfg.n_samples = 50;
                cfg.scenario.n_links = 2;
                cfg.scenario.n_energy_efficiency = 1;
                cfg.scenario.total_power_w = 0.1;
            }
            auto stats = mechnum::sem_suite(cfg, 20);
            report.experiment = "sem";
            report.add("dsic_grid", stats.dsic_violations == 0,
                       std::to_string(stats.dsic_violations) + " violations over " +
                           std::to_string(stats.dsic_cases) + " cases");
            report.add("per_sample_success_monotone",
                       stats.per_sample_monotonicity_violations == 0,
                       std::to_string(stats.per_sample_monotonicity_violations) +
                           " violations");
            report.add("center_gain_positive_on_success",
                       stats.nonpositive_center_gain == 0,
                       std::to_string(stats.nonpositive_center_gain) + " nonpositive of " +
                           std::to_string(stats.successes) + " successes");
            report.add("center_gain_identity",
                       stats.max_center_gain_identity_error <= 1e-12,
                       mechnum::format_double(stats.max_center_gain_identity_error));
            report.add("fair_gains", stats.max_fairness_gap <= 1e-12,
                       mechnum::format_double(stats.max_fairness_gap));
            mechnum::write_report_json(report, cfg.output_dir + "/sem_check_summary.json");
        } else if (suite == "esem") {
            cfg.experiment = "example3";
            if (config_path.empty()) {
                cfg.scenario.n_links = 20;
                cfg.scenario.n_energy_efficiency = 5;
            }
            auto stats = mechnum::esem_suite(cfg);
            report.experiment = "esem";
            report.add("all_runs_terminated", stats.truncated_runs == 0,
                       std::to_string(stats.truncated_runs) + " truncated");
            report.add("per_user_utilities_nondecreasing", stats.ir_violations == 0,
                       std::to_string(stats.ir_violations) + " runs violated");
            report.add("allocation_conserved", stats.max_conservation_error <= 1e-12,
                       mechnum::format_double(stats.max_conservation_error));
            report.add("ledger_replay", stats.replay_ok,
                       mechnum::format_double(stats.max_replay_error));
            report.add("subsidy_products_nonincreasing", stats.guard_violations == 0,
                       std::to_string(stats.guard_violations) + " runs violated");
            for (auto form : {mechnum::UntruthfulForm::inflated_ask,
                              mechnum::UntruthfulForm::deflated_ask,
                              mechnum::UntruthfulForm::skip_rounds}) {
                auto u = mechnum::esem_untruthful_suite(cfg, form, 50);
                const char* name = form == mechnum::UntruthfulForm::inflated_ask
                                       ? "inflated_ask_never_profits"
                                       : form == mechnum::UntruthfulForm::deflated_ask
                                             ? "deflated_ask_never_profits"
                                             : "skipping_rounds_never_profits";
                report.add(name, u.max_excess <= 1e-9,
                           "max excess " + mechnum::format_double(u.max_excess));
            }
            mechnum::write_report_json(report, cfg.output_dir + "/esem_check_summary.json");
        } else {
            std::fprintf(stderr, "unknown suite: %s\n", suite.c_str());
            return 2;
        }
        print_report(report);
        return report.all_pass() ? 0 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
