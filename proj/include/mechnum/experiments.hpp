#pragma once

#include "mechnum/d2d_scenario.hpp"
#include "mechnum/dual_solver.hpp"
#include "mechnum/mechanisms.hpp"
#include "mechnum/strategies.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mechnum {

struct EsemExperimentConfig {
    double quantum = 1e-2;
    double subsidy_fraction = 0.5;
    int max_rounds = 100000;
    double amplitude = 2.0;
    double width = 0.01;
    int norm_power = 1;
    double target_offset = 0.06;  // Euclidean distance of the target from x*
    int runs = 50;
};

struct SemExperimentConfig {
    std::vector<double> alpha_grid;  // empty selects 0.05..0.5 in 10 steps
    double amplitude = 0.3;
    double width = 0.05;
    int norm_power = 2;
    double shift_min = 0.005;  // amount moved from user 1 to user 2
    double shift_max = 0.03;
};

struct ExperimentConfig {
    std::string experiment = "oracle_check";
    ScenarioConfig scenario;
    SolverConfig solver;
    EsemExperimentConfig esem;
    SemExperimentConfig sem;
    int n_samples = 100;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    double eps_sweep_lo = 0.02;
    double eps_sweep_hi = 1.0;
    int sweep_points = 99;
    int oracle_grid_n = 161;
    int audit_n_users = 4;
    std::string source_text;  // raw config text, hashed into output stamps

    std::string stamp() const;
    std::vector<double> alpha_grid() const;
};

ExperimentConfig load_experiment_config(const std::string& path);

struct PropertyCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ExperimentReport {
    std::string experiment;
    std::vector<PropertyCheck> checks;
    bool all_pass() const;
    void add(const std::string& name, bool pass, const std::string& detail);
};

void write_report_json(const ExperimentReport& report, const std::string& path);

ExperimentReport run_example1(const ExperimentConfig& cfg);
ExperimentReport run_example2(const ExperimentConfig& cfg);
ExperimentReport run_example3(const ExperimentConfig& cfg);
ExperimentReport run_oracle_check(const ExperimentConfig& cfg);
ExperimentReport run_dual_audit(const ExperimentConfig& cfg);
ExperimentReport run_experiment(const ExperimentConfig& cfg);  // dispatch on cfg.experiment

// ---------------------------------------------------------------------------
// Property suites. The CLI check commands and the acceptance tests share
// these engines; runners wrap them with CSV/JSON output.

/// Users with exponential valuations over the identity objective; the
/// family with closed-form best responses used by the audit suites.
struct IdentityInstance {
    std::vector<ComposedUtility> users;
    double budget = 0.0;
    double x_max = 0.0;
};

/// Draws an instance with n users. Scarce instances pin x_max = budget so
/// the budget binds; otherwise caps occasionally make the budget slack.
IdentityInstance sample_identity_instance(Rng& rng, int n, bool scarce);

/// Scarce instance where the truthful solution gives every user at least
/// x_floor and prices stay away from zero; std::nullopt when the attempt
/// budget runs out.
std::optional<IdentityInstance> sample_audited_instance(Rng& rng, int n,
                                                        const SolverConfig& solver,
                                                        Allocation* baseline);

struct OracleSuiteStats {
    int instances = 0;
    int non_converged = 0;
    double max_rel_gap = 0.0;
    double max_kkt_residual = 0.0;
    double seconds = 0.0;
    struct Row {
        int instance;
        int n;
        double value_solver;
        double value_oracle;
        double rel_gap;
        double kkt;
        bool converged;
    };
    std::vector<Row> rows;
};

OracleSuiteStats oracle_suite(std::uint64_t seed, int instances, int max_users, int grid_n,
                              const SolverConfig& solver);

struct LemmaSuiteStats {
    int instances = 0;
    int users_checked = 0;
    int users_without_profitable_deviation = 0;  // under the alpha sweep
    double min_best_gain = 0.0;                  // worst best-deviation margin
    int alpha_points = 0;
    int alpha_profitable_points = 0;
    int alpha_allocation_violations = 0;  // profitable but allocation not smaller
    int lemma1_applicable_points = 0;     // price pushed above truthful
    int lemma1_violations = 0;
    int lemma2_cases = 0;
    int lemma2_violations = 0;
    int non_converged_points = 0;
    double seconds = 0.0;
    struct Row {
        int instance;
        int user;
        double lambda_base;
        double x_base;
        double u_base;
        double best_alpha;
        double best_gain;
        double lambda_at_best;
        double x_at_best;
    };
    std::vector<Row> rows;
};

LemmaSuiteStats lemma_suite(std::uint64_t seed, int instances, int n_users, int sweep_points,
                            const SolverConfig& solver);

struct SemSuiteStats {
    int samples = 0;
    int rejected_samples = 0;
    int dsic_cases = 0;
    int dsic_violations = 0;
    int successes = 0;
    int nonpositive_center_gain = 0;
    int per_sample_monotonicity_violations = 0;
    double max_center_gain_identity_error = 0.0;
    double max_fairness_gap = 0.0;
    bool success_curve_nondecreasing = true;
    bool gain_ratio_curve_nonincreasing = true;
    double seconds = 0.0;
    struct CurvePoint {
        double alpha;
        double success_rate;
        double mean_center_gain;       // over successes, 0 when none
        double mean_gain_over_stake;   // mean center_gain / stake over successes
        int n_success;
    };
    std::vector<CurvePoint> curve;
    struct SampleRow {
        int sample;
        double ask_truthful;
        double bid_truthful;
        double stake;
        double threshold_alpha;  // (ask-bid)/stake, success iff alpha >= this
    };
    std::vector<SampleRow> samples_detail;
};

/// Two-link SEM study: per-alpha success probability and center gain over
/// seeded scenario draws, the DSIC quote grid, fairness, and the center
/// gain identity. dsic_grid points per quote side (0 skips the grid).
SemSuiteStats sem_suite(const ExperimentConfig& cfg, int dsic_grid);

struct EsemSuiteStats {
    int runs = 0;
    int truncated_runs = 0;
    int ir_violations = 0;          // a cumulative utility decreased
    int guard_violations = 0;       // executed alpha*theta increased
    double max_conservation_error = 0.0;
    double max_replay_error = 0.0;  // worst ledger replay discrepancy
    bool replay_ok = true;
    double mean_final_nu = 0.0;
    double final_nu_spread_rel = 0.0;  // (max-min)/mean over runs
    double mean_rounds = 0.0;
    double seconds = 0.0;
    struct RunRow {
        int run;
        int rounds;
        int exchanges;
        double final_nu;
        double final_distance;
        int exit_code;
    };
    std::vector<RunRow> run_rows;
};

/// The multiuser ESEM study on one seeded scenario: cfg.esem.runs
/// mechanism randomizations of the same instance.
EsemSuiteStats esem_suite(const ExperimentConfig& cfg);

enum class UntruthfulForm { inflated_ask, deflated_ask, skip_rounds };

struct UntruthfulStats {
    UntruthfulForm form = UntruthfulForm::inflated_ask;
    int runs = 0;
    double max_excess = 0.0;  // deviator utility minus its truthful-run utility
    int deviator_trades_truthful = 0;
    int deviator_trades_untruthful = 0;
    double seconds = 0.0;
};

/// Injects one distorted-quote user per run (the seller with the largest
/// initial gap) and compares its realized utility against the same-seed
/// truthful run.
UntruthfulStats esem_untruthful_suite(const ExperimentConfig& cfg, UntruthfulForm form,
                                      int runs);

} // namespace mechnum
