// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances and runtime budgets are pinned here, not configurable.

#include "mechnum/csv.hpp"
#include "mechnum/experiments.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace mechnum;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void criterion(int number, const std::string& name, bool pass, const std::string& detail) {
    std::printf("criterion %d %s: %s — %s\n", number, pass ? "PASS" : "FAIL", name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool dirs_equal(const fs::path& a, const fs::path& b, std::string* why) {
    std::vector<fs::path> files_a;
    for (const auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) files_a.push_back(fs::relative(e.path(), a));
    std::sort(files_a.begin(), files_a.end());
    for (const auto& rel : files_a) {
        if (!fs::exists(b / rel)) {
            *why = "missing " + rel.string();
            return false;
        }
        if (slurp(a / rel) != slurp(b / rel)) {
            *why = "differs: " + rel.string();
            return false;
        }
    }
    return true;
}

ExperimentConfig base_config() {
    ExperimentConfig cfg;
    cfg.seed = 2027;
    cfg.scenario.seed = cfg.seed;
    return cfg;
}

ExperimentConfig example2_config() {
    ExperimentConfig cfg = base_config();
    cfg.experiment = "example2";
    cfg.scenario.n_links = 2;
    cfg.scenario.n_energy_efficiency = 1;
    cfg.scenario.total_power_w = 0.1;
    cfg.n_samples = 100;
    return cfg;
}

ExperimentConfig example3_config() {
    ExperimentConfig cfg = base_config();
    cfg.experiment = "example3";
    cfg.scenario.n_links = 20;
    cfg.scenario.n_energy_efficiency = 5;
    cfg.scenario.total_power_w = 0.5;
    cfg.esem.quantum = 1e-2;
    cfg.esem.amplitude = 2.0;
    cfg.esem.width = 0.01;
    cfg.esem.norm_power = 1;
    cfg.esem.runs = 50;
    return cfg;
}

} // namespace

int main() {
    const SolverConfig solver;  // library defaults, pinned by construction

    // 1. The price loop matches the exhaustive grid oracle.
    {
        const OracleSuiteStats s = oracle_suite(2027, 50, 4, 161, solver);
        const bool pass = s.instances == 50 && s.non_converged == 0 &&
                          s.max_rel_gap <= 1e-3 && s.max_kkt_residual <= 1e-4 &&
                          s.seconds <= 10.0;
        criterion(1, "oracle equivalence", pass,
                  "instances=" + std::to_string(s.instances) +
                      " max_rel_gap=" + format_double(s.max_rel_gap) +
                      " max_kkt=" + format_double(s.max_kkt_residual) +
                      " time=" + format_double(s.seconds) + "s");
    }

    // 2-4. Deviation sweeps on fully allocated instances.
    {
        const LemmaSuiteStats s = lemma_suite(2027, 50, 4, 99, solver);
        const bool pass2 = s.instances == 50 && s.users_checked > 0 &&
                           s.users_without_profitable_deviation == 0 &&
                           s.min_best_gain > 1e-6 && s.alpha_allocation_violations == 0 &&
                           s.non_converged_points == 0 && s.seconds <= 60.0;
        criterion(2, "profitable demand reduction", pass2,
                  "instances=" + std::to_string(s.instances) +
                      " users=" + std::to_string(s.users_checked) + " min_best_gain=" +
                      format_double(s.min_best_gain) + " allocation_violations=" +
                      std::to_string(s.alpha_allocation_violations) +
                      " time=" + format_double(s.seconds) + "s");
        criterion(3, "price-raising deviations never pay",
                  s.lemma1_violations == 0 && s.lemma1_applicable_points > 0,
                  "applicable=" + std::to_string(s.lemma1_applicable_points) +
                      " violations=" + std::to_string(s.lemma1_violations));
        criterion(4, "scaled reports lower the price",
                  s.lemma2_violations == 0 && s.lemma2_cases > 0,
                  "cases=" + std::to_string(s.lemma2_cases) +
                      " violations=" + std::to_string(s.lemma2_violations));
    }

    // 5. One-shot exchange suite.
    {
        const ExperimentConfig cfg = example2_config();
        const SemSuiteStats s = sem_suite(cfg, 20);
        const bool pass = s.samples == 100 && s.dsic_violations == 0 && s.dsic_cases > 0 &&
                          s.per_sample_monotonicity_violations == 0 &&
                          s.nonpositive_center_gain == 0 && s.successes > 0 &&
                          s.max_center_gain_identity_error <= 1e-12 &&
                          s.max_fairness_gap <= 1e-12 && s.success_curve_nondecreasing &&
                          s.gain_ratio_curve_nonincreasing && s.seconds <= 30.0;
        criterion(5, "one-shot exchange suite", pass,
                  "samples=" + std::to_string(s.samples) + " dsic_cases=" +
                      std::to_string(s.dsic_cases) + " dsic_violations=" +
                      std::to_string(s.dsic_violations) + " successes=" +
                      std::to_string(s.successes) + " identity_err=" +
                      format_double(s.max_center_gain_identity_error) + " fairness_gap=" +
                      format_double(s.max_fairness_gap) +
                      " time=" + format_double(s.seconds) + "s");
    }

    // 6. Iterative exchange suite at the 20-link scale.
    {
        const ExperimentConfig cfg = example3_config();
        const EsemSuiteStats s = esem_suite(cfg);
        const bool pass = s.runs == 50 && s.truncated_runs == 0 && s.ir_violations == 0 &&
                          s.max_conservation_error <= 1e-12 && s.replay_ok &&
                          s.final_nu_spread_rel <= 0.10 && s.guard_violations == 0 &&
                          s.seconds <= 60.0;
        criterion(6, "iterative exchange suite", pass,
                  "runs=" + std::to_string(s.runs) + " truncated=" +
                      std::to_string(s.truncated_runs) + " ir_violations=" +
                      std::to_string(s.ir_violations) + " conservation=" +
                      format_double(s.max_conservation_error) + " replay_err=" +
                      format_double(s.max_replay_error) + " spread=" +
                      format_double(s.final_nu_spread_rel) + " mean_nu=" +
                      format_double(s.mean_final_nu) + " mean_rounds=" +
                      format_double(s.mean_rounds) + " time=" + format_double(s.seconds) +
                      "s");
    }

    // 7. Distorted-quote scenarios never beat the truthful run.
    {
        const ExperimentConfig cfg = example3_config();
        bool pass = true;
        std::string detail;
        for (auto [form, name] :
             {std::pair{UntruthfulForm::inflated_ask, "inflated"},
              std::pair{UntruthfulForm::deflated_ask, "deflated"},
              std::pair{UntruthfulForm::skip_rounds, "skipping"}}) {
            const UntruthfulStats s = esem_untruthful_suite(cfg, form, 50);
            pass = pass && s.runs == 50 && s.max_excess <= 1e-9;
            detail += std::string(name) + "_excess=" + format_double(s.max_excess) + " ";
        }
        criterion(7, "distorted quotes never profit", pass, detail);
    }

    // 8. Byte-identical reruns of every experiment.
    {
        bool pass = true;
        std::string detail;
        const fs::path root = fs::temp_directory_path() / "mechnum_acceptance";
        fs::remove_all(root);

        auto rerun = [&](const std::string& label, ExperimentConfig cfg) {
            const fs::path a = root / (label + "_a");
            const fs::path b = root / (label + "_b");
            cfg.output_dir = a.string();
            run_experiment(cfg);
            cfg.output_dir = b.string();
            run_experiment(cfg);
            std::string why;
            if (!dirs_equal(a, b, &why)) {
                pass = false;
                detail += label + ": " + why + " ";
            }
        };

        ExperimentConfig e1 = base_config();
        e1.experiment = "example1";
        e1.scenario.n_links = 8;
        e1.scenario.n_energy_efficiency = 2;
        e1.sweep_points = 9;
        rerun("example1", e1);

        ExperimentConfig e2 = example2_config();
        e2.n_samples = 10;
        rerun("example2", e2);

        ExperimentConfig e3 = example3_config();
        e3.esem.runs = 3;
        rerun("example3", e3);

        ExperimentConfig oc = base_config();
        oc.experiment = "oracle_check";
        oc.n_samples = 5;
        rerun("oracle_check", oc);

        ExperimentConfig da = base_config();
        da.experiment = "dual_audit";
        da.n_samples = 3;
        da.sweep_points = 21;
        rerun("dual_audit", da);

        criterion(8, "seeded reruns are byte-identical", pass,
                  pass ? "5 experiments compared" : detail);
    }

    if (g_failures) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
