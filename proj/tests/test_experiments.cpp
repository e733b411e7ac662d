#include "mechnum/experiments.hpp"

#include "mechnum/toml_lite.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mechnum;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("toml subset parsing") {
    const std::string text = R"(
# comment
experiment = "example2"   # trailing comment
seed = 42
ratio = 0.5
flag = true
grid = [0.1, 0.2, 0.3]

[scenario]
n_links = 2
p_max_w = 0.1

[deep.nested]
value = 7
)";
    const TomlTable t = TomlTable::parse(text);
    CHECK(t.get_string("experiment", "") == "example2");
    CHECK(t.get_int("seed", 0) == 42);
    CHECK(t.get_double("ratio", 0.0) == doctest::Approx(0.5));
    CHECK(t.get_bool("flag", false));
    CHECK(t.get_doubles("grid", {}).size() == 3);
    CHECK(t.table("scenario").get_int("n_links", 0) == 2);
    CHECK(t.table("deep").table("nested").get_int("value", 0) == 7);
    CHECK(t.get_string("missing", "fallback") == "fallback");
    CHECK_THROWS(TomlTable::parse("key 5"));
    CHECK_THROWS(TomlTable::parse("key = "));
    CHECK_THROWS((void)t.get_int("experiment", 0));
}

TEST_CASE("config loads with overrides and defaults") {
    const fs::path dir = fresh_dir("mechnum_cfg_test");
    const fs::path cfg_path = dir / "cfg.toml";
    {
        std::ofstream out(cfg_path);
        out << "experiment = \"oracle_check\"\nseed = 5\nn_samples = 7\n"
            << "[solver]\ntol = 1e-8\n[scenario]\nn_links = 4\n";
    }
    const ExperimentConfig cfg = load_experiment_config(cfg_path.string());
    CHECK(cfg.experiment == "oracle_check");
    CHECK(cfg.seed == 5);
    CHECK(cfg.n_samples == 7);
    CHECK(cfg.solver.tol == doctest::Approx(1e-8));
    CHECK(cfg.scenario.n_links == 4);
    CHECK(cfg.scenario.p_max_w == doctest::Approx(0.1));  // default retained
    CHECK(cfg.stamp().find("seed=5") != std::string::npos);
}

TEST_CASE("oracle suite meets its tolerances on a small batch") {
    SolverConfig solver;
    const OracleSuiteStats stats = oracle_suite(7, 8, 4, 161, solver);
    CHECK(stats.instances == 8);
    CHECK(stats.non_converged == 0);
    CHECK(stats.max_rel_gap <= 1e-3);
    CHECK(stats.max_kkt_residual <= 1e-4);
}

TEST_CASE("lemma suite finds deviations and no violations on a small batch") {
    SolverConfig solver;
    const LemmaSuiteStats stats = lemma_suite(11, 4, 3, 33, solver);
    CHECK(stats.instances == 4);
    CHECK(stats.users_checked > 0);
    CHECK(stats.users_without_profitable_deviation == 0);
    CHECK(stats.min_best_gain > 1e-6);
    CHECK(stats.alpha_allocation_violations == 0);
    CHECK(stats.lemma1_violations == 0);
    CHECK(stats.lemma1_applicable_points > 0);
    CHECK(stats.lemma2_violations == 0);
    CHECK(stats.non_converged_points == 0);
}

TEST_CASE("experiment outputs are byte-identical across reruns") {
    ExperimentConfig cfg;
    cfg.experiment = "oracle_check";
    cfg.n_samples = 4;
    cfg.seed = 3;

    const fs::path a = fresh_dir("mechnum_det_a");
    const fs::path b = fresh_dir("mechnum_det_b");
    cfg.output_dir = a.string();
    run_oracle_check(cfg);
    cfg.output_dir = b.string();
    run_oracle_check(cfg);
    CHECK(slurp(a / "oracle_check.csv") == slurp(b / "oracle_check.csv"));
}

TEST_CASE("unknown experiment name is rejected") {
    ExperimentConfig cfg;
    cfg.experiment = "example9";
    CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
}
