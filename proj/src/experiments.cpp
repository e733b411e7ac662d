#include "mechnum/experiments.hpp"

#include "mechnum/csv.hpp"
#include "mechnum/rng.hpp"
#include "mechnum/toml_lite.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace mechnum {

namespace {

namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

double elapsed_s(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> g(n);
    if (n == 1) {
        g[0] = lo;
        return g;
    }
    const double h = (hi - lo) / static_cast<double>(n - 1);
    for (int i = 0; i < n; ++i) g[i] = lo + h * i;
    g.back() = hi;
    return g;
}

fs::path ensure_dir(const std::string& dir) {
    fs::path p(dir);
    fs::create_directories(p);
    return p;
}

} // namespace

std::string ExperimentConfig::stamp() const {
    const std::uint64_t h = fnv1a(source_text + "|experiment=" + experiment +
                                  "|seed=" + std::to_string(seed));
    return "config_hash=" + hex64(h) + " seed=" + std::to_string(seed);
}

std::vector<double> ExperimentConfig::alpha_grid() const {
    if (!sem.alpha_grid.empty()) return sem.alpha_grid;
    return linspace(0.05, 0.5, 10);
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();

    ExperimentConfig cfg;
    cfg.source_text = buf.str();
    const TomlTable root = TomlTable::parse(cfg.source_text);

    cfg.experiment = root.get_string("experiment", cfg.experiment);
    cfg.n_samples = static_cast<int>(root.get_int("n_samples", cfg.n_samples));
    cfg.seed = static_cast<std::uint64_t>(root.get_int("seed", static_cast<std::int64_t>(cfg.seed)));
    cfg.output_dir = root.get_string("output_dir", cfg.output_dir);
    cfg.eps_sweep_lo = root.get_double("eps_sweep_lo", cfg.eps_sweep_lo);
    cfg.eps_sweep_hi = root.get_double("eps_sweep_hi", cfg.eps_sweep_hi);
    cfg.sweep_points = static_cast<int>(root.get_int("sweep_points", cfg.sweep_points));
    cfg.oracle_grid_n = static_cast<int>(root.get_int("oracle_grid_n", cfg.oracle_grid_n));
    cfg.audit_n_users = static_cast<int>(root.get_int("audit_n_users", cfg.audit_n_users));

    if (root.has_table("scenario")) {
        const TomlTable& s = root.table("scenario");
        ScenarioConfig& sc = cfg.scenario;
        sc.cell_radius_m = s.get_double("cell_radius_m", sc.cell_radius_m);
        sc.d2d_dist_min_m = s.get_double("d2d_dist_min_m", sc.d2d_dist_min_m);
        sc.d2d_dist_max_m = s.get_double("d2d_dist_max_m", sc.d2d_dist_max_m);
        sc.noise_psd_dbm_hz = s.get_double("noise_psd_dbm_hz", sc.noise_psd_dbm_hz);
        sc.noise_figure_db = s.get_double("noise_figure_db", sc.noise_figure_db);
        sc.rb_bandwidth_hz = s.get_double("rb_bandwidth_hz", sc.rb_bandwidth_hz);
        sc.p_max_w = s.get_double("p_max_w", sc.p_max_w);
        sc.p_cell_w = s.get_double("p_cell_w", sc.p_cell_w);
        sc.total_power_w = s.get_double("total_power_w", sc.total_power_w);
        sc.carrier_ghz = s.get_double("carrier_ghz", sc.carrier_ghz);
        sc.pathloss_exponent = s.get_double("pathloss_exponent", sc.pathloss_exponent);
        sc.interf_over_noise_db_min =
            s.get_double("interf_over_noise_db_min", sc.interf_over_noise_db_min);
        sc.interf_over_noise_db_max =
            s.get_double("interf_over_noise_db_max", sc.interf_over_noise_db_max);
        sc.eps_min = s.get_double("eps_min", sc.eps_min);
        sc.eps_max = s.get_double("eps_max", sc.eps_max);
        sc.circuit_power_w = s.get_double("circuit_power_w", sc.circuit_power_w);
        sc.n_links = static_cast<int>(s.get_int("n_links", sc.n_links));
        sc.n_energy_efficiency =
            static_cast<int>(s.get_int("n_energy_efficiency", sc.n_energy_efficiency));
    }
    if (root.has_table("solver")) {
        const TomlTable& s = root.table("solver");
        cfg.solver.lambda0 = s.get_double("lambda0", cfg.solver.lambda0);
        cfg.solver.step_delta = s.get_double("step_delta", cfg.solver.step_delta);
        cfg.solver.tol = s.get_double("tol", cfg.solver.tol);
        cfg.solver.max_iter = static_cast<int>(s.get_int("max_iter", cfg.solver.max_iter));
        cfg.solver.diminishing = s.get_bool("diminishing", cfg.solver.diminishing);
    }
    if (root.has_table("esem")) {
        const TomlTable& s = root.table("esem");
        cfg.esem.quantum = s.get_double("quantum", cfg.esem.quantum);
        cfg.esem.subsidy_fraction = s.get_double("subsidy_fraction", cfg.esem.subsidy_fraction);
        cfg.esem.max_rounds = static_cast<int>(s.get_int("max_rounds", cfg.esem.max_rounds));
        cfg.esem.amplitude = s.get_double("amplitude", cfg.esem.amplitude);
        cfg.esem.width = s.get_double("width", cfg.esem.width);
        cfg.esem.norm_power = static_cast<int>(s.get_int("norm_power", cfg.esem.norm_power));
        cfg.esem.target_offset = s.get_double("target_offset", cfg.esem.target_offset);
        cfg.esem.runs = static_cast<int>(s.get_int("runs", cfg.esem.runs));
    }
    if (root.has_table("sem")) {
        const TomlTable& s = root.table("sem");
        cfg.sem.alpha_grid = s.get_doubles("alpha_grid", cfg.sem.alpha_grid);
        cfg.sem.amplitude = s.get_double("amplitude", cfg.sem.amplitude);
        cfg.sem.width = s.get_double("width", cfg.sem.width);
        cfg.sem.norm_power = static_cast<int>(s.get_int("norm_power", cfg.sem.norm_power));
        cfg.sem.shift_min = s.get_double("shift_min", cfg.sem.shift_min);
        cfg.sem.shift_max = s.get_double("shift_max", cfg.sem.shift_max);
    }
    return cfg;
}

bool ExperimentReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const PropertyCheck& c) { return c.pass; });
}

void ExperimentReport::add(const std::string& name, bool pass, const std::string& detail) {
    checks.push_back({name, pass, detail});
}

void write_report_json(const ExperimentReport& report, const std::string& path) {
    nlohmann::json j;
    j["experiment"] = report.experiment;
    j["all_pass"] = report.all_pass();
    auto arr = nlohmann::json::array();
    for (const auto& c : report.checks)
        arr.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    j["checks"] = arr;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Identity-objective instances for the audit suites.

IdentityInstance sample_identity_instance(Rng& rng, int n, bool scarce) {
    IdentityInstance inst;
    inst.budget = n * rng.uniform(0.5, 1.6);
    if (scarce) {
        inst.x_max = inst.budget;
    } else {
        // Caps occasionally slack the budget so the zero-price branch is
        // exercised too.
        inst.x_max = rng.uniform() < 0.3 ? inst.budget / (n + 1.0) : inst.budget;
    }
    inst.users.reserve(n);
    for (int i = 0; i < n; ++i)
        inst.users.emplace_back(ValuationFn::exponential(rng.uniform(0.12, 0.3)),
                                ObjectiveFn::identity(), inst.x_max);
    return inst;
}

std::optional<IdentityInstance> sample_audited_instance(Rng& rng, int n,
                                                        const SolverConfig& solver,
                                                        Allocation* baseline) {
    for (int attempt = 0; attempt < 200; ++attempt) {
        IdentityInstance inst = sample_identity_instance(rng, n, true);
        Allocation alloc = solve(inst.users, inst.budget, inst.x_max, solver);
        if (!alloc.converged || alloc.lambda_star < 5e-3) continue;
        const double floor = 0.05;
        bool ok = true;
        for (double xi : alloc.x) ok = ok && xi >= floor;
        if (!ok) continue;
        if (alloc.sum() < inst.budget - 100 * solver.tol) continue;  // budget must bind
        if (baseline) *baseline = std::move(alloc);
        return inst;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Oracle suite (dual solver vs exhaustive grid).

OracleSuiteStats oracle_suite(std::uint64_t seed, int instances, int max_users, int grid_n,
                              const SolverConfig& solver) {
    const auto t0 = clock_type::now();
    OracleSuiteStats stats;
    Rng rng(Rng::mix(seed, 0xA11CE));
    for (int k = 0; k < instances; ++k) {
        const int n = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(max_users)));
        IdentityInstance inst = sample_identity_instance(rng, n, false);
        Allocation alloc = solve(inst.users, inst.budget, inst.x_max, solver);
        Allocation grid = brute_force_social_opt(inst.users, inst.budget, inst.x_max, grid_n);
        const double v_solve = sum_valuation(inst.users, alloc.x);
        const double v_grid = sum_valuation(inst.users, grid.x);
        const double rel_gap = std::abs(v_solve - v_grid) / std::max(1e-12, v_grid);
        const double kkt = kkt_residual(alloc, inst.users, inst.budget, inst.x_max);
        if (!alloc.converged) ++stats.non_converged;
        stats.max_rel_gap = std::max(stats.max_rel_gap, rel_gap);
        stats.max_kkt_residual = std::max(stats.max_kkt_residual, kkt);
        stats.rows.push_back({k, n, v_solve, v_grid, rel_gap, kkt, alloc.converged});
        ++stats.instances;
    }
    stats.seconds = elapsed_s(t0);
    return stats;
}

// ---------------------------------------------------------------------------
// Lemma suite (profitable deviations, price pushes, scaled reports).

LemmaSuiteStats lemma_suite(std::uint64_t seed, int instances, int n_users, int sweep_points,
                            const SolverConfig& solver) {
    const auto t0 = clock_type::now();
    LemmaSuiteStats stats;
    stats.min_best_gain = std::numeric_limits<double>::infinity();
    Rng rng(Rng::mix(seed, 0x1E44A));

    const std::vector<double> alpha_grid = open_grid(0.0, 1.0, sweep_points);
    const std::vector<double> lemma2_alphas{0.3, 0.5, 0.7, 0.9};

    for (int k = 0; k < instances; ++k) {
        Allocation baseline;
        auto inst = sample_audited_instance(rng, n_users, solver, &baseline);
        if (!inst) continue;
        ++stats.instances;

        // Misreported-eps grids also cover reports that push the price up,
        // which is what makes the price-raising check non-vacuous.
        for (std::size_t i = 0; i < inst->users.size(); ++i) {
            if (baseline.x[i] <= solver.tol) continue;
            ++stats.users_checked;

            SweepResult alpha_sweep = best_misreport_sweep(
                inst->users, i, alpha_grid, SweepFamily::scaled_alpha, inst->budget,
                inst->x_max, solver);

            double eps_true = 0.0, scale = 0.0;
            inst->users[i].valuation().exponential_core(&scale, &eps_true);
            const std::vector<double> eps_grid =
                linspace(0.25 * eps_true, 3.0 * eps_true, sweep_points);
            SweepResult eps_sweep =
                best_misreport_sweep(inst->users, i, eps_grid, SweepFamily::misreported_eps,
                                     inst->budget, inst->x_max, solver);

            const double u_base = alpha_sweep.baseline.u_true;
            const double x_base = alpha_sweep.baseline.x_under;
            const double lambda_base = alpha_sweep.baseline.lambda_under;

            const SweepPoint& best = alpha_sweep.points[alpha_sweep.best_index];
            const double gain = best.outcome.u_true - u_base;
            stats.min_best_gain = std::min(stats.min_best_gain, gain);
            if (!(gain > 1e-6)) ++stats.users_without_profitable_deviation;

            for (const auto& pt : alpha_sweep.points) {
                ++stats.alpha_points;
                if (!pt.outcome.converged) ++stats.non_converged_points;
                if (pt.outcome.u_true > u_base + 1e-9) {
                    ++stats.alpha_profitable_points;
                    if (!(pt.outcome.x_under < x_base - 1e-9))
                        ++stats.alpha_allocation_violations;
                }
                if (pt.outcome.lambda_under > lambda_base + 1e-6) {
                    ++stats.lemma1_applicable_points;
                    if (pt.outcome.u_true > u_base + 1e-9) ++stats.lemma1_violations;
                }
            }
            for (const auto& pt : eps_sweep.points) {
                if (!pt.outcome.converged) ++stats.non_converged_points;
                if (pt.outcome.lambda_under > lambda_base + 1e-6) {
                    ++stats.lemma1_applicable_points;
                    if (pt.outcome.u_true > u_base + 1e-9) ++stats.lemma1_violations;
                }
            }

            for (double a : lemma2_alphas) {
                DeviationOutcome dev = deviate_one(inst->users, i, ScaledValuation{a},
                                                   inst->budget, inst->x_max, solver);
                ++stats.lemma2_cases;
                if (!(dev.lambda_under < lambda_base - 1e-9)) ++stats.lemma2_violations;
            }

            stats.rows.push_back({k, static_cast<int>(i), lambda_base, x_base, u_base,
                                  best.param, gain, best.outcome.lambda_under,
                                  best.outcome.x_under});
        }
    }
    if (stats.users_checked == 0) stats.min_best_gain = 0.0;
    stats.seconds = elapsed_s(t0);
    return stats;
}

// ---------------------------------------------------------------------------
// SEM suite (two-link subsidized exchange).

namespace {

struct SemInstance {
    Scenario scenario;
    std::vector<ComposedUtility> users;
    std::vector<double> x_accepted;
    std::vector<double> x_target;
    CenterValuation nu;
    SemQuotes quotes;
    double stake = 0.0;
};

/// Draws a two-link scenario whose truthful solution leaves room to move
/// `shift` from link 1 to link 2.
std::optional<SemInstance> sample_sem_instance(const ExperimentConfig& cfg,
                                               std::uint64_t sample_seed) {
    ScenarioConfig sc = cfg.scenario;
    sc.n_links = 2;
    sc.n_energy_efficiency = 1;  // link 1 values energy efficiency, link 2 rate
    for (int attempt = 0; attempt < 100; ++attempt) {
        sc.seed = Rng::mix(sample_seed, static_cast<std::uint64_t>(attempt));
        Scenario scen = sample_scenario(sc);
        std::vector<ComposedUtility> users = scenario_utilities(scen);
        Allocation alloc = solve(users, sc.total_power_w, sc.p_max_w, cfg.solver);
        if (!alloc.converged) continue;

        Rng shift_rng(Rng::mix(sc.seed, 0x5E31));
        const double head_room =
            0.9 * std::min(alloc.x[0], std::min(users[1].domain_hi(), sc.p_max_w) - alloc.x[1]);
        if (head_room <= cfg.sem.shift_min) continue;
        const double shift =
            shift_rng.uniform(cfg.sem.shift_min, std::min(cfg.sem.shift_max, head_room));

        SemInstance inst{std::move(scen),
                         std::move(users),
                         alloc.x,
                         {alloc.x[0] - shift, alloc.x[1] + shift},
                         CenterValuation(cfg.sem.amplitude, cfg.sem.width,
                                         {alloc.x[0] - shift, alloc.x[1] + shift},
                                         cfg.sem.norm_power),
                         {0.0, 0.0},
                         0.0};
        try {
            inst.quotes = sem_truthful_quotes(inst.users[0], inst.users[1], inst.x_accepted,
                                              inst.x_target);
        } catch (const std::invalid_argument&) {
            continue;
        }
        inst.stake = inst.nu.value(inst.x_target) - inst.nu.value(inst.x_accepted);
        if (inst.stake <= 0.0) continue;
        return inst;
    }
    return std::nullopt;
}

} // namespace

SemSuiteStats sem_suite(const ExperimentConfig& cfg, int dsic_grid) {
    const auto t0 = clock_type::now();
    SemSuiteStats stats;
    const std::vector<double> alphas = cfg.alpha_grid();

    std::vector<SemInstance> instances;
    for (int s = 0; s < cfg.n_samples; ++s) {
        auto inst = sample_sem_instance(cfg, Rng::mix(cfg.seed, 0x2000 + s));
        if (!inst) {
            ++stats.rejected_samples;
            continue;
        }
        const double threshold = (inst->quotes.ask - inst->quotes.bid) / inst->stake;
        stats.samples_detail.push_back({s, inst->quotes.ask, inst->quotes.bid, inst->stake,
                                        threshold});
        instances.push_back(std::move(*inst));
        ++stats.samples;
    }

    // Success/gain curves with common samples across alpha, so per-sample
    // monotonicity is observable directly.
    std::vector<std::vector<bool>> success(alphas.size());
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        const double alpha = alphas[a];
        double gain_sum = 0.0, ratio_sum = 0.0;
        int n_success = 0;
        success[a].resize(instances.size());
        for (std::size_t k = 0; k < instances.size(); ++k) {
            const SemInstance& inst = instances[k];
            SemOutcome out = sem_run(inst.quotes.ask, inst.quotes.bid, inst.stake, alpha,
                                     inst.x_accepted, inst.x_target);
            success[a][k] = out.success;
            if (out.success) {
                ++n_success;
                gain_sum += out.center_gain;
                ratio_sum += out.center_gain / inst.stake;
                if (!(out.center_gain > 0.0)) ++stats.nonpositive_center_gain;
                const double identity =
                    inst.stake - (out.pay_seller - out.charge_buyer);
                stats.max_center_gain_identity_error =
                    std::max(stats.max_center_gain_identity_error,
                             std::abs(identity - out.center_gain));
                stats.max_fairness_gap = std::max(
                    stats.max_fairness_gap, std::abs(out.seller_gain - out.buyer_gain));
            }
        }
        stats.successes += n_success;
        stats.curve.push_back({alpha,
                               instances.empty() ? 0.0
                                                 : static_cast<double>(n_success) /
                                                       static_cast<double>(instances.size()),
                               n_success ? gain_sum / n_success : 0.0,
                               n_success ? ratio_sum / n_success : 0.0, n_success});
    }
    for (std::size_t a = 1; a < alphas.size(); ++a) {
        for (std::size_t k = 0; k < instances.size(); ++k)
            if (success[a - 1][k] && !success[a][k])
                ++stats.per_sample_monotonicity_violations;
        if (stats.curve[a].success_rate < stats.curve[a - 1].success_rate - 1e-15)
            stats.success_curve_nondecreasing = false;
        if (stats.curve[a].n_success && stats.curve[a - 1].n_success &&
            stats.curve[a].mean_gain_over_stake >
                stats.curve[a - 1].mean_gain_over_stake + 1e-12)
            stats.gain_ratio_curve_nonincreasing = false;
    }

    // DSIC quote grid: inflating the ask or shaving the bid never raises
    // the corresponding user's gain, for any counterpart quote.
    if (dsic_grid > 0) {
        const std::vector<double> dsic_alphas{0.1, 0.25, 0.4, 0.5};
        for (const SemInstance& inst : instances) {
            for (double alpha : dsic_alphas) {
                const double ask_tr = inst.quotes.ask, bid_tr = inst.quotes.bid;
                const double span = ask_tr + alpha * inst.stake;
                const auto asks = linspace(ask_tr, ask_tr + span, dsic_grid);
                const auto bids = linspace(std::max(0.0, bid_tr - span), bid_tr, dsic_grid);
                for (double bid : bids) {
                    const double g1_truthful =
                        sem_run(ask_tr, bid, inst.stake, alpha, inst.x_accepted,
                                inst.x_target, ask_tr, bid_tr)
                            .seller_gain;
                    for (double ask : asks) {
                        SemOutcome out = sem_run(ask, bid, inst.stake, alpha, inst.x_accepted,
                                                 inst.x_target, ask_tr, bid_tr);
                        ++stats.dsic_cases;
                        if (out.seller_gain > g1_truthful + 1e-12) ++stats.dsic_violations;
                    }
                }
                for (double ask : asks) {
                    const double g2_truthful =
                        sem_run(ask, bid_tr, inst.stake, alpha, inst.x_accepted,
                                inst.x_target, ask_tr, bid_tr)
                            .buyer_gain;
                    for (double bid : bids) {
                        SemOutcome out = sem_run(ask, bid, inst.stake, alpha, inst.x_accepted,
                                                 inst.x_target, ask_tr, bid_tr);
                        ++stats.dsic_cases;
                        if (out.buyer_gain > g2_truthful + 1e-12) ++stats.dsic_violations;
                    }
                }
            }
        }
    }
    stats.seconds = elapsed_s(t0);
    return stats;
}

// ---------------------------------------------------------------------------
// ESEM suite (multiuser iterative exchange).

namespace {

struct EsemInstance {
    Scenario scenario;
    std::vector<ComposedUtility> users;
    std::vector<double> x_accepted;
    CenterValuation nu;
};

EsemInstance make_esem_instance(const ExperimentConfig& cfg) {
    Scenario scen = sample_scenario(cfg.scenario);
    std::vector<ComposedUtility> users = scenario_utilities(scen);
    Allocation alloc = solve(users, cfg.scenario.total_power_w, cfg.scenario.p_max_w,
                             cfg.solver);
    if (!alloc.converged)
        throw std::runtime_error("esem instance: truthful solve did not converge");

    // Zero-sum direction keeps the target on the same budget face; scaled
    // back if any coordinate would leave the box.
    Rng rng(Rng::mix(cfg.scenario.seed, 0xDA6));
    const std::size_t n = users.size();
    std::vector<double> dir(n);
    double mean = 0.0;
    for (double& d : dir) {
        d = rng.uniform(-1.0, 1.0);
        mean += d;
    }
    mean /= static_cast<double>(n);
    double norm = 0.0;
    for (double& d : dir) {
        d -= mean;
        norm += d * d;
    }
    norm = std::sqrt(norm);
    if (norm <= 0.0) throw std::runtime_error("esem instance: degenerate direction");

    double scale = cfg.esem.target_offset / norm;
    for (std::size_t i = 0; i < n; ++i) {
        const double step = scale * dir[i];
        if (alloc.x[i] + step < 0.0) scale = std::min(scale, -alloc.x[i] / dir[i] * 0.95);
        if (alloc.x[i] + step > cfg.scenario.p_max_w)
            scale = std::min(scale, (cfg.scenario.p_max_w - alloc.x[i]) / dir[i] * 0.95);
    }
    std::vector<double> target(n);
    for (std::size_t i = 0; i < n; ++i) target[i] = alloc.x[i] + scale * dir[i];

    return EsemInstance{std::move(scen), std::move(users), alloc.x,
                        CenterValuation(cfg.esem.amplitude, cfg.esem.width, std::move(target),
                                        cfg.esem.norm_power)};
}

bool utilities_nondecreasing(const std::vector<std::vector<double>>& rows, double slack) {
    for (std::size_t r = 1; r < rows.size(); ++r)
        for (std::size_t i = 0; i < rows[r].size(); ++i)
            if (rows[r][i] < rows[r - 1][i] - slack) return false;
    return true;
}

bool guard_products_nonincreasing(const TransferLedger& ledger, double slack) {
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& e : ledger.entries) {
        const double prod = e.alpha * e.theta;
        if (prod > prev + slack) return false;
        prev = prod;
    }
    return true;
}

} // namespace

EsemSuiteStats esem_suite(const ExperimentConfig& cfg) {
    const auto t0 = clock_type::now();
    EsemSuiteStats stats;
    EsemInstance inst = make_esem_instance(cfg);

    double nu_min = std::numeric_limits<double>::infinity();
    double nu_max = -std::numeric_limits<double>::infinity();
    double nu_sum = 0.0;
    long rounds_sum = 0;

    for (int r = 0; r < cfg.esem.runs; ++r) {
        EsemConfig mech{cfg.esem.quantum, cfg.esem.subsidy_fraction, cfg.esem.max_rounds,
                        Rng::mix(cfg.seed, 0xE5E0 + static_cast<std::uint64_t>(r))};
        EsemResult res = esem_run(inst.users, inst.x_accepted, inst.nu, mech);

        if (res.truncated()) ++stats.truncated_runs;
        const auto utilities = cumulative_utilities(inst.users, inst.x_accepted, res);
        if (!utilities_nondecreasing(utilities, 1e-12)) ++stats.ir_violations;
        if (!guard_products_nonincreasing(res.ledger, 1e-15)) ++stats.guard_violations;

        ReplayReport rep = replay_ledger(res, inst.x_accepted, inst.nu);
        stats.max_conservation_error =
            std::max(stats.max_conservation_error, rep.conservation_error);
        const double replay_err =
            std::max({rep.max_theta_error, rep.max_subsidy_error, rep.max_balance_error,
                      rep.nu_identity_error});
        stats.max_replay_error = std::max(stats.max_replay_error, replay_err);
        stats.replay_ok = stats.replay_ok && rep.ok;

        const double nu_final = inst.nu.value(res.x_final);
        nu_min = std::min(nu_min, nu_final);
        nu_max = std::max(nu_max, nu_final);
        nu_sum += nu_final;
        rounds_sum += static_cast<long>(res.rounds.size());
        stats.run_rows.push_back({r, static_cast<int>(res.rounds.size()),
                                  static_cast<int>(res.ledger.entries.size()), nu_final,
                                  inst.nu.distance(res.x_final),
                                  static_cast<int>(res.exit)});
        ++stats.runs;
    }
    if (stats.runs) {
        stats.mean_final_nu = nu_sum / stats.runs;
        stats.final_nu_spread_rel =
            stats.mean_final_nu > 0.0 ? (nu_max - nu_min) / stats.mean_final_nu : 0.0;
        stats.mean_rounds = static_cast<double>(rounds_sum) / stats.runs;
    }
    stats.seconds = elapsed_s(t0);
    return stats;
}

UntruthfulStats esem_untruthful_suite(const ExperimentConfig& cfg, UntruthfulForm form,
                                      int runs) {
    const auto t0 = clock_type::now();
    UntruthfulStats stats;
    stats.form = form;
    EsemInstance inst = make_esem_instance(cfg);

    // Deviator: the seller with the largest initial gap.
    std::size_t deviator = 0;
    double best_gap = 0.0;
    for (std::size_t i = 0; i < inst.users.size(); ++i) {
        const double gap = inst.x_accepted[i] - inst.nu.target()[i];
        if (gap > best_gap) {
            best_gap = gap;
            deviator = i;
        }
    }
    if (best_gap <= 0.0)
        throw std::runtime_error("esem untruthful suite: no initial seller to distort");

    QuotePolicy policy;
    switch (form) {
    case UntruthfulForm::inflated_ask:
        policy = [deviator](const QuoteRequest& q) {
            return q.user == deviator && q.selling ? 1.5 * q.truthful : q.truthful;
        };
        break;
    case UntruthfulForm::deflated_ask:
        policy = [deviator](const QuoteRequest& q) {
            return q.user == deviator && q.selling ? 0.5 * q.truthful : q.truthful;
        };
        break;
    case UntruthfulForm::skip_rounds:
        policy = [deviator](const QuoteRequest& q) {
            if (q.user == deviator && q.selling && q.round % 2 == 0)
                return q.truthful + 1e9;  // prices itself out of even rounds
            return q.truthful;
        };
        break;
    }

    for (int r = 0; r < runs; ++r) {
        EsemConfig mech{cfg.esem.quantum, cfg.esem.subsidy_fraction, cfg.esem.max_rounds,
                        Rng::mix(cfg.seed, 0x07DD + static_cast<std::uint64_t>(r))};
        EsemResult truthful = esem_run(inst.users, inst.x_accepted, inst.nu, mech);
        EsemResult distorted = esem_run(inst.users, inst.x_accepted, inst.nu, mech, policy);

        const auto u_t = cumulative_utilities(inst.users, inst.x_accepted, truthful);
        const auto u_d = cumulative_utilities(inst.users, inst.x_accepted, distorted);
        const double excess = u_d.back()[deviator] - u_t.back()[deviator];
        stats.max_excess = std::max(stats.max_excess, excess);
        for (const auto& e : truthful.ledger.entries)
            if (e.seller == deviator || e.buyer == deviator) ++stats.deviator_trades_truthful;
        for (const auto& e : distorted.ledger.entries)
            if (e.seller == deviator || e.buyer == deviator)
                ++stats.deviator_trades_untruthful;
        ++stats.runs;
    }
    stats.seconds = elapsed_s(t0);
    return stats;
}

// ---------------------------------------------------------------------------
// Experiment runners (CSV + JSON emission around the suites).

ExperimentReport run_example1(const ExperimentConfig& cfg) {
    ExperimentReport report;
    report.experiment = "example1";
    const fs::path out = ensure_dir(cfg.output_dir);

    ScenarioConfig sc = cfg.scenario;
    sc.seed = cfg.seed;
    if (sc.n_links != 8)
        throw std::invalid_argument("example1 expects an 8-link scenario");
    Scenario scen = sample_scenario(sc);
    write_scenario_csv(scen, (out / "example1_links.csv").string(), cfg.stamp());
    std::vector<ComposedUtility> users = scenario_utilities(scen);

    const std::vector<double> grid = linspace(cfg.eps_sweep_lo, cfg.eps_sweep_hi,
                                              cfg.sweep_points);
    CsvWriter truthful_csv((out / "example1_truthful.csv").string());
    truthful_csv.comment(cfg.stamp());
    truthful_csv.header({"link", "eps_true", "utility", "allocation", "lambda"});

    int links_without_gain = 0;
    int profitable_points = 0;
    int allocation_violations = 0;
    int non_converged = 0;
    for (std::size_t i = 0; i < users.size(); ++i) {
        SweepResult sweep = best_misreport_sweep(users, i, grid, SweepFamily::misreported_eps,
                                                 sc.total_power_w, sc.p_max_w, cfg.solver);
        write_sweep_csv(sweep,
                        (out / ("example1_sweep_link" + std::to_string(i) + ".csv")).string(),
                        cfg.stamp());
        truthful_csv.row(std::vector<double>{static_cast<double>(i), scen.links[i].eps,
                                             sweep.baseline.u_true, sweep.baseline.x_under,
                                             sweep.baseline.lambda_under});

        const double u_base = sweep.baseline.u_true;
        const double x_base = sweep.baseline.x_under;
        const SweepPoint& best = sweep.points[sweep.best_index];
        if (!(best.outcome.u_true >= u_base - 1e-9)) ++links_without_gain;
        for (const auto& pt : sweep.points) {
            if (!pt.outcome.converged) {
                ++non_converged;  // row stays in the CSV, flagged
                continue;
            }
            if (pt.outcome.u_true > u_base + 1e-9) {
                ++profitable_points;
                if (!(pt.outcome.x_under < x_base - 1e-12)) ++allocation_violations;
            }
        }
    }

    report.add("max_sweep_utility_at_least_truthful", links_without_gain == 0,
               std::to_string(links_without_gain) + " links below truthful");
    report.add("profitable_points_have_smaller_allocation", allocation_violations == 0,
               std::to_string(allocation_violations) + " violations over " +
                   std::to_string(profitable_points) + " profitable points");
    report.add("all_sweep_points_converged", non_converged == 0,
               std::to_string(non_converged) + " non-converged points flagged");
    write_report_json(report, (out / "example1_summary.json").string());
    return report;
}

ExperimentReport run_example2(const ExperimentConfig& cfg) {
    ExperimentReport report;
    report.experiment = "example2";
    const fs::path out = ensure_dir(cfg.output_dir);

    SemSuiteStats stats = sem_suite(cfg, 0);

    CsvWriter curve((out / "example2_curve.csv").string());
    curve.comment(cfg.stamp());
    curve.header({"alpha", "success_rate", "mean_center_gain", "mean_gain_over_stake",
                  "n_success"});
    for (const auto& pt : stats.curve)
        curve.row(std::vector<double>{pt.alpha, pt.success_rate, pt.mean_center_gain,
                                      pt.mean_gain_over_stake,
                                      static_cast<double>(pt.n_success)});

    CsvWriter samples((out / "example2_samples.csv").string());
    samples.comment(cfg.stamp());
    samples.header({"sample", "ask_truthful", "bid_truthful", "stake", "threshold_alpha"});
    for (const auto& row : stats.samples_detail)
        samples.row(std::vector<double>{static_cast<double>(row.sample), row.ask_truthful,
                                        row.bid_truthful, row.stake, row.threshold_alpha});

    report.add("samples_generated", stats.samples == cfg.n_samples,
               std::to_string(stats.samples) + "/" + std::to_string(cfg.n_samples));
    report.add("per_sample_success_monotone", stats.per_sample_monotonicity_violations == 0,
               std::to_string(stats.per_sample_monotonicity_violations) + " violations");
    report.add("success_curve_nondecreasing", stats.success_curve_nondecreasing, "");
    report.add("gain_ratio_curve_nonincreasing", stats.gain_ratio_curve_nonincreasing, "");
    report.add("center_gain_positive_on_success", stats.nonpositive_center_gain == 0,
               std::to_string(stats.nonpositive_center_gain) + " nonpositive over " +
                   std::to_string(stats.successes) + " successes");
    report.add("center_gain_identity",
               stats.max_center_gain_identity_error <= 1e-12,
               "max error " + format_double(stats.max_center_gain_identity_error));
    report.add("fair_gains", stats.max_fairness_gap <= 1e-12,
               "max gap " + format_double(stats.max_fairness_gap));
    write_report_json(report, (out / "example2_summary.json").string());
    return report;
}

ExperimentReport run_example3(const ExperimentConfig& cfg) {
    ExperimentReport report;
    report.experiment = "example3";
    const fs::path out = ensure_dir(cfg.output_dir);

    EsemSuiteStats stats = esem_suite(cfg);

    CsvWriter runs((out / "example3_runs.csv").string());
    runs.comment(cfg.stamp());
    runs.header({"run", "rounds", "exchanges", "final_nu", "final_distance", "exit"});
    for (const auto& row : stats.run_rows)
        runs.row(std::vector<double>{static_cast<double>(row.run),
                                     static_cast<double>(row.rounds),
                                     static_cast<double>(row.exchanges), row.final_nu,
                                     row.final_distance, static_cast<double>(row.exit_code)});

    // Trace files and the round/utility/ledger dumps for the first run.
    EsemInstance inst = make_esem_instance(cfg);
    for (int r = 0; r < cfg.esem.runs; ++r) {
        EsemConfig mech{cfg.esem.quantum, cfg.esem.subsidy_fraction, cfg.esem.max_rounds,
                        Rng::mix(cfg.seed, 0xE5E0 + static_cast<std::uint64_t>(r))};
        EsemResult res = esem_run(inst.users, inst.x_accepted, inst.nu, mech);
        CsvWriter trace((out / ("example3_trace_run" + std::to_string(r) + ".csv")).string());
        trace.comment(cfg.stamp());
        trace.header({"round", "nu", "distance"});
        for (std::size_t l = 0; l < res.rounds.size(); ++l) {
            const std::vector<double>& x_after =
                l + 1 < res.rounds.size() ? res.rounds[l + 1].x : res.x_final;
            trace.row(std::vector<double>{static_cast<double>(l), inst.nu.value(x_after),
                                          inst.nu.distance(x_after)});
        }
        if (r == 0) {
            write_esem_rounds_csv(res, inst.users, inst.x_accepted, inst.nu,
                                  (out / "example3_rounds_run0.csv").string(), cfg.stamp());
            write_ledger_json(res, inst.x_accepted,
                              (out / "example3_ledger_run0.json").string());
            const auto utilities = cumulative_utilities(inst.users, inst.x_accepted, res);
            CsvWriter ucsv((out / "example3_utilities_run0.csv").string());
            ucsv.comment(cfg.stamp());
            std::vector<std::string> cols{"round"};
            for (std::size_t i = 1; i <= inst.users.size(); ++i)
                cols.push_back("u_" + std::to_string(i));
            ucsv.header(cols);
            for (std::size_t l = 0; l < utilities.size(); ++l) {
                std::vector<double> row{static_cast<double>(l)};
                row.insert(row.end(), utilities[l].begin(), utilities[l].end());
                ucsv.row(row);
            }
        }
    }

    report.add("all_runs_terminated", stats.truncated_runs == 0,
               std::to_string(stats.truncated_runs) + " truncated of " +
                   std::to_string(stats.runs));
    report.add("per_user_utilities_nondecreasing", stats.ir_violations == 0,
               std::to_string(stats.ir_violations) + " runs violated");
    report.add("allocation_conserved", stats.max_conservation_error <= 1e-12,
               "max error " + format_double(stats.max_conservation_error));
    report.add("ledger_replay", stats.replay_ok,
               "max error " + format_double(stats.max_replay_error));
    report.add("subsidy_products_nonincreasing", stats.guard_violations == 0,
               std::to_string(stats.guard_violations) + " runs violated");
    report.add("final_nu_spread_within_10pct", stats.final_nu_spread_rel <= 0.10,
               "spread " + format_double(stats.final_nu_spread_rel) + ", mean " +
                   format_double(stats.mean_final_nu));
    write_report_json(report, (out / "example3_summary.json").string());
    return report;
}

ExperimentReport run_oracle_check(const ExperimentConfig& cfg) {
    ExperimentReport report;
    report.experiment = "oracle_check";
    const fs::path out = ensure_dir(cfg.output_dir);

    OracleSuiteStats stats =
        oracle_suite(cfg.seed, cfg.n_samples, 4, cfg.oracle_grid_n, cfg.solver);

    CsvWriter csv((out / "oracle_check.csv").string());
    csv.comment(cfg.stamp());
    csv.header({"instance", "n_users", "value_solver", "value_oracle", "rel_gap", "kkt",
                "converged"});
    for (const auto& row : stats.rows)
        csv.row(std::vector<double>{static_cast<double>(row.instance),
                                    static_cast<double>(row.n), row.value_solver,
                                    row.value_oracle, row.rel_gap, row.kkt,
                                    row.converged ? 1.0 : 0.0});

    report.add("all_converged", stats.non_converged == 0,
               std::to_string(stats.non_converged) + " non-converged");
    report.add("sum_valuation_within_1e-3", stats.max_rel_gap <= 1e-3,
               "max rel gap " + format_double(stats.max_rel_gap));
    report.add("kkt_residual_within_1e-4", stats.max_kkt_residual <= 1e-4,
               "max residual " + format_double(stats.max_kkt_residual));
    write_report_json(report, (out / "oracle_check_summary.json").string());
    return report;
}

ExperimentReport run_dual_audit(const ExperimentConfig& cfg) {
    ExperimentReport report;
    report.experiment = "dual_audit";
    const fs::path out = ensure_dir(cfg.output_dir);

    LemmaSuiteStats stats =
        lemma_suite(cfg.seed, cfg.n_samples, cfg.audit_n_users, cfg.sweep_points, cfg.solver);

    CsvWriter csv((out / "dual_audit.csv").string());
    csv.comment(cfg.stamp());
    csv.header({"instance", "user", "lambda_truthful", "x_truthful", "u_truthful",
                "best_alpha", "best_gain", "lambda_at_best", "x_at_best"});
    for (const auto& row : stats.rows)
        csv.row(std::vector<double>{static_cast<double>(row.instance),
                                    static_cast<double>(row.user), row.lambda_base,
                                    row.x_base, row.u_base, row.best_alpha, row.best_gain,
                                    row.lambda_at_best, row.x_at_best});

    report.add("instances_generated", stats.instances == cfg.n_samples,
               std::to_string(stats.instances) + "/" + std::to_string(cfg.n_samples));
    report.add("every_user_has_profitable_deviation",
               stats.users_without_profitable_deviation == 0,
               std::to_string(stats.users_without_profitable_deviation) + " of " +
                   std::to_string(stats.users_checked) + " users without; min best gain " +
                   format_double(stats.min_best_gain));
    report.add("profitable_points_reduce_allocation",
               stats.alpha_allocation_violations == 0,
               std::to_string(stats.alpha_allocation_violations) + " violations over " +
                   std::to_string(stats.alpha_profitable_points) + " profitable points");
    report.add("price_raising_deviations_unprofitable", stats.lemma1_violations == 0,
               std::to_string(stats.lemma1_violations) + " violations over " +
                   std::to_string(stats.lemma1_applicable_points) + " applicable points");
    report.add("scaled_reports_lower_price", stats.lemma2_violations == 0,
               std::to_string(stats.lemma2_violations) + " violations over " +
                   std::to_string(stats.lemma2_cases) + " cases");
    report.add("all_points_converged", stats.non_converged_points == 0,
               std::to_string(stats.non_converged_points) + " non-converged points");
    write_report_json(report, (out / "dual_audit_summary.json").string());
    return report;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    if (cfg.experiment == "example1") return run_example1(cfg);
    if (cfg.experiment == "example2") return run_example2(cfg);
    if (cfg.experiment == "example3") return run_example3(cfg);
    if (cfg.experiment == "oracle_check") return run_oracle_check(cfg);
    if (cfg.experiment == "dual_audit") return run_dual_audit(cfg);
    throw std::invalid_argument("unknown experiment: " + cfg.experiment);
}

} // namespace mechnum
