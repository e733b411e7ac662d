#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mechnum/d2d_scenario.hpp"
#include "mechnum/dual_solver.hpp"
#include "mechnum/experiments.hpp"
#include "mechnum/mechanisms.hpp"
#include "mechnum/strategies.hpp"
#include "mechnum/valuation.hpp"

namespace py = pybind11;
using namespace mechnum;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Dual-pricing and subsidized-exchange resource allocation";

    py::class_<ObjectiveFn>(m, "ObjectiveFn")
        .def_static("identity", &ObjectiveFn::identity)
        .def_static("rate", &ObjectiveFn::rate, py::arg("gain"),
                    py::arg("noise_plus_interf"))
        .def_static("energy_efficiency", &ObjectiveFn::energy_efficiency, py::arg("gain"),
                    py::arg("noise_plus_interf"), py::arg("circuit_power"))
        .def("value", &ObjectiveFn::value)
        .def("deriv", &ObjectiveFn::deriv)
        .def("peak", &ObjectiveFn::peak, py::arg("hi"))
        .def_property_readonly("unimodal", &ObjectiveFn::unimodal);

    py::class_<ValuationFn>(m, "ValuationFn")
        .def_static("exponential", &ValuationFn::exponential, py::arg("eps"))
        .def_static("scaled", &ValuationFn::scaled, py::arg("alpha"), py::arg("inner"))
        .def_static("affine", &ValuationFn::affine, py::arg("weight"))
        .def("value", &ValuationFn::value)
        .def("deriv", &ValuationFn::deriv)
        .def_property_readonly("strictly_concave", &ValuationFn::strictly_concave);

    py::class_<ComposedUtility>(m, "ComposedUtility")
        .def(py::init<ValuationFn, ObjectiveFn, double>(), py::arg("valuation"),
             py::arg("objective"), py::arg("x_max"))
        .def("value", &ComposedUtility::value)
        .def("deriv", &ComposedUtility::deriv)
        .def_property_readonly("domain_hi", &ComposedUtility::domain_hi);

    py::class_<SolverConfig>(m, "SolverConfig")
        .def(py::init<>())
        .def_readwrite("lambda0", &SolverConfig::lambda0)
        .def_readwrite("step_delta", &SolverConfig::step_delta)
        .def_readwrite("tol", &SolverConfig::tol)
        .def_readwrite("max_iter", &SolverConfig::max_iter)
        .def_readwrite("diminishing", &SolverConfig::diminishing);

    py::class_<Allocation>(m, "Allocation")
        .def_readonly("x", &Allocation::x)
        .def_readonly("lambda_star", &Allocation::lambda_star)
        .def_readonly("converged", &Allocation::converged)
        .def_readonly("iters_used", &Allocation::iters_used);

    m.def("best_response", &best_response, py::arg("utility"), py::arg("price"),
          py::arg("x_max"));
    m.def(
        "solve",
        [](const std::vector<ComposedUtility>& users, double budget, double x_max,
           const SolverConfig& cfg) { return solve(users, budget, x_max, cfg); },
        py::arg("users"), py::arg("budget"), py::arg("x_max"),
        py::arg("config") = SolverConfig{});
    m.def(
        "brute_force_social_opt",
        [](const std::vector<ComposedUtility>& users, double budget, double x_max,
           int grid_n) { return brute_force_social_opt(users, budget, x_max, grid_n); },
        py::arg("users"), py::arg("budget"), py::arg("x_max"), py::arg("grid_n") = 161);
    m.def(
        "kkt_residual",
        [](const Allocation& alloc, const std::vector<ComposedUtility>& users, double budget,
           double x_max) { return kkt_residual(alloc, users, budget, x_max); },
        py::arg("allocation"), py::arg("users"), py::arg("budget"), py::arg("x_max"));
    m.def(
        "sum_valuation",
        [](const std::vector<ComposedUtility>& users, const std::vector<double>& x) {
            return sum_valuation(users, x);
        },
        py::arg("users"), py::arg("x"));

    py::class_<DeviationOutcome>(m, "DeviationOutcome")
        .def_readonly("x_under", &DeviationOutcome::x_under)
        .def_readonly("lambda_under", &DeviationOutcome::lambda_under)
        .def_readonly("u_true", &DeviationOutcome::u_true)
        .def_readonly("u_reported", &DeviationOutcome::u_reported)
        .def_readonly("converged", &DeviationOutcome::converged)
        .def_readonly("x_baseline", &DeviationOutcome::x_baseline)
        .def_readonly("lambda_baseline", &DeviationOutcome::lambda_baseline)
        .def_readonly("u_baseline", &DeviationOutcome::u_baseline);

    m.def(
        "deviate_scaled",
        [](const std::vector<ComposedUtility>& users, std::size_t deviator, double alpha,
           double budget, double x_max, const SolverConfig& cfg) {
            return deviate_one(users, deviator, ScaledValuation{alpha}, budget, x_max, cfg);
        },
        py::arg("users"), py::arg("deviator"), py::arg("alpha"), py::arg("budget"),
        py::arg("x_max"), py::arg("config") = SolverConfig{});
    m.def(
        "deviate_misreported_eps",
        [](const std::vector<ComposedUtility>& users, std::size_t deviator, double eps,
           double budget, double x_max, const SolverConfig& cfg) {
            return deviate_one(users, deviator, MisreportedEps{eps}, budget, x_max, cfg);
        },
        py::arg("users"), py::arg("deviator"), py::arg("eps_reported"), py::arg("budget"),
        py::arg("x_max"), py::arg("config") = SolverConfig{});

    py::class_<ScenarioConfig>(m, "ScenarioConfig")
        .def(py::init<>())
        .def_readwrite("cell_radius_m", &ScenarioConfig::cell_radius_m)
        .def_readwrite("d2d_dist_min_m", &ScenarioConfig::d2d_dist_min_m)
        .def_readwrite("d2d_dist_max_m", &ScenarioConfig::d2d_dist_max_m)
        .def_readwrite("noise_psd_dbm_hz", &ScenarioConfig::noise_psd_dbm_hz)
        .def_readwrite("noise_figure_db", &ScenarioConfig::noise_figure_db)
        .def_readwrite("rb_bandwidth_hz", &ScenarioConfig::rb_bandwidth_hz)
        .def_readwrite("p_max_w", &ScenarioConfig::p_max_w)
        .def_readwrite("p_cell_w", &ScenarioConfig::p_cell_w)
        .def_readwrite("total_power_w", &ScenarioConfig::total_power_w)
        .def_readwrite("carrier_ghz", &ScenarioConfig::carrier_ghz)
        .def_readwrite("pathloss_exponent", &ScenarioConfig::pathloss_exponent)
        .def_readwrite("n_links", &ScenarioConfig::n_links)
        .def_readwrite("n_energy_efficiency", &ScenarioConfig::n_energy_efficiency)
        .def_readwrite("seed", &ScenarioConfig::seed);

    py::enum_<LinkObjective>(m, "LinkObjective")
        .value("rate", LinkObjective::rate)
        .value("energy_efficiency", LinkObjective::energy_efficiency);

    py::class_<LinkDraw>(m, "LinkDraw")
        .def_readonly("distance_m", &LinkDraw::distance_m)
        .def_readonly("fading_power", &LinkDraw::fading_power)
        .def_readonly("gain", &LinkDraw::gain)
        .def_readonly("p_interf_w", &LinkDraw::p_interf_w)
        .def_readonly("objective", &LinkDraw::objective)
        .def_readonly("eps", &LinkDraw::eps);

    py::class_<Scenario>(m, "Scenario")
        .def_readonly("links", &Scenario::links);

    m.def("noise_floor_w", &noise_floor_w);
    m.def("noise_floor_dbm", &noise_floor_dbm);
    m.def("pathloss_db", &pathloss_db, py::arg("config"), py::arg("distance_m"));
    m.def("sample_scenario", &sample_scenario);
    m.def("link_utility", &link_utility, py::arg("config"), py::arg("link"));
    m.def("scenario_utilities", &scenario_utilities);

    py::class_<CenterValuation>(m, "CenterValuation")
        .def(py::init<double, double, std::vector<double>, int>(), py::arg("amplitude"),
             py::arg("width"), py::arg("target"), py::arg("norm_power"))
        .def("value", [](const CenterValuation& nu,
                         const std::vector<double>& x) { return nu.value(x); })
        .def("distance", [](const CenterValuation& nu,
                            const std::vector<double>& x) { return nu.distance(x); })
        .def_property_readonly("target", &CenterValuation::target);

    m.def(
        "preferred_allocation",
        [](const CenterValuation& nu, double budget, double x_max) {
            return preferred_allocation(nu, budget, x_max);
        },
        py::arg("nu"), py::arg("budget"), py::arg("x_max"));
    m.def(
        "dual_price_transfer",
        [](const std::vector<double>& x, double lambda) {
            return dual_price_transfer(x, lambda);
        },
        py::arg("x"), py::arg("price"));

    py::class_<SemQuotes>(m, "SemQuotes")
        .def_readonly("ask", &SemQuotes::ask)
        .def_readonly("bid", &SemQuotes::bid);

    py::class_<SemOutcome>(m, "SemOutcome")
        .def_readonly("success", &SemOutcome::success)
        .def_readonly("charge_buyer", &SemOutcome::charge_buyer)
        .def_readonly("pay_seller", &SemOutcome::pay_seller)
        .def_readonly("seller_gain", &SemOutcome::seller_gain)
        .def_readonly("buyer_gain", &SemOutcome::buyer_gain)
        .def_readonly("center_gain", &SemOutcome::center_gain)
        .def_readonly("x_final", &SemOutcome::x_final);

    m.def(
        "sem_truthful_quotes",
        [](const ComposedUtility& u1, const ComposedUtility& u2,
           const std::vector<double>& x_accepted, const std::vector<double>& x_target) {
            return sem_truthful_quotes(u1, u2, x_accepted, x_target);
        },
        py::arg("u1"), py::arg("u2"), py::arg("x_accepted"), py::arg("x_target"));
    m.def(
        "sem_run",
        [](double ask, double bid, double center_stake, double alpha,
           const std::vector<double>& x_accepted, const std::vector<double>& x_target) {
            return sem_run(ask, bid, center_stake, alpha, x_accepted, x_target);
        },
        py::arg("ask"), py::arg("bid"), py::arg("center_stake"), py::arg("alpha"),
        py::arg("x_accepted"), py::arg("x_target"));

    py::class_<EsemConfig>(m, "EsemConfig")
        .def(py::init<>())
        .def_readwrite("quantum", &EsemConfig::quantum)
        .def_readwrite("subsidy_fraction", &EsemConfig::subsidy_fraction)
        .def_readwrite("max_rounds", &EsemConfig::max_rounds)
        .def_readwrite("seed", &EsemConfig::seed);

    py::class_<LedgerEntry>(m, "LedgerEntry")
        .def_readonly("round", &LedgerEntry::round)
        .def_readonly("seller", &LedgerEntry::seller)
        .def_readonly("buyer", &LedgerEntry::buyer)
        .def_readonly("quantum", &LedgerEntry::quantum)
        .def_readonly("alpha", &LedgerEntry::alpha)
        .def_readonly("theta", &LedgerEntry::theta)
        .def_readonly("ask", &LedgerEntry::ask)
        .def_readonly("bid", &LedgerEntry::bid)
        .def_readonly("charge", &LedgerEntry::charge)
        .def_readonly("payment", &LedgerEntry::payment)
        .def_readonly("subsidy", &LedgerEntry::subsidy);

    py::class_<TransferLedger>(m, "TransferLedger")
        .def_readonly("user_transfers", &TransferLedger::user_transfers)
        .def_readonly("center_subsidy", &TransferLedger::center_subsidy)
        .def_readonly("entries", &TransferLedger::entries);

    py::enum_<EsemExit>(m, "EsemExit")
        .value("target_reached", EsemExit::target_reached)
        .value("no_viable_pairs", EsemExit::no_viable_pairs)
        .value("selection_exhausted", EsemExit::selection_exhausted)
        .value("truncated", EsemExit::truncated);

    py::class_<EsemResult>(m, "EsemResult")
        .def_readonly("x_final", &EsemResult::x_final)
        .def_readonly("ledger", &EsemResult::ledger)
        .def_readonly("exit", &EsemResult::exit)
        .def_property_readonly("rounds",
                               [](const EsemResult& r) { return r.rounds.size(); })
        .def_property_readonly("truncated", &EsemResult::truncated);

    m.def(
        "esem_run",
        [](const std::vector<ComposedUtility>& users, const std::vector<double>& x_accepted,
           const CenterValuation& nu, const EsemConfig& cfg) {
            return esem_run(users, x_accepted, nu, cfg);
        },
        py::arg("users"), py::arg("x_accepted"), py::arg("nu"), py::arg("config"));
    m.def(
        "cumulative_utilities",
        [](const std::vector<ComposedUtility>& users, const std::vector<double>& x_accepted,
           const EsemResult& result) {
            return cumulative_utilities(users, x_accepted, result);
        },
        py::arg("users"), py::arg("x_accepted"), py::arg("result"));
}
