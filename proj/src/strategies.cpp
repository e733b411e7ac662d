#include "mechnum/strategies.hpp"

#include "mechnum/csv.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mechnum {

ComposedUtility reported_utility(const ComposedUtility& true_u, const ReportingStrategy& s) {
    if (std::holds_alternative<Truthful>(s)) return true_u;
    if (const auto* sv = std::get_if<ScaledValuation>(&s)) {
        if (!(sv->alpha > 0.0 && sv->alpha < 1.0))
            throw std::invalid_argument("scaled report needs alpha in (0,1)");
        return true_u.with_valuation(ValuationFn::scaled(sv->alpha, true_u.valuation()));
    }
    const auto& mr = std::get<MisreportedEps>(s);
    if (mr.eps_reported <= 0.0)
        throw std::invalid_argument("misreported eps must be positive");
    if (true_u.valuation().kind() != ValuationFn::Kind::exponential)
        throw std::invalid_argument("eps misreport applies only to exponential valuations");
    return true_u.with_valuation(ValuationFn::exponential(mr.eps_reported));
}

namespace {

struct Baseline {
    Allocation alloc;
    double u = 0.0;
};

Baseline solve_baseline(std::span<const ComposedUtility> users, std::size_t deviator,
                        double budget, double x_max, const SolverConfig& cfg) {
    Baseline b;
    b.alloc = solve(users, budget, x_max, cfg);
    const double xi = b.alloc.x[deviator];
    b.u = users[deviator].value(xi) - b.alloc.lambda_star * xi;
    return b;
}

DeviationOutcome deviate_with_baseline(std::span<const ComposedUtility> users,
                                       std::size_t deviator, const ReportingStrategy& s,
                                       double budget, double x_max, const SolverConfig& cfg,
                                       const Baseline& base) {
    std::vector<ComposedUtility> reported(users.begin(), users.end());
    reported[deviator] = reported_utility(users[deviator], s);

    // Warm-starting at the truthful price shortens the loop without
    // changing the fixed point.
    SolverConfig warm = cfg;
    if (warm.lambda0 <= 0.0) warm.lambda0 = base.alloc.lambda_star;
    Allocation dev = solve(reported, budget, x_max, warm);

    DeviationOutcome out;
    out.x_under = dev.x[deviator];
    out.lambda_under = dev.lambda_star;
    out.u_true = users[deviator].value(out.x_under) - dev.lambda_star * out.x_under;
    out.u_reported =
        reported[deviator].value(out.x_under) - dev.lambda_star * out.x_under;
    out.converged = dev.converged;
    out.x_baseline = base.alloc.x[deviator];
    out.lambda_baseline = base.alloc.lambda_star;
    out.u_baseline = base.u;
    out.baseline_converged = base.alloc.converged;
    return out;
}

} // namespace

DeviationOutcome deviate_one(std::span<const ComposedUtility> users, std::size_t deviator,
                             const ReportingStrategy& s, double budget, double x_max,
                             const SolverConfig& cfg) {
    if (deviator >= users.size()) throw std::invalid_argument("deviator index out of range");
    const Baseline base = solve_baseline(users, deviator, budget, x_max, cfg);
    return deviate_with_baseline(users, deviator, s, budget, x_max, cfg, base);
}

SweepResult best_misreport_sweep(std::span<const ComposedUtility> users, std::size_t deviator,
                                 std::span<const double> grid, SweepFamily family,
                                 double budget, double x_max, const SolverConfig& cfg) {
    if (deviator >= users.size()) throw std::invalid_argument("deviator index out of range");
    if (grid.empty()) throw std::invalid_argument("sweep needs a non-empty grid");

    const Baseline base = solve_baseline(users, deviator, budget, x_max, cfg);

    SweepResult result;
    result.points.reserve(grid.size());
    for (double param : grid) {
        ReportingStrategy s = family == SweepFamily::scaled_alpha
                                  ? ReportingStrategy(ScaledValuation{param})
                                  : ReportingStrategy(MisreportedEps{param});
        SweepPoint pt;
        pt.param = param;
        pt.outcome = deviate_with_baseline(users, deviator, s, budget, x_max, cfg, base);
        result.points.push_back(pt);
    }

    result.best_index = 0;
    for (std::size_t i = 1; i < result.points.size(); ++i)
        if (result.points[i].outcome.u_true >
            result.points[result.best_index].outcome.u_true)
            result.best_index = i;

    result.baseline = result.points.front().outcome;  // carries the shared baseline fields
    result.baseline.x_under = base.alloc.x[deviator];
    result.baseline.lambda_under = base.alloc.lambda_star;
    result.baseline.u_true = base.u;
    result.baseline.u_reported = base.u;
    result.baseline.converged = base.alloc.converged;
    return result;
}

std::vector<double> open_grid(double lo, double hi, int n) {
    if (n < 1) throw std::invalid_argument("grid needs at least one point");
    std::vector<double> g(n);
    const double h = (hi - lo) / static_cast<double>(n + 1);
    for (int i = 0; i < n; ++i) g[i] = lo + h * (i + 1);
    return g;
}

void write_sweep_csv(const SweepResult& sweep, const std::string& path,
                     const std::string& config_stamp) {
    double u_max = 0.0, x_max = 0.0;
    for (const auto& pt : sweep.points) {
        u_max = std::max(u_max, pt.outcome.u_true);
        x_max = std::max(x_max, pt.outcome.x_under);
    }
    const double u_div = u_max > 0.0 ? u_max : 1.0;
    const double x_div = x_max > 0.0 ? x_max : 1.0;

    CsvWriter csv(path);
    csv.comment(config_stamp);
    csv.comment("truthful: utility=" + format_double(sweep.baseline.u_true) +
                " allocation=" + format_double(sweep.baseline.x_under) +
                " lambda=" + format_double(sweep.baseline.lambda_under));
    csv.header({"strategy_param", "utility_raw", "utility_norm", "allocation_raw",
                "allocation_norm", "lambda", "converged"});
    for (const auto& pt : sweep.points) {
        csv.row(std::vector<double>{pt.param, pt.outcome.u_true, pt.outcome.u_true / u_div,
                                    pt.outcome.x_under, pt.outcome.x_under / x_div,
                                    pt.outcome.lambda_under,
                                    pt.outcome.converged ? 1.0 : 0.0});
    }
}

} // namespace mechnum
