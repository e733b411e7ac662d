#include "mechnum/dual_solver.hpp"

#include "mechnum/csv.hpp"
#include "mechnum/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mechnum {

double Allocation::sum() const {
    return std::accumulate(x.begin(), x.end(), 0.0);
}

double best_response(const ComposedUtility& u, double lambda, double x_max) {
    if (lambda < 0.0) throw std::domain_error("best_response needs lambda >= 0");
    const double cap = std::min(x_max, u.domain_hi());

    double scale = 0.0, eps = 0.0;
    if (u.objective().kind() == ObjectiveFn::Kind::identity &&
        u.valuation().exponential_core(&scale, &eps)) {
        // Stationarity scale*eps*exp(-eps*x) = lambda.
        if (lambda <= 0.0) return cap;
        if (lambda >= scale * eps) return 0.0;
        return std::clamp(std::log(scale * eps / lambda) / eps, 0.0, cap);
    }
    if (u.objective().kind() == ObjectiveFn::Kind::identity &&
        u.valuation().kind() == ValuationFn::Kind::affine) {
        return u.valuation().param() > lambda ? cap : 0.0;
    }

    // Concave u: u'(x) - lambda is nonincreasing, so bisect on its sign.
    return decreasing_root([&](double x) { return u.deriv(x) - lambda; }, 0.0, cap);
}

DualState dual_iterate(const DualState& state, std::span<const double> responses,
                       double budget, double delta) {
    double total = std::accumulate(responses.begin(), responses.end(), 0.0);
    DualState next;
    next.lambda = std::max(0.0, state.lambda + delta * (total - budget));
    next.iter = state.iter + 1;
    next.reports.assign(responses.begin(), responses.end());
    return next;
}

double default_step(std::span<const ComposedUtility> users, double budget) {
    if (users.empty() || budget <= 0.0) return 1e-3;
    const double ref = budget / static_cast<double>(users.size());
    double slope = 0.0;
    for (const auto& u : users) slope += u.deriv(std::min(ref, u.domain_hi()));
    slope /= static_cast<double>(users.size());
    double step = 0.01 * slope / budget;
    return step > 0.0 ? step : 1e-3;
}

Allocation solve(std::span<const ComposedUtility> users, double budget, double x_max,
                 const SolverConfig& cfg, std::vector<DualTracePoint>* trace) {
    if (users.empty()) throw std::invalid_argument("solve needs at least one user");
    if (budget <= 0.0 || x_max <= 0.0)
        throw std::invalid_argument("solve needs positive budget and per-user cap");

    const double delta0 = cfg.step_delta > 0.0 ? cfg.step_delta : default_step(users, budget);
    const std::size_t n = users.size();
    const double cs_tol = 10.0 * cfg.tol * std::max(1.0, budget);

    double lambda = std::max(0.0, cfg.lambda0);
    std::vector<double> x(n, 0.0), x_prev(n, 0.0);

    Allocation out;
    for (int j = 0; j < cfg.max_iter; ++j) {
        for (std::size_t i = 0; i < n; ++i) x[i] = best_response(users[i], lambda, x_max);
        const double total = std::accumulate(x.begin(), x.end(), 0.0);

        if (trace) trace->push_back({j, lambda, x});

        if (j > 0) {
            double dx = 0.0;
            for (std::size_t i = 0; i < n; ++i) dx = std::max(dx, std::abs(x[i] - x_prev[i]));
            const double violation = std::max(0.0, total - budget);
            const double slack = lambda * std::abs(budget - total);
            if (dx <= cfg.tol && violation <= cfg.tol && slack <= cs_tol) {
                out.x = x;
                out.lambda_star = lambda;
                out.converged = true;
                out.iters_used = j + 1;
                return out;
            }
        }
        x_prev = x;

        const double delta = cfg.diminishing ? delta0 / std::sqrt(j + 1.0) : delta0;
        lambda = std::max(0.0, lambda + delta * (total - budget));
    }

    out.x = x;
    out.lambda_star = lambda;
    out.converged = false;
    out.iters_used = cfg.max_iter;
    return out;
}

double sum_valuation(std::span<const ComposedUtility> users, std::span<const double> x) {
    double total = 0.0;
    for (std::size_t i = 0; i < users.size(); ++i) total += users[i].value(x[i]);
    return total;
}

Allocation brute_force_social_opt(std::span<const ComposedUtility> users, double budget,
                                  double x_max, int grid_n) {
    const std::size_t n = users.size();
    if (n == 0 || n > 5)
        throw std::invalid_argument("brute_force_social_opt handles 1 to 5 users");
    if (grid_n < 2) throw std::invalid_argument("grid_n must be at least 2");

    const double cap = std::min(x_max, budget);
    const double h = cap / static_cast<double>(grid_n - 1);

    // Per-user value tables over the grid levels; evaluation inside the
    // enumeration is then a handful of lookups.
    std::vector<std::vector<double>> table(n, std::vector<double>(grid_n));
    for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < grid_n; ++k)
            table[i][k] = users[i].value(std::min(cap, k * h));

    // Enumerate index tuples with h*sum(idx) <= budget.
    const int idx_budget = static_cast<int>(budget / h + 1e-9);
    std::vector<int> idx(n, 0), best_idx(n, 0);
    double best_value = -1.0;

    auto enumerate = [&](auto&& self, std::size_t level, int remaining, double value) -> void {
        if (level == n) {
            if (value > best_value) {
                best_value = value;
                best_idx = idx;
            }
            return;
        }
        const int hi = std::min(grid_n - 1, remaining);
        for (int k = 0; k <= hi; ++k) {
            idx[level] = k;
            self(self, level + 1, remaining - k, value + table[level][k]);
        }
    };
    enumerate(enumerate, 0, idx_budget, 0.0);

    Allocation out;
    out.x.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.x[i] = std::min(cap, best_idx[i] * h);
    out.lambda_star = 0.0;
    out.converged = true;
    out.iters_used = 0;
    return out;
}

double kkt_residual(const Allocation& alloc, std::span<const ComposedUtility> users,
                    double budget, double x_max) {
    const double lambda = alloc.lambda_star;
    double stationarity = 0.0;
    for (std::size_t i = 0; i < users.size(); ++i) {
        const double xi = alloc.x[i];
        const double cap = std::min(x_max, users[i].domain_hi());
        const double slope = users[i].deriv(std::min(xi, cap));
        double viol;
        if (xi <= 1e-12)
            viol = std::max(0.0, slope - lambda);       // at zero: u'(0) <= lambda
        else if (xi >= cap - 1e-12)
            viol = std::max(0.0, lambda - slope);       // at cap: u'(cap) >= lambda
        else
            viol = std::abs(slope - lambda);
        stationarity = std::max(stationarity, viol);
    }
    const double total = alloc.sum();
    const double primal = std::max(0.0, total - budget);
    const double slack = lambda * std::max(0.0, budget - total);
    return stationarity + primal + slack;
}

void write_trace_csv(std::span<const DualTracePoint> trace, const std::string& path,
                     const std::string& config_stamp) {
    CsvWriter csv(path);
    csv.comment(config_stamp);
    std::vector<std::string> cols{"iter", "lambda"};
    const std::size_t n = trace.empty() ? 0 : trace.front().x.size();
    for (std::size_t i = 1; i <= n; ++i) cols.push_back("x_" + std::to_string(i));
    csv.header(cols);
    for (const auto& pt : trace) {
        std::vector<double> row{static_cast<double>(pt.iter), pt.lambda};
        row.insert(row.end(), pt.x.begin(), pt.x.end());
        csv.row(row);
    }
}

} // namespace mechnum
