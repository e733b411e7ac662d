#pragma once

#include "mechnum/valuation.hpp"

#include <span>
#include <string>
#include <vector>

namespace mechnum {

/// Knobs of the price-iteration loop. step_delta <= 0 selects an
/// automatic step of 0.01 * (mean marginal utility at the equal split)
/// / budget. With diminishing = true the step decays as delta/sqrt(j+1),
/// which trades speed for robustness on stubborn instances.
struct SolverConfig {
    double lambda0 = 0.0;
    double step_delta = 0.0;
    double tol = 1e-7;
    int max_iter = 200000;
    bool diminishing = false;
};

/// One snapshot of the price loop: current price, iteration count, and the
/// latest per-user reports.
struct DualState {
    double lambda = 0.0;
    int iter = 0;
    std::vector<double> reports;
};

struct DualTracePoint {
    int iter;
    double lambda;
    std::vector<double> x;
};

struct Allocation {
    std::vector<double> x;
    double lambda_star = 0.0;
    bool converged = false;
    int iters_used = 0;
    double sum() const;
};

/// Maximizer of u(x) - lambda*x over [0, min(x_max, u.domain_hi())].
/// Closed form when u is (scaled-)exponential over the identity objective;
/// derivative bisection otherwise (u is concave on its domain).
double best_response(const ComposedUtility& u, double lambda, double x_max);

/// Projected subgradient step on the price:
/// lambda <- max(0, lambda + delta * (sum(reports) - budget)).
DualState dual_iterate(const DualState& state, std::span<const double> responses,
                       double budget, double delta);

/// Runs the report/price loop until the allocation stabilizes and the
/// budget constraint plus complementary slackness hold within tolerance,
/// or max_iter is reached. Non-convergence is reported via the flag, not
/// an exception. An optional trace records (iter, lambda, x) per step.
Allocation solve(std::span<const ComposedUtility> users, double budget, double x_max,
                 const SolverConfig& cfg, std::vector<DualTracePoint>* trace = nullptr);

/// Exhaustive grid search over the feasible box intersected with the
/// budget simplex, grid_n points per axis. Scales only to 5 users; throws
/// std::invalid_argument beyond that.
Allocation brute_force_social_opt(std::span<const ComposedUtility> users, double budget,
                                  double x_max, int grid_n);

/// Sum of valuations at an allocation.
double sum_valuation(std::span<const ComposedUtility> users, std::span<const double> x);

/// Max over users of the stationarity violation plus the complementary
/// slackness violation; zero (to tolerance) exactly at a KKT point.
double kkt_residual(const Allocation& alloc, std::span<const ComposedUtility> users,
                    double budget, double x_max);

/// Heuristic default price step (see SolverConfig).
double default_step(std::span<const ComposedUtility> users, double budget);

/// Trace dump with columns (iter, lambda, x_1..x_N).
void write_trace_csv(std::span<const DualTracePoint> trace, const std::string& path,
                     const std::string& config_stamp);

} // namespace mechnum
