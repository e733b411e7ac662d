#pragma once

#include "mechnum/dual_solver.hpp"
#include "mechnum/valuation.hpp"

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace mechnum {

/// A user's reporting behavior in the distributed price loop. Every
/// strategy reports via a valuation with the same qualitative properties
/// as a truthful one, so it cannot be identified as untruthful.
struct Truthful {};
struct ScaledValuation {
    double alpha;  // reports alpha * v, alpha in (0,1)
};
struct MisreportedEps {
    double eps_reported;  // swaps the exponential shape parameter
};
using ReportingStrategy = std::variant<Truthful, ScaledValuation, MisreportedEps>;

/// The utility a strategy would have the user report. Truthful returns the
/// input unchanged; ScaledValuation wraps the valuation; MisreportedEps
/// replaces the exponential parameter (invalid for other families).
ComposedUtility reported_utility(const ComposedUtility& true_u, const ReportingStrategy& s);

/// Outcome of one unilateral deviation, with the deviator's payoff always
/// evaluated under its true valuation.
struct DeviationOutcome {
    double x_under = 0.0;        // allocation to the deviator
    double lambda_under = 0.0;   // resulting price
    double u_true = 0.0;         // v_true(x_under) - lambda_under * x_under
    double u_reported = 0.0;     // same payoff under the reported valuation
    bool converged = false;

    double x_baseline = 0.0;     // all-truthful allocation to the same user
    double lambda_baseline = 0.0;
    double u_baseline = 0.0;
    bool baseline_converged = false;
};

/// Runs the price loop with user `deviator` reporting via `s` and everyone
/// else truthful, next to the all-truthful baseline.
DeviationOutcome deviate_one(std::span<const ComposedUtility> users, std::size_t deviator,
                             const ReportingStrategy& s, double budget, double x_max,
                             const SolverConfig& cfg);

enum class SweepFamily { scaled_alpha, misreported_eps };

struct SweepPoint {
    double param = 0.0;
    DeviationOutcome outcome;
};

struct SweepResult {
    std::vector<SweepPoint> points;
    std::size_t best_index = 0;          // argmax of true utility over the grid
    DeviationOutcome baseline;           // all-truthful reference
};

/// Evaluates deviate_one on every grid value of the chosen strategy family
/// and returns the utility/allocation curves plus the best deviation. The
/// baseline is solved once and shared across grid points.
SweepResult best_misreport_sweep(std::span<const ComposedUtility> users, std::size_t deviator,
                                 std::span<const double> grid, SweepFamily family,
                                 double budget, double x_max, const SolverConfig& cfg);

/// Uniform open-interval grid: n points strictly inside (lo, hi).
std::vector<double> open_grid(double lo, double hi, int n);

/// Curve dump with columns (strategy_param, utility_raw, utility_norm,
/// allocation_raw, allocation_norm, lambda, converged).
void write_sweep_csv(const SweepResult& sweep, const std::string& path,
                     const std::string& config_stamp);

} // namespace mechnum
