#include "mechnum/strategies.hpp"

#include "mechnum/experiments.hpp"
#include "mechnum/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace mechnum;

namespace {

ComposedUtility exp_user(double eps, double x_max) {
    return ComposedUtility(ValuationFn::exponential(eps), ObjectiveFn::identity(), x_max);
}

} // namespace

TEST_CASE("reported utility per strategy") {
    const ComposedUtility truth = exp_user(0.3, 5.0);

    const ComposedUtility same = reported_utility(truth, Truthful{});
    for (double x : {0.0, 0.5, 2.0, 4.9})
        CHECK(same.value(x) == doctest::Approx(truth.value(x)).epsilon(1e-15));

    const ComposedUtility half = reported_utility(exp_user(1.0, 5.0), ScaledValuation{0.5});
    CHECK(half.value(std::log(2.0)) == doctest::Approx(0.25).epsilon(1e-12));

    const ComposedUtility swapped =
        reported_utility(exp_user(0.3, 5.0), MisreportedEps{0.1});
    double scale = 0.0, eps = 0.0;
    REQUIRE(swapped.valuation().exponential_core(&scale, &eps));
    CHECK(eps == doctest::Approx(0.1));
    CHECK(scale == doctest::Approx(1.0));

    // Reported valuations keep the family's qualitative properties.
    const ComposedUtility wrapped = reported_utility(truth, ScaledValuation{0.7});
    CHECK(wrapped.valuation().value(0.0) == 0.0);
    CHECK(wrapped.valuation().strictly_concave());

    CHECK_THROWS_AS(reported_utility(truth, ScaledValuation{1.0}), std::invalid_argument);
    const ComposedUtility affine_user(ValuationFn::affine(1.0), ObjectiveFn::identity(), 5.0);
    CHECK_THROWS_AS(reported_utility(affine_user, MisreportedEps{0.2}),
                    std::invalid_argument);
}

TEST_CASE("truthful deviation reproduces the baseline") {
    const std::vector<ComposedUtility> users{exp_user(0.25, 4.0), exp_user(0.2, 4.0),
                                             exp_user(0.3, 4.0)};
    SolverConfig cfg;
    DeviationOutcome out = deviate_one(users, 1, Truthful{}, 4.0, 4.0, cfg);
    CHECK(out.x_under == doctest::Approx(out.x_baseline).epsilon(1e-9));
    CHECK(out.lambda_under == doctest::Approx(out.lambda_baseline).epsilon(1e-9));
    CHECK(out.u_true == doctest::Approx(out.u_baseline).epsilon(1e-9));
}

TEST_CASE("scaled reports depress the price when the deviator matters") {
    Rng rng(61);
    SolverConfig cfg;
    int tested = 0;
    for (int k = 0; k < 40 && tested < 12; ++k) {
        Allocation base;
        auto inst = sample_audited_instance(rng, 3, cfg, &base);
        if (!inst) continue;
        for (double alpha : {0.3, 0.5, 0.7, 0.9}) {
            DeviationOutcome dev =
                deviate_one(inst->users, 0, ScaledValuation{alpha}, inst->budget,
                            inst->x_max, cfg);
            REQUIRE(dev.converged);
            CHECK(dev.lambda_under < dev.lambda_baseline);
        }
        ++tested;
    }
    CHECK(tested >= 8);
}

TEST_CASE("oversupplied instances make every deviation weakly losing") {
    // Caps slack the budget: price is zero, nothing to gain by shading.
    const std::vector<ComposedUtility> users{exp_user(0.5, 0.4), exp_user(0.6, 0.4)};
    SolverConfig cfg;
    for (double alpha : {0.3, 0.6, 0.9}) {
        DeviationOutcome dev = deviate_one(users, 0, ScaledValuation{alpha}, 2.0, 0.4, cfg);
        CHECK(dev.u_true <= dev.u_baseline + 1e-9);
    }
    for (double eps_reported : {0.2, 0.4, 0.8}) {
        DeviationOutcome dev =
            deviate_one(users, 0, MisreportedEps{eps_reported}, 2.0, 0.4, cfg);
        CHECK(dev.u_true <= dev.u_baseline + 1e-9);
    }
}

TEST_CASE("sweep over a singleton truthful grid returns the baseline as best") {
    const std::vector<ComposedUtility> users{exp_user(0.25, 4.0), exp_user(0.2, 4.0)};
    SolverConfig cfg;
    const std::vector<double> grid{0.25};  // the true parameter itself
    SweepResult sweep =
        best_misreport_sweep(users, 0, grid, SweepFamily::misreported_eps, 4.0, 4.0, cfg);
    CHECK(sweep.best_index == 0);
    CHECK(sweep.points[0].outcome.u_true ==
          doctest::Approx(sweep.baseline.u_true).epsilon(1e-6));
}

TEST_CASE("alpha sweep finds profitable demand reduction on tight instances") {
    Rng rng(88);
    SolverConfig cfg;
    const std::vector<double> grid = open_grid(0.0, 1.0, 99);
    int tested = 0;
    for (int k = 0; k < 30 && tested < 6; ++k) {
        Allocation base;
        auto inst = sample_audited_instance(rng, 4, cfg, &base);
        if (!inst) continue;
        ++tested;
        for (std::size_t i = 0; i < inst->users.size(); ++i) {
            SweepResult sweep = best_misreport_sweep(inst->users, i, grid,
                                                     SweepFamily::scaled_alpha, inst->budget,
                                                     inst->x_max, cfg);
            const SweepPoint& best = sweep.points[sweep.best_index];
            CHECK(best.outcome.u_true > sweep.baseline.u_true + 1e-6);
            // Profitable points take less of the resource at a lower price.
            for (const auto& pt : sweep.points) {
                if (pt.outcome.u_true > sweep.baseline.u_true + 1e-9) {
                    CHECK(pt.outcome.x_under < sweep.baseline.x_under - 1e-9);
                    CHECK(pt.outcome.lambda_under < sweep.baseline.lambda_under);
                }
            }
        }
    }
    CHECK(tested >= 4);
}

TEST_CASE("price-raising misreports never pay") {
    Rng rng(17);
    SolverConfig cfg;
    int applicable = 0;
    for (int k = 0; k < 20 && applicable < 30; ++k) {
        Allocation base;
        auto inst = sample_audited_instance(rng, 3, cfg, &base);
        if (!inst) continue;
        for (std::size_t i = 0; i < inst->users.size(); ++i) {
            double scale = 0.0, eps = 0.0;
            inst->users[i].valuation().exponential_core(&scale, &eps);
            for (double factor : {1.2, 1.6, 2.5}) {
                DeviationOutcome dev =
                    deviate_one(inst->users, i, MisreportedEps{eps * factor}, inst->budget,
                                inst->x_max, cfg);
                if (dev.lambda_under > dev.lambda_baseline + 1e-6) {
                    ++applicable;
                    CHECK(dev.u_true <= dev.u_baseline + 1e-9);
                }
            }
        }
    }
    CHECK(applicable >= 10);
}

TEST_CASE("open grid excludes its endpoints") {
    const std::vector<double> g = open_grid(0.0, 1.0, 99);
    REQUIRE(g.size() == 99);
    CHECK(g.front() == doctest::Approx(0.01));
    CHECK(g.back() == doctest::Approx(0.99));
    CHECK(g.front() > 0.0);
    CHECK(g.back() < 1.0);
}
