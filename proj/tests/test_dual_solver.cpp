#include "mechnum/dual_solver.hpp"

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

TEST_CASE("best response closed forms") {
    CHECK(best_response(exp_user(1.0, 10.0), 1.0, 10.0) == doctest::Approx(0.0));
    CHECK(best_response(exp_user(0.2, 100.0), 0.05, 100.0) ==
          doctest::Approx(6.931471805599453).epsilon(1e-12));  // 5*ln(4)
    CHECK(best_response(exp_user(1.0, 3.0), std::exp(-5.0), 3.0) == doctest::Approx(3.0));
    // Price above the marginal value at zero buys nothing.
    CHECK(best_response(exp_user(0.3, 5.0), 0.31, 5.0) == 0.0);
    CHECK_THROWS_AS(best_response(exp_user(1.0, 1.0), -0.1, 1.0), std::domain_error);
}

TEST_CASE("best response satisfies the first-order condition off the closed form") {
    const ComposedUtility u(ValuationFn::exponential(0.8), ObjectiveFn::rate(5.0, 1.0), 4.0);
    for (double lambda : {0.01, 0.05, 0.2, 0.5}) {
        const double x = best_response(u, lambda, 4.0);
        if (x > 1e-9 && x < 4.0 - 1e-9)
            CHECK(std::abs(u.deriv(x) - lambda) <= 1e-7);
        else if (x <= 1e-9)
            CHECK(u.deriv(0.0) <= lambda + 1e-9);
        else
            CHECK(u.deriv(4.0) >= lambda - 1e-9);
    }
}

TEST_CASE("price update is a projected subgradient step") {
    DualState s;
    s.lambda = 0.1;
    const std::vector<double> balanced{1.0, 1.0};
    CHECK(dual_iterate(s, balanced, 2.0, 0.01).lambda == doctest::Approx(0.1));

    const std::vector<double> under{0.0, 0.0};
    const DualState projected = dual_iterate(s, under, 20.0, 0.01);
    CHECK(projected.lambda == 0.0);
    CHECK(projected.iter == 1);

    const std::vector<double> over{3.0, 3.0};
    CHECK(dual_iterate(s, over, 2.0, 0.01).lambda > 0.1);
}

TEST_CASE("symmetric two-user instance splits the budget and prices at the margin") {
    const std::vector<ComposedUtility> users{exp_user(1.0, 5.0), exp_user(1.0, 5.0)};
    SolverConfig cfg;
    Allocation alloc = solve(users, 2.0, 5.0, cfg);
    REQUIRE(alloc.converged);
    CHECK(alloc.x[0] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(alloc.x[1] == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(alloc.lambda_star == doctest::Approx(0.36787944117144233).epsilon(1e-4));
    CHECK(kkt_residual(alloc, users, 2.0, 5.0) <= 1e-4);
}

TEST_CASE("oversupply drives the price to zero and users to their caps") {
    const std::vector<ComposedUtility> users{exp_user(0.5, 0.3), exp_user(0.4, 0.3)};
    SolverConfig cfg;
    Allocation alloc = solve(users, 2.0, 0.3, cfg);
    REQUIRE(alloc.converged);
    CHECK(alloc.lambda_star == 0.0);
    CHECK(alloc.x[0] == doctest::Approx(0.3));
    CHECK(alloc.x[1] == doctest::Approx(0.3));
    CHECK(kkt_residual(alloc, users, 2.0, 0.3) <= 1e-7);
}

TEST_CASE("solve is deterministic") {
    Rng rng(11);
    IdentityInstance inst = sample_identity_instance(rng, 4, true);
    SolverConfig cfg;
    Allocation a = solve(inst.users, inst.budget, inst.x_max, cfg);
    Allocation b = solve(inst.users, inst.budget, inst.x_max, cfg);
    CHECK(a.lambda_star == b.lambda_star);
    CHECK(a.iters_used == b.iters_used);
    for (std::size_t i = 0; i < a.x.size(); ++i) CHECK(a.x[i] == b.x[i]);
}

TEST_CASE("grid search brackets the single-user optimum") {
    const std::vector<ComposedUtility> users{exp_user(0.3, 2.0)};
    Allocation grid = brute_force_social_opt(users, 2.0, 2.0, 201);
    // Nondecreasing valuation: the whole budget is optimal.
    CHECK(grid.x[0] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("grid search respects symmetry") {
    const std::vector<ComposedUtility> users{exp_user(1.0, 2.0), exp_user(1.0, 2.0)};
    Allocation grid = brute_force_social_opt(users, 2.0, 2.0, 101);
    CHECK(std::abs(grid.x[0] - grid.x[1]) <= 2.0 / 100.0 + 1e-12);
}

TEST_CASE("grid search rejects unsupported scale") {
    std::vector<ComposedUtility> users;
    for (int i = 0; i < 6; ++i) users.push_back(exp_user(0.2, 1.0));
    CHECK_THROWS_AS(brute_force_social_opt(users, 3.0, 1.0, 11), std::invalid_argument);
}

TEST_CASE("solver and grid oracle agree on random instances") {
    Rng rng(2024);
    SolverConfig cfg;
    for (int k = 0; k < 10; ++k) {
        const int n = 1 + static_cast<int>(rng.index(4));
        IdentityInstance inst = sample_identity_instance(rng, n, false);
        Allocation alloc = solve(inst.users, inst.budget, inst.x_max, cfg);
        REQUIRE(alloc.converged);
        Allocation grid = brute_force_social_opt(inst.users, inst.budget, inst.x_max, 161);
        const double v_solve = sum_valuation(inst.users, alloc.x);
        const double v_grid = sum_valuation(inst.users, grid.x);
        CHECK(std::abs(v_solve - v_grid) <= 1e-3 * v_grid);
        CHECK(kkt_residual(alloc, inst.users, inst.budget, inst.x_max) <= 1e-4);
    }
}

TEST_CASE("kkt residual flags perturbed allocations") {
    const std::vector<ComposedUtility> users{exp_user(1.0, 5.0), exp_user(1.0, 5.0)};
    Allocation exact;
    exact.x = {1.0, 1.0};
    exact.lambda_star = std::exp(-1.0);
    exact.converged = true;
    CHECK(kkt_residual(exact, users, 2.0, 5.0) <= 1e-6);

    Allocation shifted = exact;
    shifted.x[0] += 0.1;
    CHECK(kkt_residual(shifted, users, 2.0, 5.0) > kkt_residual(exact, users, 2.0, 5.0));
}

TEST_CASE("raising a user's eagerness never lowers the clearing price") {
    // Tested in the competition regime where the bumped parameter stays
    // below e*lambda, which keeps that user's demand curve rising.
    Rng rng(314);
    SolverConfig cfg;
    int tested = 0;
    for (int k = 0; k < 60 && tested < 25; ++k) {
        const int n = 2 + static_cast<int>(rng.index(3));
        Allocation base;
        auto inst = sample_audited_instance(rng, n, cfg, &base);
        if (!inst) continue;
        const std::size_t bump = rng.index(inst->users.size());
        double scale = 0.0, eps = 0.0;
        inst->users[bump].valuation().exponential_core(&scale, &eps);
        const double eps_new = eps * 1.1;
        if (eps_new >= std::exp(1.0) * base.lambda_star) continue;

        std::vector<ComposedUtility> bumped(inst->users);
        bumped[bump] = bumped[bump].with_valuation(ValuationFn::exponential(eps_new));
        Allocation after = solve(bumped, inst->budget, inst->x_max, cfg);
        REQUIRE(after.converged);
        CHECK(after.lambda_star >= base.lambda_star - 1e-9);
        ++tested;
    }
    CHECK(tested >= 15);
}
