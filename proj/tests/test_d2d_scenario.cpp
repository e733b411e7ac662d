#include "mechnum/d2d_scenario.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace mechnum;

TEST_CASE("noise floor matches the link-budget arithmetic") {
    ScenarioConfig cfg;
    CHECK(noise_floor_dbm(cfg) == doctest::Approx(-126.23908740944319).epsilon(1e-12));
    CHECK(noise_floor_w(cfg) == doctest::Approx(2.377339788691667e-16).epsilon(1e-12));

    ScenarioConfig psd_only = cfg;
    psd_only.noise_figure_db = 0.0;
    psd_only.rb_bandwidth_hz = 1.0;
    CHECK(noise_floor_dbm(psd_only) == doctest::Approx(-174.0));

    ScenarioConfig doubled = cfg;
    doubled.rb_bandwidth_hz *= 2.0;
    CHECK(noise_floor_dbm(doubled) - noise_floor_dbm(cfg) ==
          doctest::Approx(10.0 * std::log10(2.0)).epsilon(1e-12));
}

TEST_CASE("close-in path loss") {
    ScenarioConfig cfg;
    cfg.carrier_ghz = 1.0;
    cfg.pathloss_exponent = 2.0;
    CHECK(pathloss_db(cfg, 1.0) == doctest::Approx(32.4));

    cfg.carrier_ghz = 2.0;
    cfg.pathloss_exponent = 3.19;
    CHECK(pathloss_db(cfg, 10.0) == doctest::Approx(70.32059991327962).epsilon(1e-12));

    // A decade of distance costs exactly 10*n dB.
    CHECK(pathloss_db(cfg, 150.0) - pathloss_db(cfg, 15.0) ==
          doctest::Approx(10.0 * 3.19).epsilon(1e-12));

    CHECK_THROWS_AS(pathloss_db(cfg, 0.5), std::domain_error);
}

TEST_CASE("interference aggregation is the plain sum of power*gain") {
    CHECK(compute_interference_w({}, {}) == 0.0);

    const std::vector<PowerGain> one{{0.1, 1e-8}};
    CHECK(compute_interference_w(one, {}) == doctest::Approx(1e-9).epsilon(1e-12));

    const std::vector<PowerGain> d2d{{0.1, 1e-8}, {0.05, 2e-8}};
    const std::vector<PowerGain> cell{{0.5, 3e-9}, {0.5, 5e-10}};
    const double total = compute_interference_w(d2d, cell);
    CHECK(total == doctest::Approx(1e-9 + 1e-9 + 1.5e-9 + 2.5e-10).epsilon(1e-12));
    // Order stays irrelevant.
    const std::vector<PowerGain> d2d_swapped{{0.05, 2e-8}, {0.1, 1e-8}};
    CHECK(compute_interference_w(d2d_swapped, cell) == doctest::Approx(total).epsilon(1e-15));

    const std::vector<PowerGain> bad{{-0.1, 1.0}};
    CHECK_THROWS_AS(compute_interference_w(bad, {}), std::domain_error);
}

TEST_CASE("scenario sampling is deterministic and within the configured bands") {
    ScenarioConfig cfg;
    cfg.n_links = 16;
    cfg.n_energy_efficiency = 4;
    cfg.seed = 99;

    const Scenario a = sample_scenario(cfg);
    const Scenario b = sample_scenario(cfg);
    REQUIRE(a.links.size() == 16);
    for (std::size_t i = 0; i < a.links.size(); ++i) {
        CHECK(a.links[i].distance_m == b.links[i].distance_m);
        CHECK(a.links[i].gain == b.links[i].gain);
        CHECK(a.links[i].p_interf_w == b.links[i].p_interf_w);
        CHECK(a.links[i].eps == b.links[i].eps);
    }

    const double p_noise = noise_floor_w(cfg);
    for (const auto& link : a.links) {
        CHECK(link.distance_m >= cfg.d2d_dist_min_m);
        CHECK(link.distance_m <= cfg.d2d_dist_max_m);
        CHECK(link.gain > 0.0);
        CHECK(link.p_interf_w >= p_noise * std::pow(10.0, 0.5));
        CHECK(link.p_interf_w <= p_noise * std::pow(10.0, 2.0));
        CHECK(link.eps >= cfg.eps_min);
        CHECK(link.eps <= cfg.eps_max);
    }
    for (int i = 0; i < 16; ++i)
        CHECK((a.links[i].objective == LinkObjective::energy_efficiency) == (i < 4));
}

TEST_CASE("fading powers have unit mean") {
    ScenarioConfig cfg;
    cfg.n_links = 100000;
    cfg.seed = 7;
    const Scenario s = sample_scenario(cfg);
    double mean = 0.0;
    for (const auto& link : s.links) mean += link.fading_power;
    mean /= static_cast<double>(s.links.size());
    CHECK(mean >= 0.99);
    CHECK(mean <= 1.01);
}

TEST_CASE("drawn links produce valid objectives") {
    ScenarioConfig cfg;
    cfg.n_links = 6;
    cfg.n_energy_efficiency = 3;
    cfg.seed = 3;
    const Scenario s = sample_scenario(cfg);
    for (const auto& link : s.links) {
        const ObjectiveFn f = link_objective_fn(cfg, link);
        if (link.objective == LinkObjective::rate) {
            // Strictly increasing on a sample of points.
            double prev = f.value(0.0);
            for (int k = 1; k <= 50; ++k) {
                const double cur = f.value(cfg.p_max_w * k / 50.0);
                CHECK(cur > prev);
                prev = cur;
            }
        } else {
            const ComposedUtility u = link_utility(cfg, link);
            CHECK(u.domain_hi() <= cfg.p_max_w);
            CHECK(u.domain_hi() > 0.0);
        }
    }
}
