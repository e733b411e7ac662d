#pragma once

#include "mechnum/valuation.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mechnum {

/// Physical constants of a single-microcell underlay-D2D setup plus the
/// knobs of link generation. Defaults follow a 500 m urban microcell with
/// 15 kHz resource blocks and close-in NLOS street-canyon propagation.
struct ScenarioConfig {
    double cell_radius_m = 500.0;
    double d2d_dist_min_m = 5.0;
    double d2d_dist_max_m = 25.0;
    double noise_psd_dbm_hz = -174.0;
    double noise_figure_db = 6.0;
    double rb_bandwidth_hz = 15000.0;
    double p_max_w = 0.1;    // per-link transmit cap (100 mW)
    double p_cell_w = 0.5;   // cellular transmit power (27 dBm)
    double total_power_w = 0.5;  // aggregate D2D cap per RB (P^max)
    double carrier_ghz = 2.0;
    double pathloss_exponent = 3.19;  // close-in model, UMi street canyon NLOS
    double interf_over_noise_db_min = 5.0;
    double interf_over_noise_db_max = 20.0;
    double eps_min = 0.1;
    double eps_max = 0.3;
    double circuit_power_w = 0.01;
    int n_links = 8;
    int n_energy_efficiency = 0;  // first links use the EE objective
    std::uint64_t seed = 1;

    void validate() const;
};

enum class LinkObjective { rate, energy_efficiency };

/// One generated D2D link: geometry, channel, interference, and the
/// link's private valuation parameter.
struct LinkDraw {
    double distance_m = 0.0;
    double fading_power = 0.0;   // |h|^2, unit-mean exponential
    double gain = 0.0;           // end-to-end channel power gain
    double p_interf_w = 0.0;     // aggregate interference at the receiver
    LinkObjective objective = LinkObjective::rate;
    double eps = 0.0;            // valuation shape parameter
};

struct Scenario {
    ScenarioConfig config;
    std::vector<LinkDraw> links;
};

/// Thermal noise power over one RB in watts:
/// 10^((psd_dbm + noise_figure + 10*log10(bandwidth) - 30)/10).
double noise_floor_w(const ScenarioConfig& cfg);
double noise_floor_dbm(const ScenarioConfig& cfg);

/// Close-in path loss in dB at distance d >= 1 m:
/// 32.4 + 20*log10(f_GHz) + 10*n*log10(d).
double pathloss_db(const ScenarioConfig& cfg, double distance_m);

struct PowerGain {
    double power_w;
    double gain;
};

/// Aggregate interference power: the sum of p*g over same/neighbor-cell
/// D2D interferers and same/neighbor-cell cellular transmitters.
double compute_interference_w(std::span<const PowerGain> d2d_terms,
                              std::span<const PowerGain> cellular_terms);

/// Draws a scenario deterministically from cfg.seed: uniform D2D
/// distances, Rayleigh fading powers, aggregate interference in the
/// configured dB band above the noise floor, and per-link eps.
Scenario sample_scenario(const ScenarioConfig& cfg);

/// Objective function realized by a link draw (rate or energy efficiency,
/// both against noise + interference).
ObjectiveFn link_objective_fn(const ScenarioConfig& cfg, const LinkDraw& link);

/// Exponential valuation composed with the link's objective, capped at the
/// per-link power limit.
ComposedUtility link_utility(const ScenarioConfig& cfg, const LinkDraw& link);

std::vector<ComposedUtility> scenario_utilities(const Scenario& s);

/// One row per link: distance, gain, interference, objective kind, eps.
void write_scenario_csv(const Scenario& s, const std::string& path,
                        const std::string& config_stamp);

} // namespace mechnum
