#include "mechnum/d2d_scenario.hpp"

#include "mechnum/csv.hpp"
#include "mechnum/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace mechnum {

void ScenarioConfig::validate() const {
    if (p_max_w <= 0.0 || p_cell_w <= 0.0 || total_power_w <= 0.0)
        throw std::invalid_argument("scenario powers must be positive");
    if (total_power_w < p_max_w)
        throw std::invalid_argument("total_power_w must be at least p_max_w");
    if (!(d2d_dist_min_m > 0.0 && d2d_dist_max_m > d2d_dist_min_m &&
          d2d_dist_max_m < cell_radius_m))
        throw std::invalid_argument("d2d distance range must lie inside (0, cell_radius)");
    if (rb_bandwidth_hz <= 0.0 || carrier_ghz <= 0.0 || pathloss_exponent <= 0.0)
        throw std::invalid_argument("bandwidth, carrier, and pathloss exponent must be positive");
    if (n_links < 1) throw std::invalid_argument("need at least one link");
    if (n_energy_efficiency < 0 || n_energy_efficiency > n_links)
        throw std::invalid_argument("n_energy_efficiency out of range");
    if (!(eps_min > 0.0 && eps_max >= eps_min))
        throw std::invalid_argument("eps range must be positive and ordered");
    if (circuit_power_w <= 0.0)
        throw std::invalid_argument("circuit power must be positive");
}

double noise_floor_dbm(const ScenarioConfig& cfg) {
    return cfg.noise_psd_dbm_hz + cfg.noise_figure_db + 10.0 * std::log10(cfg.rb_bandwidth_hz);
}

double noise_floor_w(const ScenarioConfig& cfg) {
    return std::pow(10.0, (noise_floor_dbm(cfg) - 30.0) / 10.0);
}

double pathloss_db(const ScenarioConfig& cfg, double distance_m) {
    if (distance_m < 1.0)
        throw std::domain_error("close-in path loss needs distance >= 1 m");
    return 32.4 + 20.0 * std::log10(cfg.carrier_ghz) +
           10.0 * cfg.pathloss_exponent * std::log10(distance_m);
}

double compute_interference_w(std::span<const PowerGain> d2d_terms,
                              std::span<const PowerGain> cellular_terms) {
    double total = 0.0;
    for (const auto& t : d2d_terms) {
        if (t.power_w < 0.0 || t.gain < 0.0)
            throw std::domain_error("interference terms need nonnegative power and gain");
        total += t.power_w * t.gain;
    }
    for (const auto& t : cellular_terms) {
        if (t.power_w < 0.0 || t.gain < 0.0)
            throw std::domain_error("interference terms need nonnegative power and gain");
        total += t.power_w * t.gain;
    }
    return total;
}

Scenario sample_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const double p_noise = noise_floor_w(cfg);

    Scenario s;
    s.config = cfg;
    s.links.reserve(static_cast<std::size_t>(cfg.n_links));
    for (int i = 0; i < cfg.n_links; ++i) {
        LinkDraw link;
        link.distance_m = rng.uniform(cfg.d2d_dist_min_m, cfg.d2d_dist_max_m);
        link.fading_power = rng.exponential(1.0);  // |CN(0,1)|^2
        link.gain = std::pow(10.0, -pathloss_db(cfg, link.distance_m) / 10.0) * link.fading_power;
        const double ion_db =
            rng.uniform(cfg.interf_over_noise_db_min, cfg.interf_over_noise_db_max);
        link.p_interf_w = p_noise * std::pow(10.0, ion_db / 10.0);
        link.objective = i < cfg.n_energy_efficiency ? LinkObjective::energy_efficiency
                                                     : LinkObjective::rate;
        link.eps = rng.uniform(cfg.eps_min, cfg.eps_max);
        s.links.push_back(link);
    }
    return s;
}

ObjectiveFn link_objective_fn(const ScenarioConfig& cfg, const LinkDraw& link) {
    const double npi = noise_floor_w(cfg) + link.p_interf_w;
    if (link.objective == LinkObjective::energy_efficiency)
        return ObjectiveFn::energy_efficiency(link.gain, npi, cfg.circuit_power_w);
    return ObjectiveFn::rate(link.gain, npi);
}

ComposedUtility link_utility(const ScenarioConfig& cfg, const LinkDraw& link) {
    return ComposedUtility(ValuationFn::exponential(link.eps), link_objective_fn(cfg, link),
                           cfg.p_max_w);
}

std::vector<ComposedUtility> scenario_utilities(const Scenario& s) {
    std::vector<ComposedUtility> users;
    users.reserve(s.links.size());
    for (const auto& link : s.links) users.push_back(link_utility(s.config, link));
    return users;
}

void write_scenario_csv(const Scenario& s, const std::string& path,
                        const std::string& config_stamp) {
    CsvWriter csv(path);
    csv.comment(config_stamp);
    csv.header({"link", "distance_m", "gain", "p_interf_w", "objective", "eps"});
    for (std::size_t i = 0; i < s.links.size(); ++i) {
        const auto& l = s.links[i];
        csv.row(std::vector<std::string>{
            std::to_string(i), format_double(l.distance_m), format_double(l.gain),
            format_double(l.p_interf_w),
            l.objective == LinkObjective::energy_efficiency ? "energy_efficiency" : "rate",
            format_double(l.eps)});
    }
}

} // namespace mechnum
