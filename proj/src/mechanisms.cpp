#include "mechnum/mechanisms.hpp"

#include "mechnum/csv.hpp"
#include "mechnum/numeric.hpp"
#include "mechnum/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace mechnum {

CenterValuation::CenterValuation(double amplitude, double width, std::vector<double> target,
                                 int norm_power)
    : amplitude_(amplitude), width_(width), norm_power_(norm_power),
      target_(std::move(target)) {
    if (amplitude_ <= 0.0 || width_ <= 0.0)
        throw std::invalid_argument("center valuation needs amplitude > 0 and width > 0");
    if (norm_power_ != 1 && norm_power_ != 2)
        throw std::invalid_argument("center valuation norm power must be 1 or 2");
    if (target_.empty())
        throw std::invalid_argument("center valuation needs a nonempty target");
}

double CenterValuation::distance(std::span<const double> x) const {
    if (x.size() != target_.size())
        throw std::invalid_argument("allocation and target dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - target_[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double CenterValuation::value(std::span<const double> x) const {
    const double d = distance(x);
    const double arg = norm_power_ == 2 ? d * d : d;
    return amplitude_ * std::exp(-arg / width_);
}

std::vector<double> preferred_allocation(const CenterValuation& nu, double budget,
                                         double x_max) {
    if (budget <= 0.0 || x_max <= 0.0)
        throw std::invalid_argument("preferred_allocation needs positive bounds");
    std::vector<double> x(nu.target());
    for (double& v : x) v = std::clamp(v, 0.0, x_max);
    double total = std::accumulate(x.begin(), x.end(), 0.0);
    if (total <= budget) return x;

    // Active budget: x_i = clamp(t_i - tau, 0, x_max) with tau chosen so the
    // box-clamped shift lands exactly on the budget face.
    const double tau_hi = *std::max_element(nu.target().begin(), nu.target().end());
    double lo = 0.0, hi = tau_hi;
    for (int it = 0; it < 200; ++it) {
        const double tau = 0.5 * (lo + hi);
        double s = 0.0;
        for (double t : nu.target()) s += std::clamp(t - tau, 0.0, x_max);
        if (s > budget)
            lo = tau;
        else
            hi = tau;
    }
    const double tau = 0.5 * (lo + hi);
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = std::clamp(nu.target()[i] - tau, 0.0, x_max);
    return x;
}

std::vector<double> dual_price_transfer(std::span<const double> x, double lambda) {
    if (lambda < 0.0) throw std::domain_error("dual price transfer needs lambda >= 0");
    std::vector<double> t(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) t[i] = -lambda * x[i];
    return t;
}

SemQuotes sem_truthful_quotes(const ComposedUtility& u1, const ComposedUtility& u2,
                              std::span<const double> x_accepted,
                              std::span<const double> x_target) {
    if (x_accepted.size() != 2 || x_target.size() != 2)
        throw std::invalid_argument("sem quotes are defined for exactly two users");
    const double v1_acc = u1.value(x_accepted[0]);
    const double v1_tgt = u1.value(x_target[0]);
    const double v2_acc = u2.value(x_accepted[1]);
    const double v2_tgt = u2.value(x_target[1]);
    if (v1_acc < v1_tgt)
        throw std::invalid_argument(
            "sem assumption violated: v1(x1_accepted) >= v1(x1_target) does not hold");
    if (v2_acc > v2_tgt)
        throw std::invalid_argument(
            "sem assumption violated: v2(x2_accepted) <= v2(x2_target) does not hold");
    return {v1_acc - v1_tgt, v2_tgt - v2_acc};
}

SemOutcome sem_run(double ask, double bid, double center_stake, double alpha,
                   std::span<const double> x_accepted, std::span<const double> x_target,
                   double true_ask, double true_bid) {
    if (!(alpha > 0.0 && alpha <= 0.5))
        throw std::invalid_argument("sem subsidy fraction must lie in (0, 1/2]");
    if (center_stake < 0.0)
        throw std::domain_error("sem center stake must be nonnegative");
    if (std::isnan(true_ask)) true_ask = ask;
    if (std::isnan(true_bid)) true_bid = bid;

    SemOutcome out;
    if (bid + alpha * center_stake < ask) {
        out.success = false;
        out.x_final.assign(x_accepted.begin(), x_accepted.end());
        return out;
    }
    out.success = true;
    out.charge_buyer = ask - alpha * center_stake;
    out.pay_seller = bid + alpha * center_stake;
    out.seller_gain = out.pay_seller - true_ask;
    out.buyer_gain = true_bid - out.charge_buyer;
    out.center_gain = (1.0 - 2.0 * alpha) * center_stake + ask - bid;
    out.x_final.assign(x_target.begin(), x_target.end());
    return out;
}

double guarded_subsidy_fraction(double proposed, double theta_selected,
                                std::span<const double> executed_products) {
    if (theta_selected <= 0.0)
        throw std::invalid_argument(
            "nonpositive center gain for a selected pair signals inconsistent quotes");
    if (executed_products.empty()) return proposed;
    const double cap =
        *std::min_element(executed_products.begin(), executed_products.end());
    return std::min(proposed, cap / theta_selected);
}

namespace {

struct QuoteMemory {
    double x = 0.0;
    double quantum = -1.0;
    double value = 0.0;
    bool set = false;
};

double quote(const QuotePolicy& policy, std::span<const ComposedUtility> users,
             std::size_t user, int round, double x_current, double quantum, bool selling) {
    const auto& u = users[user];
    const double truthful = selling ? u.value(x_current) - u.value(x_current - quantum)
                                    : u.value(x_current + quantum) - u.value(x_current);
    if (!policy) return truthful;
    return policy(QuoteRequest{user, round, x_current, quantum, selling, truthful});
}

/// Moves `m` from seller to buyer, landing exactly on a target when the
/// amount closes the gap.
void apply_move(std::vector<double>& x, std::size_t seller, std::size_t buyer, double m,
                std::span<const double> target) {
    const double gap_s = x[seller] - target[seller];
    const double gap_b = target[buyer] - x[buyer];
    x[seller] = m >= gap_s ? target[seller] : x[seller] - m;
    x[buyer] = m >= gap_b ? target[buyer] : x[buyer] + m;
}

} // namespace

RoundMatrices esem_round_matrices(std::span<const double> x, const CenterValuation& nu,
                                  std::span<const double> asks, std::span<const double> bids,
                                  double alpha, double quantum) {
    if (quantum <= 0.0) throw std::invalid_argument("round matrices need a positive quantum");
    const std::span<const double> target(nu.target());
    if (x.size() != target.size())
        throw std::invalid_argument("allocation and target dimension mismatch");

    RoundMatrices m;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (target[i] < x[i]) m.sellers.push_back(i);
        else if (target[i] > x[i]) m.buyers.push_back(i);
    }
    if (asks.size() != m.sellers.size() || bids.size() != m.buyers.size())
        throw std::invalid_argument("round matrices need one quote per seller and buyer");
    if (m.sellers.empty() || m.buyers.empty())
        throw std::invalid_argument("round matrices need nonempty seller and buyer sets");

    const std::size_t ns = m.sellers.size(), nb = m.buyers.size();
    const double nu_now = nu.value(x);
    m.pair_quantum.assign(ns * nb, 0.0);
    m.theta.assign(ns * nb, 0.0);
    m.psi.assign(ns * nb, 0.0);
    m.viable.assign(ns * nb, 0);
    std::vector<double> x_bar(x.size());
    for (std::size_t a = 0; a < ns; ++a) {
        for (std::size_t b = 0; b < nb; ++b) {
            const std::size_t i = m.sellers[a], j = m.buyers[b];
            const std::size_t k = a * nb + b;
            const double gap_s = x[i] - target[i];
            const double gap_b = target[j] - x[j];
            const double amount = std::min({quantum, gap_s, gap_b});
            m.pair_quantum[k] = amount;
            x_bar.assign(x.begin(), x.end());
            apply_move(x_bar, i, j, amount, target);
            m.theta[k] = nu.value(x_bar) - nu_now;
            m.psi[k] = alpha * m.theta[k] + bids[b] - asks[a];
            m.viable[k] = m.psi[k] > 0.0 ? 1 : 0;
        }
    }
    for (std::size_t a = 0; a < ns; ++a) {
        bool any = false;
        for (std::size_t b = 0; b < nb; ++b) any = any || m.viable[a * nb + b];
        if (any) m.viable_sellers.push_back(m.sellers[a]);
    }
    return m;
}

EsemResult esem_run(std::span<const ComposedUtility> users, std::span<const double> x_accepted,
                    const CenterValuation& nu, const EsemConfig& cfg,
                    const QuotePolicy& policy) {
    if (cfg.quantum <= 0.0)
        throw std::invalid_argument("esem quantum must be positive");
    if (!(cfg.subsidy_fraction > 0.0 && cfg.subsidy_fraction <= 0.5))
        throw std::invalid_argument("esem subsidy fraction must lie in (0, 1/2]");
    if (cfg.max_rounds < 1)
        throw std::invalid_argument("esem needs at least one round");
    const std::size_t n = users.size();
    if (x_accepted.size() != n || nu.target().size() != n)
        throw std::invalid_argument("esem users, allocation, and target sizes must agree");

    const std::span<const double> target(nu.target());
    std::vector<double> x(x_accepted.begin(), x_accepted.end());

    EsemResult res;
    res.ledger.user_transfers.assign(n, 0.0);
    res.ledger.user_flagged.assign(n, 0);

    Rng rng(cfg.seed);
    double product_cap = std::numeric_limits<double>::infinity();
    bool cap_set = false;
    std::vector<QuoteMemory> sell_memory(n), buy_memory(n);

    res.exit = EsemExit::truncated;
    for (int round = 0; round < cfg.max_rounds; ++round) {
        std::vector<std::size_t> sellers, buyers;
        for (std::size_t i = 0; i < n; ++i) {
            if (target[i] < x[i]) sellers.push_back(i);
            else if (target[i] > x[i]) buyers.push_back(i);
        }
        if (sellers.empty()) {
            res.exit = EsemExit::target_reached;
            break;
        }
        if (buyers.empty()) {
            res.exit = EsemExit::no_viable_pairs;
            break;
        }

        ExchangeRound rec;
        rec.round = round;
        rec.x = x;
        rec.sellers = sellers;
        rec.buyers = buyers;

        const std::size_t ns = sellers.size(), nb = buyers.size();
        std::vector<double> sell_quantum(ns), buy_quantum(nb);
        rec.asks.resize(ns);
        rec.bids.resize(nb);
        for (std::size_t a = 0; a < ns; ++a) {
            const std::size_t i = sellers[a];
            sell_quantum[a] = std::min(cfg.quantum, x[i] - target[i]);
            rec.asks[a] = quote(policy, users, i, round, x[i], sell_quantum[a], true);
        }
        for (std::size_t b = 0; b < nb; ++b) {
            const std::size_t j = buyers[b];
            buy_quantum[b] = std::min(cfg.quantum, target[j] - x[j]);
            rec.bids[b] = quote(policy, users, j, round, x[j], buy_quantum[b], false);
        }

        // Quote-consistency policing: a seller's ask at an unchanged
        // quantum may not fall as its position shrinks; a buyer's bid may
        // not rise as its position grows. Violations are flagged only.
        for (std::size_t a = 0; a < ns; ++a) {
            const std::size_t i = sellers[a];
            auto& mem = sell_memory[i];
            if (mem.set && std::abs(mem.quantum - sell_quantum[a]) <= 1e-15 &&
                x[i] < mem.x && rec.asks[a] < mem.value - 1e-15)
                res.ledger.user_flagged[i] = 1;
            mem = {x[i], sell_quantum[a], rec.asks[a], true};
        }
        for (std::size_t b = 0; b < nb; ++b) {
            const std::size_t j = buyers[b];
            auto& mem = buy_memory[j];
            if (mem.set && std::abs(mem.quantum - buy_quantum[b]) <= 1e-15 &&
                x[j] > mem.x && rec.bids[b] > mem.value + 1e-15)
                res.ledger.user_flagged[j] = 1;
            mem = {x[j], buy_quantum[b], rec.bids[b], false};
        }

        // Pair-resolved matrices at the executable amount of each pair.
        const double nu_now = nu.value(x);
        rec.pair_quantum.assign(ns * nb, 0.0);
        rec.theta.assign(ns * nb, 0.0);
        rec.psi.assign(ns * nb, 0.0);
        rec.viable.assign(ns * nb, 0);
        std::vector<double> pair_ask(ns * nb), pair_bid(ns * nb), pair_alpha(ns * nb);
        std::vector<double> x_bar(n);
        for (std::size_t a = 0; a < ns; ++a) {
            for (std::size_t b = 0; b < nb; ++b) {
                const std::size_t i = sellers[a], j = buyers[b];
                const std::size_t k = a * nb + b;
                const double m = std::min(sell_quantum[a], buy_quantum[b]);
                rec.pair_quantum[k] = m;
                pair_ask[k] = m == sell_quantum[a]
                                  ? rec.asks[a]
                                  : quote(policy, users, i, round, x[i], m, true);
                pair_bid[k] = m == buy_quantum[b]
                                  ? rec.bids[b]
                                  : quote(policy, users, j, round, x[j], m, false);
                x_bar = x;
                apply_move(x_bar, i, j, m, target);
                rec.theta[k] = nu.value(x_bar) - nu_now;
                pair_alpha[k] = rec.theta[k] > 0.0 && cap_set
                                    ? std::min(cfg.subsidy_fraction,
                                               product_cap / rec.theta[k])
                                    : cfg.subsidy_fraction;
                rec.psi[k] = pair_alpha[k] * rec.theta[k] + pair_bid[k] - pair_ask[k];
                rec.viable[k] = rec.psi[k] > 0.0 ? 1 : 0;
            }
        }
        for (std::size_t a = 0; a < ns; ++a) {
            bool any = false;
            for (std::size_t b = 0; b < nb; ++b) any = any || rec.viable[a * nb + b];
            if (any) rec.viable_sellers.push_back(sellers[a]);
        }

        if (rec.viable_sellers.empty()) {
            res.rounds.push_back(std::move(rec));
            res.exit = EsemExit::no_viable_pairs;
            break;
        }

        // Uniform pair selection with elimination on non-viable picks: a
        // failed pick removes the seller from the candidate rows and the
        // buyer from the round's counting set.
        std::vector<std::size_t> cand_sellers = rec.viable_sellers;
        std::vector<std::size_t> cand_buyers = buyers;
        bool exchanged = false;
        while (!cand_sellers.empty() && !cand_buyers.empty()) {
            const std::size_t i = cand_sellers[rng.index(cand_sellers.size())];
            const std::size_t j = buyers[rng.index(buyers.size())];
            const std::size_t a =
                std::find(sellers.begin(), sellers.end(), i) - sellers.begin();
            const std::size_t b = std::find(buyers.begin(), buyers.end(), j) - buyers.begin();
            const std::size_t k = a * nb + b;

            bool executable = rec.viable[k] != 0;
            if (executable && rec.theta[k] <= 0.0) {
                // Surplus driven purely by a distorted quote against a
                // value-destroying move; skip and count it.
                res.masked_nonpositive_theta += 1;
                rec.viable[k] = 0;
                executable = false;
            }
            if (!executable) {
                std::erase(cand_sellers, i);
                std::erase(cand_buyers, j);
                continue;
            }

            const double alpha = pair_alpha[k];
            const double theta = rec.theta[k];
            const double m = rec.pair_quantum[k];
            rec.exchanged = true;
            rec.seller = i;
            rec.buyer = j;
            rec.quantum_executed = m;
            rec.alpha_used = alpha;
            rec.theta_executed = theta;
            rec.psi_executed = rec.psi[k];
            rec.ask_executed = pair_ask[k];
            rec.bid_executed = pair_bid[k];
            rec.charge = pair_ask[k] - alpha * theta;
            rec.payment = pair_bid[k] + alpha * theta;

            res.ledger.user_transfers[j] -= rec.charge;
            res.ledger.user_transfers[i] += rec.payment;
            res.ledger.center_subsidy += rec.payment - rec.charge;

            LedgerEntry entry;
            entry.round = round;
            entry.seller = i;
            entry.buyer = j;
            entry.quantum = m;
            entry.alpha = alpha;
            entry.theta = theta;
            entry.ask = pair_ask[k];
            entry.bid = pair_bid[k];
            entry.charge = rec.charge;
            entry.payment = rec.payment;
            entry.subsidy = rec.payment - rec.charge;
            entry.ask_inconsistent = res.ledger.user_flagged[i] != 0;
            entry.bid_inconsistent = res.ledger.user_flagged[j] != 0;
            res.ledger.entries.push_back(entry);

            apply_move(x, i, j, m, target);
            product_cap = alpha * theta;
            cap_set = true;
            exchanged = true;
            break;
        }

        res.rounds.push_back(std::move(rec));
        if (!exchanged) {
            res.exit = EsemExit::selection_exhausted;
            break;
        }
        bool any_seller = false;
        for (std::size_t i = 0; i < n; ++i) any_seller = any_seller || (target[i] < x[i]);
        if (!any_seller) {
            res.exit = EsemExit::target_reached;
            break;
        }
    }

    res.x_final = std::move(x);
    return res;
}

std::vector<std::vector<double>> cumulative_utilities(std::span<const ComposedUtility> users,
                                                      std::span<const double> x_accepted,
                                                      const EsemResult& result) {
    const std::size_t n = users.size();
    std::vector<double> base(n);
    for (std::size_t i = 0; i < n; ++i) base[i] = users[i].value(x_accepted[i]);

    std::vector<std::vector<double>> rows;
    rows.reserve(result.rounds.size() + 1);
    rows.emplace_back(n, 0.0);

    std::vector<double> transfers(n, 0.0);
    for (std::size_t r = 0; r < result.rounds.size(); ++r) {
        const auto& rec = result.rounds[r];
        if (rec.exchanged) {
            transfers[rec.buyer] -= rec.charge;
            transfers[rec.seller] += rec.payment;
        }
        const std::vector<double>& x_after =
            r + 1 < result.rounds.size() ? result.rounds[r + 1].x : result.x_final;
        std::vector<double> row(n);
        for (std::size_t i = 0; i < n; ++i)
            row[i] = users[i].value(x_after[i]) - base[i] + transfers[i];
        rows.push_back(std::move(row));
    }
    return rows;
}

ReplayReport replay_ledger(const EsemResult& result, std::span<const double> x_accepted,
                           const CenterValuation& nu, double tol) {
    ReplayReport rep;
    const std::size_t n = x_accepted.size();

    const double sum0 = std::accumulate(x_accepted.begin(), x_accepted.end(), 0.0);
    for (const auto& rec : result.rounds) {
        const double s = std::accumulate(rec.x.begin(), rec.x.end(), 0.0);
        rep.conservation_error = std::max(rep.conservation_error, std::abs(s - sum0));
    }
    const double sf = std::accumulate(result.x_final.begin(), result.x_final.end(), 0.0);
    rep.conservation_error = std::max(rep.conservation_error, std::abs(sf - sum0));

    std::vector<double> transfers(n, 0.0);
    double subsidy = 0.0, theta_sum = 0.0;
    std::size_t entry_idx = 0;
    for (std::size_t r = 0; r < result.rounds.size(); ++r) {
        const auto& rec = result.rounds[r];
        if (!rec.exchanged) continue;
        const auto& entry = result.ledger.entries[entry_idx++];
        const std::vector<double>& x_after =
            r + 1 < result.rounds.size() ? result.rounds[r + 1].x : result.x_final;
        const double theta_re = nu.value(x_after) - nu.value(rec.x);
        rep.max_theta_error = std::max(rep.max_theta_error, std::abs(theta_re - entry.theta));
        const double subsidy_re =
            2.0 * entry.alpha * entry.theta + entry.bid - entry.ask;
        rep.max_subsidy_error =
            std::max(rep.max_subsidy_error, std::abs(subsidy_re - entry.subsidy));
        transfers[entry.buyer] -= entry.charge;
        transfers[entry.seller] += entry.payment;
        subsidy += entry.subsidy;
        theta_sum += entry.theta;
    }
    for (std::size_t i = 0; i < n; ++i)
        rep.max_balance_error = std::max(
            rep.max_balance_error, std::abs(transfers[i] - result.ledger.user_transfers[i]));
    rep.max_balance_error =
        std::max(rep.max_balance_error, std::abs(subsidy - result.ledger.center_subsidy));
    rep.nu_identity_error =
        std::abs(theta_sum - (nu.value(result.x_final) - nu.value(x_accepted)));

    rep.ok = entry_idx == result.ledger.entries.size() && rep.max_theta_error <= tol &&
             rep.max_subsidy_error <= tol && rep.max_balance_error <= tol &&
             rep.nu_identity_error <= tol && rep.conservation_error <= tol;
    return rep;
}

void write_esem_rounds_csv(const EsemResult& result, std::span<const ComposedUtility> users,
                           std::span<const double> x_accepted, const CenterValuation& nu,
                           const std::string& path, const std::string& config_stamp) {
    const auto utilities = cumulative_utilities(users, x_accepted, result);
    CsvWriter csv(path);
    csv.comment(config_stamp);
    std::vector<std::string> cols{"round",   "seller", "buyer", "quantum", "theta",
                                  "psi",     "ask",    "bid",   "charge",  "payment",
                                  "nu"};
    for (std::size_t i = 1; i <= users.size(); ++i) cols.push_back("u_" + std::to_string(i));
    csv.header(cols);
    for (std::size_t r = 0; r < result.rounds.size(); ++r) {
        const auto& rec = result.rounds[r];
        const std::vector<double>& x_after =
            r + 1 < result.rounds.size() ? result.rounds[r + 1].x : result.x_final;
        std::vector<double> row{static_cast<double>(rec.round),
                                rec.exchanged ? static_cast<double>(rec.seller) : -1.0,
                                rec.exchanged ? static_cast<double>(rec.buyer) : -1.0,
                                rec.quantum_executed,
                                rec.theta_executed,
                                rec.psi_executed,
                                rec.ask_executed,
                                rec.bid_executed,
                                rec.charge,
                                rec.payment,
                                nu.value(x_after)};
        row.insert(row.end(), utilities[r + 1].begin(), utilities[r + 1].end());
        csv.row(row);
    }
}

void write_ledger_json(const EsemResult& result, std::span<const double> x_accepted,
                       const std::string& path) {
    nlohmann::json j;
    j["x_initial"] = std::vector<double>(x_accepted.begin(), x_accepted.end());
    j["x_final"] = result.x_final;
    j["center_subsidy"] = result.ledger.center_subsidy;
    j["user_transfers"] = result.ledger.user_transfers;
    j["exit"] = static_cast<int>(result.exit);
    auto entries = nlohmann::json::array();
    for (const auto& e : result.ledger.entries) {
        entries.push_back({{"round", e.round},
                           {"seller", e.seller},
                           {"buyer", e.buyer},
                           {"quantum", e.quantum},
                           {"alpha", e.alpha},
                           {"theta", e.theta},
                           {"ask", e.ask},
                           {"bid", e.bid},
                           {"charge", e.charge},
                           {"payment", e.payment},
                           {"subsidy", e.subsidy}});
    }
    j["entries"] = entries;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

} // namespace mechnum
