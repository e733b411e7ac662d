#pragma once

#include "mechnum/valuation.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace mechnum {

/// The center's preference over allocations: a peaked bump around a target
/// vector, value(x) = amplitude * exp(-||x - target||^norm_power / width)
/// with the Euclidean norm and norm_power 1 or 2. The target is the global
/// maximizer by construction.
class CenterValuation {
public:
    CenterValuation(double amplitude, double width, std::vector<double> target,
                    int norm_power);

    double value(std::span<const double> x) const;
    double distance(std::span<const double> x) const;  // ||x - target||_2

    double amplitude() const { return amplitude_; }
    double width() const { return width_; }
    int norm_power() const { return norm_power_; }
    const std::vector<double>& target() const { return target_; }

private:
    double amplitude_;
    double width_;
    int norm_power_;
    std::vector<double> target_;
};

/// The center's preferred allocation restricted to the feasible set: the
/// stored target when feasible, otherwise its Euclidean projection onto
/// {0 <= x_i <= x_max, sum(x) <= budget}.
std::vector<double> preferred_allocation(const CenterValuation& nu, double budget,
                                         double x_max);

/// Per-user transfers under dual pricing: t_i = -lambda * x_i.
std::vector<double> dual_price_transfer(std::span<const double> x, double lambda);

struct SemQuotes {
    double ask;  // compensation the shrinking user requires
    double bid;  // price the growing user is willing to pay
};

/// Truthful quotes for a two-user exchange from x_accepted to x_target:
/// ask = v1(x1) - v1(t1), bid = v2(t2) - v2(x2). Requires the first user to
/// strictly lose and the second to strictly gain valuation at the target;
/// throws std::invalid_argument naming the violated inequality otherwise.
SemQuotes sem_truthful_quotes(const ComposedUtility& u1, const ComposedUtility& u2,
                              std::span<const double> x_accepted,
                              std::span<const double> x_target);

struct SemOutcome {
    bool success = false;
    double charge_buyer = 0.0;  // ask - alpha*center_stake, on success
    double pay_seller = 0.0;    // bid + alpha*center_stake, on success
    double seller_gain = 0.0;   // evaluated against the true ask
    double buyer_gain = 0.0;    // evaluated against the true bid
    double center_gain = 0.0;   // (1-2*alpha)*center_stake + ask - bid
    std::vector<double> x_final;
};

/// One-shot subsidized exchange. The trade executes when
/// bid + alpha*center_stake >= ask; otherwise everything stays at the
/// accepted allocation with zero transfers. true_ask/true_bid default to
/// the reported quotes and are used to evaluate the users' realized gains
/// when the reports are untruthful. alpha must lie in (0, 1/2].
SemOutcome sem_run(double ask, double bid, double center_stake, double alpha,
                   std::span<const double> x_accepted, std::span<const double> x_target,
                   double true_ask = std::numeric_limits<double>::quiet_NaN(),
                   double true_bid = std::numeric_limits<double>::quiet_NaN());

/// Cap on the subsidy fraction that keeps the executed alpha*theta
/// sequence nonincreasing: min(proposed, min(history)/theta_selected).
/// An empty history passes the proposal through. theta_selected must be
/// positive; a nonpositive value signals inconsistent quotes and throws.
double guarded_subsidy_fraction(double proposed, double theta_selected,
                                std::span<const double> executed_products);

/// One round of exchange bookkeeping, derived from an allocation and the
/// center's target. Matrices are row-major sellers x buyers.
struct RoundMatrices {
    std::vector<std::size_t> sellers;         // target strictly below current
    std::vector<std::size_t> buyers;          // target strictly above current
    std::vector<double> pair_quantum;         // min(quantum, both remaining gaps)
    std::vector<double> theta;                // center gain of the tentative exchange
    std::vector<double> psi;                  // alpha*theta + bid - ask
    std::vector<std::uint8_t> viable;         // psi > 0
    std::vector<std::size_t> viable_sellers;  // rows with a viable entry
};

/// Builds the round matrices from per-user scalar quotes: asks aligned
/// with the derived seller list (ascending user index), bids with the
/// buyer list. Both lists must be fully quoted.
RoundMatrices esem_round_matrices(std::span<const double> x, const CenterValuation& nu,
                                  std::span<const double> asks, std::span<const double> bids,
                                  double alpha, double quantum);

struct EsemConfig {
    double quantum = 1e-2;          // per-exchange lot size (delta)
    double subsidy_fraction = 0.5;  // alpha proposal, guarded per exchange
    int max_rounds = 100000;
    std::uint64_t seed = 1;
};

/// Everything a round produced. Matrices are row-major sellers x buyers
/// and are resolved per pair: the executable amount of a pair is
/// min(quantum, seller gap, buyer gap) and quotes price exactly that
/// amount, so reaching a target is exact.
struct ExchangeRound {
    int round = 0;
    std::vector<double> x;                    // allocation entering the round
    std::vector<std::size_t> sellers;         // users with target below current
    std::vector<std::size_t> buyers;          // users with target above current
    std::vector<double> asks;                 // per seller, at its own clamped quantum
    std::vector<double> bids;                 // per buyer, at its own clamped quantum
    std::vector<double> pair_quantum;
    std::vector<double> theta;                // center gain of the tentative exchange
    std::vector<double> psi;                  // subsidized surplus alpha*theta + bid - ask
    std::vector<std::uint8_t> viable;         // psi > 0
    std::vector<std::size_t> viable_sellers;  // sellers with a viable pair

    bool exchanged = false;
    std::size_t seller = 0, buyer = 0;        // executed pair (user indices)
    double quantum_executed = 0.0;
    double alpha_used = 0.0;
    double theta_executed = 0.0;
    double psi_executed = 0.0;
    double ask_executed = 0.0;
    double bid_executed = 0.0;
    double charge = 0.0;                      // paid by the buyer
    double payment = 0.0;                     // received by the seller
};

struct LedgerEntry {
    int round = 0;
    std::size_t seller = 0, buyer = 0;
    double quantum = 0.0;
    double alpha = 0.0;
    double theta = 0.0;
    double ask = 0.0, bid = 0.0;
    double charge = 0.0, payment = 0.0;
    double subsidy = 0.0;  // payment - charge
    bool ask_inconsistent = false;  // quote violated implied concavity
    bool bid_inconsistent = false;
};

struct TransferLedger {
    std::vector<double> user_transfers;  // cumulative net transfer per user
    double center_subsidy = 0.0;
    std::vector<LedgerEntry> entries;
    std::vector<std::uint8_t> user_flagged;  // quote sequence broke implied concavity
};

enum class EsemExit {
    target_reached,       // no seller remains above its target
    no_viable_pairs,      // the viability matrix was all zero
    selection_exhausted,  // candidate elimination emptied a side
    truncated             // max_rounds reached
};

struct EsemResult {
    std::vector<double> x_final;
    TransferLedger ledger;
    std::vector<ExchangeRound> rounds;
    EsemExit exit = EsemExit::no_viable_pairs;
    // Selections whose surplus was positive only because a distorted quote
    // outweighed a nonpositive center gain; they are skipped and counted.
    int masked_nonpositive_theta = 0;
    bool truncated() const { return exit == EsemExit::truncated; }
};

/// How a user answers a quote request. `truthful` carries the honest value
/// so policies can distort it. Selling requests price giving up `quantum`
/// from x_current; buying requests price receiving it.
struct QuoteRequest {
    std::size_t user = 0;
    int round = 0;
    double x_current = 0.0;
    double quantum = 0.0;
    bool selling = false;
    double truthful = 0.0;
};
using QuotePolicy = std::function<double(const QuoteRequest&)>;

/// Iterative subsidized exchange toward the center's target. Starts from
/// x_accepted, runs rounds of quoting, viability screening, uniform pair
/// selection with elimination on non-viable picks, and single executed
/// exchanges, until the target side empties, nothing is viable, selection
/// exhausts, or max_rounds hits (reported via the exit code, never an
/// exception). A null policy means every user quotes truthfully.
EsemResult esem_run(std::span<const ComposedUtility> users, std::span<const double> x_accepted,
                    const CenterValuation& nu, const EsemConfig& cfg,
                    const QuotePolicy& policy = nullptr);

/// Per-round cumulative utility of every user (valuation change from the
/// start plus net transfers), evaluated under the supplied utilities.
/// Row r is the state after round r; row 0 is all zeros.
std::vector<std::vector<double>> cumulative_utilities(std::span<const ComposedUtility> users,
                                                      std::span<const double> x_accepted,
                                                      const EsemResult& result);

struct ReplayReport {
    bool ok = false;
    double max_theta_error = 0.0;     // recomputed vs recorded center gains
    double max_subsidy_error = 0.0;   // entry subsidy vs 2*alpha*theta + bid - ask
    double max_balance_error = 0.0;   // ledger sums vs recorded totals
    double nu_identity_error = 0.0;   // sum(theta) vs nu(x_final) - nu(x0)
    double conservation_error = 0.0;  // max |sum(x_l) - sum(x0)| over rounds
};

/// Re-derives every ledger entry from the recorded trajectory and checks
/// the accounting identities.
ReplayReport replay_ledger(const EsemResult& result, std::span<const double> x_accepted,
                           const CenterValuation& nu, double tol = 1e-12);

/// Round-trace CSV: one row per executed exchange plus cumulative per-user
/// utilities under the supplied (true) utilities.
void write_esem_rounds_csv(const EsemResult& result, std::span<const ComposedUtility> users,
                           std::span<const double> x_accepted, const CenterValuation& nu,
                           const std::string& path, const std::string& config_stamp);

/// Ledger JSON dump for replay verification.
void write_ledger_json(const EsemResult& result, std::span<const double> x_accepted,
                       const std::string& path);

} // namespace mechnum
