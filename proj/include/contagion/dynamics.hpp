#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "contagion/ledger.hpp"
#include "contagion/parameters.hpp"
#include "contagion/rng.hpp"
#include "contagion/run_record.hpp"

// Agent-based dynamics of the interbank market. All amounts handled here
// are ledger amounts, i.e. multiples of MarketState::unit.

namespace contagion {

// ---------------------------------------------------------------- shocks

// Balance-sheet shares that fix a bank's asset sales, captured before the
// loss that triggers them.
struct SalesProfile {
  double leverage = 0.0;         // total assets / equity
  double external_share = 0.0;   // A^E / A
  double interbank_share = 0.0;  // sum_k A_bk / A
};

// Profile of an alive bank with positive equity; all zeros otherwise.
SalesProfile sales_profile(const MarketState& state, std::size_t bank);

// Reduces the target's external assets by min(shock, A^E) and returns the
// amount actually applied.
double apply_exogenous_shock(MarketState& state, std::size_t target,
                             double shock);

struct ReleverageResult {
  double external_sold = 0.0;
  double interbank_withdrawn = 0.0;
  double liabilities_repaid = 0.0;
  bool clamped = false;
};

// Sells assets worth loss * (leverage - 1), split by the profile's shares.
// External sales come out of A^E; the interbank part withdraws every loan
// of the bank pro rata, and each borrower replaces the withdrawn funding
// with an external liability of equal value. Proceeds repay external
// liabilities; any excess stays as cash in A^E. A class whose required
// sale exceeds its holdings is sold out completely.
ReleverageResult releverage_and_hoard(MarketState& state, std::size_t bank,
                                      double loss, const SalesProfile& profile);

// ---------------------------------------------------------- interest rate

// (1 + alpha) r + noise
double small_rate_step(double rate, double alpha, double noise);

// alpha * delta * log_{1+alpha}(loss_ratio), floored at zero.
double rate_jump_source(double alpha, double delta, double loss_ratio);

// (1 + alpha) r + rate_jump_source(...) + noise
double jump_rate_step(double rate, double alpha, double delta,
                      double loss_ratio, double noise);

// Rate dynamics with a Gaussian noise stream. A zero sigma draws nothing.
class RateProcess {
 public:
  RateProcess(const Parameters& params, Engine engine)
      : alpha_(params.alpha),
        sigma_(params.sigma),
        delta_(params.delta),
        floor_(params.rate_floor),
        engine_(std::move(engine)) {}

  double noise();
  double alpha() const noexcept { return alpha_; }
  double delta() const noexcept { return delta_; }
  double floor() const noexcept { return floor_; }

 private:
  double alpha_;
  double sigma_;
  double delta_;
  double floor_;
  Engine engine_;
};

// Moves the rate one small step and revalues every exposure by r'/r.
// Returns the new rate.
double step_rate_small(MarketState& state, RateProcess& process);

// Same with the cascade source term driven by |delta_equity| / shock.
double step_rate_jump(MarketState& state, RateProcess& process,
                      double delta_equity, double shock);

// --------------------------------------------------------------- cascades

struct Depricing {
  double gamma = 0.0;
  bool capped = false;
};

// Fire-sale discount for liquidating q out of a market worth c under linear
// price impact: 1 / (c / q - 1). Zero when q = 0; capped when q >= c or the
// value would exceed the cap.
Depricing depricing_factor(double q, double c, double cap);

struct CascadeOutcome {
  std::vector<std::size_t> defaulted;  // processing order
  double delta_equity = 0.0;           // booked losses, <= 0
  std::vector<double> gamma_series;    // one per processed default
  std::size_t gamma_caps = 0;
  std::size_t sale_shortfalls = 0;
};

// Processes defaults first-in first-out. For each defaulter u every alive
// counterparty j loses lambda * A_ju (credit) and gamma * rho * A_uj
// (funding); u is removed once its losses are booked, and banks driven to
// non-positive equity join the queue in index order.
CascadeOutcome propagate_defaults(MarketState& state,
                                  std::vector<std::size_t> initial,
                                  const Parameters& params);
CascadeOutcome propagate_default(MarketState& state, std::size_t defaulted,
                                 const Parameters& params);

// Equities and sales profiles right before a cascade.
struct PreCascadeSnapshot {
  std::vector<double> equity;
  std::vector<SalesProfile> profiles;
};
PreCascadeSnapshot take_snapshot(const MarketState& state);

// Survivors that lost equity in the cascade realign to their pre-cascade
// leverage in uniformly random order; then the rate jumps. Returns the
// order in which banks releveraged.
std::vector<std::size_t> post_cascade_releverage(
    MarketState& state, const PreCascadeSnapshot& before, double delta_equity,
    double shock, RateProcess& process, Engine& order_engine);

// ----------------------------------------------------------------- freeze

struct TerminalDepricing {
  double value = 0.0;
  bool degenerate = false;
};

// gamma_tc * sum E(0) / sum_i (E_i - chi_i * [chi_i > 0]); degenerate when
// the denominator is not positive.
TerminalDepricing terminal_depricing(double gamma_tc,
                                     double initial_total_equity,
                                     std::span<const double> equity,
                                     std::span<const double> chi);

struct FreezeOutcome {
  std::vector<double> chi;             // residual interbank debt per bank
  double gamma_tc = 0.0;
  double gamma_c = 0.0;
  bool degenerate = false;
  std::vector<double> final_equities;  // floored at zero
  double final_relative_equity = 0.0;
};

// Freezes the market when total relative equity is strictly below eps_c:
// interbank books are netted out and every net debtor fire-sells external
// assets worth (1 + Gamma_c) chi. `last_gamma` is the most recent cascade
// discount; without one, the discount of liquidating every residual
// interbank asset is used.
std::optional<FreezeOutcome> check_and_resolve_freeze(
    MarketState& state, const Parameters& params,
    std::optional<double> last_gamma);

// ----------------------------------------------------------- shock policy

enum class ShockMode { kFixedTarget, kRandomEachStep };
enum class Selector { kAMax, kAMin, kBMax, kBMin, kKMax, kKMin, kExplicit };

struct ShockPolicy {
  ShockMode mode = ShockMode::kRandomEachStep;
  Selector selector = Selector::kAMax;
  std::size_t index = 0;  // for Selector::kExplicit

  // "random", "A_max", "A_min", "B_max", "B_min", "K_max", "K_min" or
  // "index:<n>".
  static ShockPolicy parse(std::string_view text);
  std::string name() const;

  bool operator==(const ShockPolicy&) const = default;
};

// Alive bank hit this round. A = total assets, B = leverage, K = number of
// positive exposures in the bank's row and column; ties go to the lowest
// index. An explicit target that has defaulted passes to the next alive
// index. Throws Error when no bank is alive.
std::size_t resolve_target(const MarketState& state, const ShockPolicy& policy,
                           Engine& engine);

// ------------------------------------------------------------ realization

struct ExogenousRound {
  double applied = 0.0;  // shock actually taken off A^E
  ReleverageResult sale;
  double rate = 0.0;     // rate after the small step
};

// One exogenous-shock round on `target`: shock, releverage with the
// pre-shock profile (skipped if the shock made the bank insolvent), then a
// small rate step.
ExogenousRound exogenous_round(MarketState& state, std::size_t target,
                               double shock, RateProcess& process);


// Runs the dynamics on `state` until the market freezes or the iteration
// cap is hit. Every random draw comes from substreams of `seed`. Under a
// fixed-target policy the selected bank takes every shock until it
// defaults; the selector is then resolved again among survivors.
RunRecord run_realization(MarketState state, const Parameters& params,
                          const ShockPolicy& policy, std::uint64_t seed);

}  // namespace contagion
