#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace contagion {

// Live balance sheets of the interbank market.
//
// Exposures are stored dense and row-major: exposure(i, j) is the current,
// revaluation-inclusive amount bank i lends to bank j, which is also bank
// j's liability towards i. Every amount is expressed in multiples of
// `unit` currency; the simulator sets unit = phi so that the dynamics are
// exactly scale covariant.
//
// Dead banks keep their index and carry an all-zero row, column and
// external book. `book_equity` is maintained incrementally by every
// mutation and must agree with the equity recomputed from the ledger.
struct MarketState {
  std::vector<double> exposures;
  std::vector<double> external_assets;
  std::vector<double> external_liabilities;
  std::vector<std::uint8_t> alive;
  std::vector<double> book_equity;
  double rate = 1.0;
  std::int64_t step = 0;
  double initial_total_equity = 0.0;
  double unit = 1.0;

  std::size_t size() const noexcept { return external_assets.size(); }

  double& exposure(std::size_t lender, std::size_t borrower) noexcept {
    return exposures[lender * size() + borrower];
  }
  double exposure(std::size_t lender, std::size_t borrower) const noexcept {
    return exposures[lender * size() + borrower];
  }

  std::span<double> row(std::size_t lender) noexcept {
    return {exposures.data() + lender * size(), size()};
  }
  std::span<const double> row(std::size_t lender) const noexcept {
    return {exposures.data() + lender * size(), size()};
  }

  bool is_alive(std::size_t bank) const noexcept { return alive[bank] != 0; }
};

// Builds a validated state. Exposures must be n*n, non-negative, with a zero
// diagonal; every bank starts alive and the initial total equity must be
// positive. Throws ConfigError otherwise.
MarketState make_market(std::vector<double> exposures,
                        std::vector<double> external_assets,
                        std::vector<double> external_liabilities, double rate,
                        double unit = 1.0);

// Interbank row and column sums, computed in one pass.
struct InterbankTotals {
  std::vector<double> assets;       // sum_j A_ij
  std::vector<double> liabilities;  // sum_j A_ji
};
InterbankTotals interbank_totals(const MarketState& state);

double interbank_assets(const MarketState& state, std::size_t bank);
double interbank_liabilities(const MarketState& state, std::size_t bank);

// External plus interbank assets.
double total_assets(const MarketState& state, std::size_t bank);

// A^E - L^E + sum_j A_ij - sum_j A_ji; zero for a dead bank.
double equity(const MarketState& state, std::size_t bank);
std::vector<double> equities(const MarketState& state);

// Sum of alive equities over the initial total.
double total_relative_equity(const MarketState& state);

// Fraction of banks no longer alive.
double defaulted_fraction(const MarketState& state);

// Zeroes the bank's row, column and external book and clears its alive
// flag. Books no losses itself. No-op on a dead bank.
void remove_bank(MarketState& state, std::size_t bank);

// Multiplies every exposure by `ratio` and books the equity change
// (ratio - 1) * (sum_j A_ij - sum_j A_ji) for each bank.
void revalue(MarketState& state, double ratio);

// Equity at or below this many units is insolvent; smaller positive values
// are rounding residue from repeated sales.
inline constexpr double kSolvencyFloor = 1e-9;

inline bool solvent(double equity) { return equity > kSolvencyFloor; }

// Throws std::logic_error if a bank's book equity departs from its
// recomputed equity by more than `relative_tolerance` of its gross balance
// (at least one unit).
void check_equity_identity(const MarketState& state,
                           double relative_tolerance = 1e-9);

}  // namespace contagion
