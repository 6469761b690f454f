#include "contagion/ledger.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "contagion/error.hpp"
#include "contagion/kernels.hpp"

namespace contagion {

MarketState make_market(std::vector<double> exposures,
                        std::vector<double> external_assets,
                        std::vector<double> external_liabilities, double rate,
                        double unit) {
  const std::size_t n = external_assets.size();
  if (n == 0) throw ConfigError("market needs at least one bank");
  if (external_liabilities.size() != n || exposures.size() != n * n) {
    throw ConfigError("inconsistent ledger dimensions");
  }
  if (!(rate > 0.0) || !(unit > 0.0)) {
    throw ConfigError("rate and unit must be positive");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(external_assets[i] >= 0.0) || !(external_liabilities[i] >= 0.0) ||
        !std::isfinite(external_assets[i]) ||
        !std::isfinite(external_liabilities[i])) {
      throw ConfigError("external book of bank " + std::to_string(i) +
                        " must be finite and non-negative");
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double a = exposures[i * n + j];
      if (!(a >= 0.0) || !std::isfinite(a) || (i == j && a != 0.0)) {
        throw ConfigError("invalid exposure (" + std::to_string(i) + ", " +
                          std::to_string(j) + ")");
      }
    }
  }

  MarketState state;
  state.exposures = std::move(exposures);
  state.external_assets = std::move(external_assets);
  state.external_liabilities = std::move(external_liabilities);
  state.alive.assign(n, 1);
  state.rate = rate;
  state.unit = unit;
  state.book_equity = equities(state);
  double total = 0.0;
  for (double e : state.book_equity) total += e;
  if (!(total > 0.0)) throw ConfigError("initial total equity must be positive");
  state.initial_total_equity = total;
  return state;
}

InterbankTotals interbank_totals(const MarketState& state) {
  const std::size_t n = state.size();
  InterbankTotals totals{std::vector<double>(n), std::vector<double>(n)};
  kernels::row_sums(state.exposures, n, totals.assets);
  kernels::column_sums(state.exposures, n, totals.liabilities);
  return totals;
}

double interbank_assets(const MarketState& state, std::size_t bank) {
  double acc = 0.0;
  for (double a : state.row(bank)) acc += a;
  return acc;
}

double interbank_liabilities(const MarketState& state, std::size_t bank) {
  double acc = 0.0;
  const std::size_t n = state.size();
  for (std::size_t i = 0; i < n; ++i) acc += state.exposure(i, bank);
  return acc;
}

double total_assets(const MarketState& state, std::size_t bank) {
  return state.external_assets[bank] + interbank_assets(state, bank);
}

double equity(const MarketState& state, std::size_t bank) {
  if (!state.is_alive(bank)) return 0.0;
  return state.external_assets[bank] - state.external_liabilities[bank] +
         interbank_assets(state, bank) - interbank_liabilities(state, bank);
}

std::vector<double> equities(const MarketState& state) {
  const auto totals = interbank_totals(state);
  std::vector<double> out(state.size(), 0.0);
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (!state.is_alive(i)) continue;
    out[i] = state.external_assets[i] - state.external_liabilities[i] +
             totals.assets[i] - totals.liabilities[i];
  }
  return out;
}

double total_relative_equity(const MarketState& state) {
  double total = 0.0;
  for (double e : equities(state)) total += e;
  return total / state.initial_total_equity;
}

double defaulted_fraction(const MarketState& state) {
  const auto dead = std::count(state.alive.begin(), state.alive.end(),
                               std::uint8_t{0});
  return static_cast<double>(dead) / static_cast<double>(state.size());
}

void remove_bank(MarketState& state, std::size_t bank) {
  if (!state.is_alive(bank)) return;
  const std::size_t n = state.size();
  for (std::size_t k = 0; k < n; ++k) {
    state.exposure(bank, k) = 0.0;
    state.exposure(k, bank) = 0.0;
  }
  state.external_assets[bank] = 0.0;
  state.external_liabilities[bank] = 0.0;
  state.book_equity[bank] = 0.0;
  state.alive[bank] = 0;
}

void revalue(MarketState& state, double ratio) {
  const auto totals = interbank_totals(state);
  const double change = ratio - 1.0;
  for (std::size_t i = 0; i < state.size(); ++i) {
    state.book_equity[i] += change * (totals.assets[i] - totals.liabilities[i]);
  }
  kernels::scale_all(state.exposures, ratio);
}

void check_equity_identity(const MarketState& state,
                           double relative_tolerance) {
  const auto totals = interbank_totals(state);
  for (std::size_t i = 0; i < state.size(); ++i) {
    double recomputed = 0.0;
    double gross = 0.0;
    if (state.is_alive(i)) {
      recomputed = state.external_assets[i] - state.external_liabilities[i] +
                   totals.assets[i] - totals.liabilities[i];
      gross = state.external_assets[i] + state.external_liabilities[i] +
              totals.assets[i] + totals.liabilities[i];
    }
    // floor of one unit: a bank that sold everything has gross == 0
    const double scale = std::max({gross, std::abs(recomputed), 1.0});
    if (std::abs(state.book_equity[i] - recomputed) >
        relative_tolerance * scale) {
      throw std::logic_error(
          fmt::format("equity identity violated for bank {}: book {} vs ledger {}",
                      i, state.book_equity[i], recomputed));
    }
  }
}

}  // namespace contagion
