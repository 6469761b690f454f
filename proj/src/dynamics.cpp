#include "contagion/dynamics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "contagion/error.hpp"

namespace contagion {

// ---------------------------------------------------------------- shocks

SalesProfile sales_profile(const MarketState& state, std::size_t bank) {
  if (!state.is_alive(bank)) return {};
  const double e = equity(state, bank);
  const double interbank = interbank_assets(state, bank);
  const double assets = state.external_assets[bank] + interbank;
  if (!(e > 0.0) || !(assets > 0.0)) return {};
  return {assets / e, state.external_assets[bank] / assets,
          interbank / assets};
}

double apply_exogenous_shock(MarketState& state, std::size_t target,
                             double shock) {
  if (!state.is_alive(target) || !(shock > 0.0)) return 0.0;
  double applied = shock;
  if (applied > state.external_assets[target]) {
    applied = state.external_assets[target];
    spdlog::debug("shock on bank {} clamped from {} to {}", target, shock,
                  applied);
  }
  state.external_assets[target] -= applied;
  state.book_equity[target] -= applied;
  return applied;
}

ReleverageResult releverage_and_hoard(MarketState& state, std::size_t bank,
                                      double loss, const SalesProfile& profile) {
  ReleverageResult result;
  if (!state.is_alive(bank) || !(loss > 0.0)) return result;
  const double sale = loss * (profile.leverage - 1.0);
  if (!(sale > 0.0)) return result;

  double external = sale * profile.external_share;
  double interbank = sale * profile.interbank_share;
  const double held_external = state.external_assets[bank];
  const double held_interbank = interbank_assets(state, bank);
  if (external > held_external) {
    external = held_external;
    result.clamped = true;
  }
  if (interbank > held_interbank) {
    interbank = held_interbank;
    result.clamped = true;
  }
  if (result.clamped) {
    spdlog::debug("bank {} cannot sell {}: sold out one asset class", bank,
                  sale);
  }

  state.external_assets[bank] -= external;
  if (interbank > 0.0) {
    const bool sell_out = interbank >= held_interbank;
    auto row = state.row(bank);
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (row[k] <= 0.0) continue;
      const double withdrawn =
          sell_out ? row[k] : interbank * (row[k] / held_interbank);
      row[k] -= withdrawn;
      state.external_liabilities[k] += withdrawn;
    }
  }

  const double proceeds = external + interbank;
  const double repaid = std::min(proceeds, state.external_liabilities[bank]);
  state.external_liabilities[bank] -= repaid;
  state.external_assets[bank] += proceeds - repaid;

  result.external_sold = external;
  result.interbank_withdrawn = interbank;
  result.liabilities_repaid = repaid;
  return result;
}

// ---------------------------------------------------------- interest rate

// r + alpha r in one rounding: 1 + alpha itself is not exact in binary, and
// that error would compound over long runs.
double small_rate_step(double rate, double alpha, double noise) {
  return std::fma(alpha, rate, rate) + noise;
}

double rate_jump_source(double alpha, double delta, double loss_ratio) {
  if (!(loss_ratio > 1.0)) return 0.0;
  return alpha * delta * (std::log(loss_ratio) / std::log1p(alpha));
}

double jump_rate_step(double rate, double alpha, double delta,
                      double loss_ratio, double noise) {
  return std::fma(alpha, rate, rate) +
         rate_jump_source(alpha, delta, loss_ratio) + noise;
}

double RateProcess::noise() {
  if (sigma_ == 0.0) return 0.0;
  std::normal_distribution<double> normal(0.0, sigma_);
  return normal(engine_);
}

namespace {

double move_rate(MarketState& state, double proposed, double floor) {
  double next = proposed;
  if (!(next > floor)) {
    spdlog::debug("rate {} clamped to floor {}", proposed, floor);
    next = floor;
  }
  revalue(state, next / state.rate);
  state.rate = next;
  return next;
}

}  // namespace

double step_rate_small(MarketState& state, RateProcess& process) {
  const double proposed =
      small_rate_step(state.rate, process.alpha(), process.noise());
  return move_rate(state, proposed, process.floor());
}

double step_rate_jump(MarketState& state, RateProcess& process,
                      double delta_equity, double shock) {
  const double ratio = std::abs(delta_equity) / shock;
  const double proposed = jump_rate_step(state.rate, process.alpha(),
                                         process.delta(), ratio,
                                         process.noise());
  return move_rate(state, proposed, process.floor());
}

// --------------------------------------------------------------- cascades

Depricing depricing_factor(double q, double c, double cap) {
  if (!(q > 0.0)) return {0.0, false};
  if (q >= c) return {cap, true};
  const double gamma = 1.0 / (c / q - 1.0);
  if (!(gamma <= cap)) return {cap, true};
  return {gamma, false};
}

namespace {

double total_exposure(const MarketState& state) {
  double acc = 0.0;
  for (double a : state.exposures) acc += a;
  return acc;
}

}  // namespace

CascadeOutcome propagate_defaults(MarketState& state,
                                  std::vector<std::size_t> initial,
                                  const Parameters& params) {
  CascadeOutcome outcome;
  const std::size_t n = state.size();
  std::vector<std::uint8_t> queued(n, 0);
  std::deque<std::size_t> queue;
  for (std::size_t u : initial) {
    if (u < n && state.is_alive(u) && !queued[u]) {
      queued[u] = 1;
      queue.push_back(u);
    }
  }

  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();

    double lent = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != u) lent += state.exposure(u, j);
    }
    const auto discount =
        depricing_factor(params.rho * lent, total_exposure(state),
                         params.gamma_cap);
    if (discount.capped) {
      ++outcome.gamma_caps;
      spdlog::debug("depricing factor capped at {} for default of bank {}",
                    params.gamma_cap, u);
    }
    const double gamma = discount.gamma;

    for (std::size_t j = 0; j < n; ++j) {
      if (j == u || !state.is_alive(j)) continue;
      const double claim = state.exposure(j, u);    // j lent to u
      const double funding = state.exposure(u, j);  // u lent to j
      if (claim == 0.0 && funding == 0.0) continue;

      // Credit shock: the claim is written off, the recovered part is cash.
      state.exposure(j, u) = 0.0;
      state.external_assets[j] += (1.0 - params.lambda) * claim;

      // Funding shock: the debt to u is settled, (1 - rho) of it refinanced
      // externally and rho of it raised by a discounted sale.
      state.exposure(u, j) = 0.0;
      state.external_liabilities[j] += (1.0 - params.rho) * funding;
      const double sale = (1.0 + gamma) * params.rho * funding;
      const double sold = std::min(sale, state.external_assets[j]);
      state.external_assets[j] -= sold;
      if (sold < sale) {
        state.external_liabilities[j] += sale - sold;
        ++outcome.sale_shortfalls;
      }

      const double loss = params.lambda * claim + gamma * params.rho * funding;
      state.book_equity[j] -= loss;
      outcome.delta_equity -= loss;
    }

    remove_bank(state, u);
    outcome.defaulted.push_back(u);
    outcome.gamma_series.push_back(gamma);

    const auto current = equities(state);
    for (std::size_t j = 0; j < n; ++j) {
      if (state.is_alive(j) && !queued[j] && !solvent(current[j])) {
        queued[j] = 1;
        queue.push_back(j);
      }
    }
  }
  return outcome;
}

CascadeOutcome propagate_default(MarketState& state, std::size_t defaulted,
                                 const Parameters& params) {
  return propagate_defaults(state, {defaulted}, params);
}

PreCascadeSnapshot take_snapshot(const MarketState& state) {
  PreCascadeSnapshot snap;
  snap.equity = equities(state);
  snap.profiles.resize(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    snap.profiles[i] = sales_profile(state, i);
  }
  return snap;
}

std::vector<std::size_t> post_cascade_releverage(
    MarketState& state, const PreCascadeSnapshot& before, double delta_equity,
    double shock, RateProcess& process, Engine& order_engine) {
  const auto now = equities(state);
  std::vector<std::size_t> order;
  for (std::size_t s = 0; s < state.size(); ++s) {
    if (state.is_alive(s) && before.equity[s] - now[s] > 0.0) {
      order.push_back(s);
    }
  }
  std::shuffle(order.begin(), order.end(), order_engine);
  for (std::size_t s : order) {
    releverage_and_hoard(state, s, before.equity[s] - now[s],
                         before.profiles[s]);
  }
  step_rate_jump(state, process, delta_equity, shock);
  return order;
}

// ----------------------------------------------------------------- freeze

TerminalDepricing terminal_depricing(double gamma_tc,
                                     double initial_total_equity,
                                     std::span<const double> equity,
                                     std::span<const double> chi) {
  double buyers = 0.0;
  for (std::size_t i = 0; i < equity.size(); ++i) {
    buyers += equity[i] - (chi[i] > 0.0 ? chi[i] : 0.0);
  }
  if (!(buyers > 0.0)) return {0.0, true};
  return {gamma_tc * (initial_total_equity / buyers), false};
}

std::optional<FreezeOutcome> check_and_resolve_freeze(
    MarketState& state, const Parameters& params,
    std::optional<double> last_gamma) {
  const std::size_t n = state.size();
  const auto totals = interbank_totals(state);
  auto current = equities(state);
  double total = 0.0;
  for (double e : current) total += e;
  if (!(total / state.initial_total_equity < params.eps_c)) return std::nullopt;

  FreezeOutcome out;
  out.chi.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (state.is_alive(i)) out.chi[i] = totals.liabilities[i] - totals.assets[i];
  }
  if (last_gamma) {
    out.gamma_tc = *last_gamma;
  } else {
    const double market = total_exposure(state);
    out.gamma_tc = depricing_factor(market, market, params.gamma_cap).gamma;
  }
  const auto terminal = terminal_depricing(out.gamma_tc,
                                           state.initial_total_equity, current,
                                           out.chi);
  out.degenerate = terminal.degenerate;
  out.gamma_c = terminal.degenerate ? params.gamma_cap : terminal.value;
  if (terminal.degenerate) {
    spdlog::debug("degenerate market freeze: buyers' wealth is not positive; "
                 "net debtors are wiped out");
  }

  std::fill(state.exposures.begin(), state.exposures.end(), 0.0);
  out.final_equities.assign(n, 0.0);
  double final_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!state.is_alive(i)) continue;
    const double chi = out.chi[i];
    double loss = 0.0;
    if (chi > 0.0) {
      loss = out.degenerate
                 ? std::min(std::max(current[i], 0.0),
                            (1.0 + params.gamma_cap) * chi)
                 : out.gamma_c * chi;
    }
    // Netting pays chi out of external assets (or credits -chi as cash);
    // the discount on the sale is the loss.
    state.external_assets[i] -= chi + loss;
    if (state.external_assets[i] < 0.0) {
      state.external_liabilities[i] -= state.external_assets[i];
      state.external_assets[i] = 0.0;
    }
    state.book_equity[i] -= loss;
    const double after = current[i] - loss;
    if (solvent(after)) {
      out.final_equities[i] = after;
      final_total += after;
    } else {
      remove_bank(state, i);
    }
  }
  out.final_relative_equity = final_total / state.initial_total_equity;
  return out;
}

// ----------------------------------------------------------- shock policy

ShockPolicy ShockPolicy::parse(std::string_view text) {
  ShockPolicy p;
  if (text == "random") return p;
  p.mode = ShockMode::kFixedTarget;
  if (text == "A_max") p.selector = Selector::kAMax;
  else if (text == "A_min") p.selector = Selector::kAMin;
  else if (text == "B_max") p.selector = Selector::kBMax;
  else if (text == "B_min") p.selector = Selector::kBMin;
  else if (text == "K_max") p.selector = Selector::kKMax;
  else if (text == "K_min") p.selector = Selector::kKMin;
  else if (text.starts_with("index:")) {
    const auto digits = text.substr(6);
    std::size_t value = 0;
    const auto [ptr, ec] =
        std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (digits.empty() || ec != std::errc{} ||
        ptr != digits.data() + digits.size()) {
      throw ConfigError("bad explicit shock target '" + std::string(text) + "'");
    }
    p.selector = Selector::kExplicit;
    p.index = value;
  } else {
    throw ConfigError("unknown shock policy '" + std::string(text) + "'");
  }
  return p;
}

std::string ShockPolicy::name() const {
  if (mode == ShockMode::kRandomEachStep) return "random";
  switch (selector) {
    case Selector::kAMax: return "A_max";
    case Selector::kAMin: return "A_min";
    case Selector::kBMax: return "B_max";
    case Selector::kBMin: return "B_min";
    case Selector::kKMax: return "K_max";
    case Selector::kKMin: return "K_min";
    case Selector::kExplicit: return "index:" + std::to_string(index);
  }
  return "unknown";
}

std::size_t resolve_target(const MarketState& state, const ShockPolicy& policy,
                           Engine& engine) {
  const std::size_t n = state.size();
  std::vector<std::size_t> alive;
  for (std::size_t i = 0; i < n; ++i) {
    if (state.is_alive(i)) alive.push_back(i);
  }
  if (alive.empty()) throw Error("no alive bank left to shock");

  if (policy.mode == ShockMode::kRandomEachStep) {
    std::uniform_int_distribution<std::size_t> pick(0, alive.size() - 1);
    return alive[pick(engine)];
  }
  if (policy.selector == Selector::kExplicit) {
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = (policy.index + k) % n;
      if (state.is_alive(i)) return i;
    }
  }

  const auto totals = interbank_totals(state);
  auto score = [&](std::size_t i) -> double {
    const double assets = state.external_assets[i] + totals.assets[i];
    switch (policy.selector) {
      case Selector::kAMax:
      case Selector::kAMin:
        return assets;
      case Selector::kBMax:
      case Selector::kBMin: {
        const double e = state.external_assets[i] -
                         state.external_liabilities[i] + totals.assets[i] -
                         totals.liabilities[i];
        return e > 0.0 ? assets / e : std::numeric_limits<double>::infinity();
      }
      case Selector::kKMax:
      case Selector::kKMin: {
        std::size_t contracts = 0;
        for (std::size_t k = 0; k < n; ++k) {
          contracts += state.exposure(i, k) > 0.0;
          contracts += state.exposure(k, i) > 0.0;
        }
        return static_cast<double>(contracts);
      }
      case Selector::kExplicit:
        break;
    }
    return 0.0;
  };
  const bool maximize = policy.selector == Selector::kAMax ||
                        policy.selector == Selector::kBMax ||
                        policy.selector == Selector::kKMax;
  std::size_t best = alive.front();
  double best_score = score(best);
  for (std::size_t k = 1; k < alive.size(); ++k) {
    const double s = score(alive[k]);
    if (maximize ? s > best_score : s < best_score) {
      best = alive[k];
      best_score = s;
    }
  }
  return best;
}

// ------------------------------------------------------------ realization

ExogenousRound exogenous_round(MarketState& state, std::size_t target,
                               double shock, RateProcess& process) {
  ExogenousRound round;
  const SalesProfile profile = sales_profile(state, target);
  round.applied = apply_exogenous_shock(state, target, shock);
  // a bank wiped out by the shock defaults instead of selling
  if (round.applied > 0.0 && solvent(equity(state, target))) {
    round.sale = releverage_and_hoard(state, target, round.applied, profile);
  }
  round.rate = step_rate_small(state, process);
  return round;
}

namespace {

SeriesPoint observe(const MarketState& state, double gamma) {
  return {state.step, state.rate, total_relative_equity(state),
          defaulted_fraction(state), gamma};
}

}  // namespace

RunRecord run_realization(MarketState state, const Parameters& params,
                          const ShockPolicy& policy, std::uint64_t seed) {
  params.validate();
  const double shock = params.phi / state.unit;
  RateProcess rate(params, make_engine(seed, Stream::kRateNoise));
  Engine targeting = make_engine(seed, Stream::kShockTargeting);
  Engine ordering = make_engine(seed, Stream::kReleverageOrder);

  RunRecord record;
  record.seed = seed;
  std::optional<double> last_gamma;
  std::optional<std::size_t> target;
  double gamma = 0.0;
  record.series.push_back(observe(state, gamma));

  while (true) {
    if (state.step >= params.max_iterations) {
      spdlog::warn("realization {} hit the iteration cap {}", seed,
                   params.max_iterations);
      record.converged = false;
      record.t_c = state.step;
      record.final_rel_equity = total_relative_equity(state);
      break;
    }

    const auto current = equities(state);
    std::vector<std::size_t> insolvent;
    for (std::size_t i = 0; i < state.size(); ++i) {
      if (state.is_alive(i) && !solvent(current[i])) insolvent.push_back(i);
    }

    if (insolvent.empty()) {
      // a fixed target keeps taking the shock until it defaults
      if (!target || !state.is_alive(*target) ||
          policy.mode == ShockMode::kRandomEachStep) {
        target = resolve_target(state, policy, targeting);
      }
      const auto round = exogenous_round(state, *target, shock, rate);
      if (round.applied < shock) ++record.shock_clamps;
      if (round.sale.clamped) ++record.sale_clamps;
    } else {
      const auto before = take_snapshot(state);
      auto cascade = propagate_defaults(state, std::move(insolvent), params);
      record.gamma_caps += cascade.gamma_caps;
      record.sale_clamps += cascade.sale_shortfalls;
      record.default_order.insert(record.default_order.end(),
                                  cascade.defaulted.begin(),
                                  cascade.defaulted.end());
      gamma = cascade.gamma_series.back();
      last_gamma = gamma;
      post_cascade_releverage(state, before, cascade.delta_equity, shock, rate,
                              ordering);
    }

    ++state.step;
    check_equity_identity(state);
    record.series.push_back(observe(state, gamma));

    if (auto freeze = check_and_resolve_freeze(state, params, last_gamma)) {
      record.converged = true;
      record.t_c = state.step;
      record.final_rel_equity = freeze->final_relative_equity;
      record.gamma_c = freeze->gamma_c;
      record.degenerate_freeze = freeze->degenerate;
      break;
    }
  }

  std::vector<double> rel(record.series.size());
  for (std::size_t k = 0; k < rel.size(); ++k) rel[k] = record.series[k].rel_equity;
  const auto half = half_life(rel);
  record.t_half = half.t;
  record.half_life_reached = half.reached;
  return record;
}

}  // namespace contagion
