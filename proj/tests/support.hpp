#pragma once

// Test helpers: hand ledgers and closed-form oracles written straight from
// the model equations, without going through the library's own helpers.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "contagion/dynamics.hpp"
#include "contagion/ledger.hpp"

namespace testing {

// Dense n x n matrix from (lender, borrower, amount) triples.
struct Link {
  std::size_t lender;
  std::size_t borrower;
  double amount;
};

inline std::vector<double> matrix(std::size_t n, const std::vector<Link>& links) {
  std::vector<double> a(n * n, 0.0);
  for (const auto& l : links) a[l.lender * n + l.borrower] = l.amount;
  return a;
}

// E_i = A^E_i - L^E_i + sum_j A_ij - sum_j A_ji, by brute force.
inline double brute_equity(const std::vector<double>& a, std::size_t n,
                           const std::vector<double>& ae,
                           const std::vector<double>& le, std::size_t i) {
  double e = ae[i] - le[i];
  for (std::size_t j = 0; j < n; ++j) e += a[i * n + j] - a[j * n + i];
  return e;
}

inline double relative_error(double got, double want) {
  const double scale = std::max(std::abs(want), 1e-300);
  return std::abs(got - want) / scale;
}

// Closed-form equities after one exogenous-shock round on `s` with shock
// phi and rate moving from r to (1 + alpha) r + eps, written as in the
// three per-class balance-sheet updates (shocked bank, its borrowers,
// everybody else). Inputs are the pre-shock ledger.
inline std::vector<double> shock_round_oracle(const std::vector<double>& a,
                                              std::size_t n,
                                              const std::vector<double>& ae,
                                              const std::vector<double>& le,
                                              std::size_t s, double phi,
                                              double r, double alpha,
                                              double eps) {
  std::vector<double> e(n), net(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    e[i] = brute_equity(a, n, ae, le, i);
    for (std::size_t k = 0; k < n; ++k) net[i] += a[i * n + k] - a[k * n + i];
  }
  double lent = 0.0;
  for (std::size_t k = 0; k < n; ++k) lent += a[s * n + k];
  const double assets = ae[s] + lent;
  const double b = assets / e[s];
  const double f_i = lent / assets;
  const double g = alpha + eps / r;

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == s) {
      out[i] = e[i] - phi + g * (net[i] - phi * (b - 1.0) * f_i);
    } else if (a[s * n + i] > 0.0) {
      // L_is = A_si
      out[i] = e[i] + g * (net[i] + phi * (b - 1.0) * a[s * n + i] / assets);
    } else {
      out[i] = e[i] + g * net[i];
    }
  }
  return out;
}

// Small random market where bank `target` survives a shock of `phi`.
struct ShockInstance {
  std::size_t n = 0;
  std::vector<double> a, ae, le;
  double r = 1.0, alpha = 0.0, sigma = 0.0, phi = 0.0;
  std::size_t target = 0;
};

inline ShockInstance random_shock_instance(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ShockInstance x;
  x.n = 2 + rng() % 5;  // 2..6
  const std::size_t n = x.n;
  x.a.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && u(rng) < 0.6) x.a[i * n + j] = 0.1 + 10.0 * u(rng);
  x.ae.resize(n);
  x.le.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    x.ae[i] = 5.0 + 50.0 * u(rng);
    // leave every bank with equity between 5% and 60% of its assets
    double lent = 0.0, borrowed = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      lent += x.a[i * n + j];
      borrowed += x.a[j * n + i];
    }
    const double frac = 0.05 + 0.55 * u(rng);
    // enough external assets that L^E comes out non-negative
    x.ae[i] = std::max(x.ae[i], borrowed / (1.0 - frac) - lent + 1.0);
    const double assets = x.ae[i] + lent;
    x.le[i] = assets - borrowed - frac * assets;
  }
  x.r = 0.5 + 1.5 * u(rng);
  x.alpha = 1e-4 + 0.05 * u(rng);
  x.sigma = u(rng) < 0.5 ? 0.0 : 0.01 * u(rng);
  x.target = rng() % n;
  const double e_t = brute_equity(x.a, n, x.ae, x.le, x.target);
  x.phi = (0.01 + 0.8 * u(rng)) * std::min(e_t, x.ae[x.target]);
  return x;
}

// Runs one library exogenous-shock round on the instance and returns the
// worst relative gap between ledger equities and the closed form. The
// noise is drawn independently from an identically seeded engine.
inline double shock_round_gap(const ShockInstance& x, std::uint64_t seed) {
  contagion::Parameters p;
  p.alpha = x.alpha;
  p.sigma = x.sigma;
  auto state = contagion::make_market(x.a, x.ae, x.le, x.r);
  contagion::RateProcess process(p, contagion::Engine(seed));
  contagion::exogenous_round(state, x.target, x.phi, process);

  double eps = 0.0;
  if (x.sigma > 0.0) {
    std::mt19937_64 engine(seed);
    eps = std::normal_distribution<double>(0.0, x.sigma)(engine);
  }
  const auto want = shock_round_oracle(x.a, x.n, x.ae, x.le, x.target, x.phi,
                                       x.r, x.alpha, eps);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.n; ++i) {
    worst = std::max(worst, relative_error(contagion::equity(state, i), want[i]));
  }
  return worst;
}

// Linear-scan half-life.
inline std::size_t scan_half_life(const std::vector<double>& rel) {
  for (std::size_t t = 0; t < rel.size(); ++t) {
    if (!(rel[t] > 0.5)) return t;
  }
  return rel.size() - 1;
}

}  // namespace testing
