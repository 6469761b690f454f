#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "contagion/ingest.hpp"
#include "contagion/ledger.hpp"
#include "contagion/parameters.hpp"

namespace contagion {

struct ReconstructionConfig {
  double density = 0.1;
  std::uint64_t seed = 0;
  int max_calibration_iters = 200;
  double density_tolerance = 1e-6;  // relative
  int max_fitting_iters = 1000;
  double fitting_tolerance = 1e-6;   // relative change that stops fitting
  double marginal_tolerance = 0.01;  // accepted relative marginal error
  int max_link_retries = 64;
  int max_network_retries = 16;
  int max_added_links = 100000;  // per draw, to make the support fit the marginals

  void validate() const;
};

// Largest density the fitness model can reach: the fraction of ordered
// pairs with a positive fitness product.
double max_attainable_density(const std::vector<double>& out_fitness,
                              const std::vector<double>& in_fitness);

// Solves expected_density(z) = density by bisection on log z. Returns
// +infinity when the target equals the saturated density. Throws
// CalibrationError when the target cannot be reached.
double calibrate_z(const std::vector<double>& out_fitness,
                   const std::vector<double>& in_fitness, double density,
                   double tolerance = 1e-6, int max_iters = 200);

// Lender fitness = interbank assets, borrower fitness = interbank
// liabilities.
double calibrate_z(const std::vector<BankRecord>& records, double density,
                   double tolerance = 1e-6, int max_iters = 200);

// A sampled weighted network. Weights are face amounts in multiples of
// `unit` currency.
struct SampledNetwork {
  std::size_t n = 0;
  std::vector<double> weights;  // row-major
  double unit = 1.0;
  double z = 0.0;
  std::size_t links = 0;
  int fitting_iterations = 0;
  std::size_t added_links = 0;
  double max_marginal_error = 0.0;  // relative, over rows and columns

  double density() const {
    return n < 2 ? 0.0
                 : static_cast<double>(links) /
                       (static_cast<double>(n) * static_cast<double>(n - 1));
  }
};

// Draws a directed topology from the calibrated fitness model and assigns
// degree-corrected gravity weights, then fits row and column sums to the
// marginals by iterative proportional fitting. Marginals are divided by
// `unit` before anything else, so inputs and unit rescaled by a common
// factor give the same network.
SampledNetwork sample_exposures(const std::vector<BankRecord>& records,
                                const ReconstructionConfig& config,
                                double unit = 1.0);

// Samples a network and builds the t = 0 market: exposures at r0 times face
// value, every amount expressed in units of phi.
MarketState sample_network(const std::vector<BankRecord>& records,
                           const Parameters& params,
                           const ReconstructionConfig& config);

// Builds the t = 0 market from an already sampled network.
MarketState build_market(const std::vector<BankRecord>& records,
                         const SampledNetwork& network,
                         const Parameters& params);

// Dense matrix dump: first line is N, then N rows of N comma-separated
// values at round-trip precision.
void write_matrix(std::ostream& out, std::size_t n,
                  const std::vector<double>& values);
std::vector<double> read_matrix(std::istream& in, std::size_t& n);

// Current exposures of a market in currency units.
std::vector<double> exposures_in_currency(const MarketState& state);

}  // namespace contagion
