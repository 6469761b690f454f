#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace contagion {

// Model constants. Defaults are the reference calibration of the model.
struct Parameters {
  double d = 0.1;         // target density of the reconstructed network
  double lambda = 1.0;    // loss given default
  double rho = 1.0;       // fraction of lost funding replaced by asset sales
  double phi = 1e8;       // exogenous shock, currency units
  double r0 = 1.0;        // initial interest rate
  double alpha = 1e-3;    // rate drift factor
  double sigma = 1e-3;    // rate noise standard deviation
  double delta = 1e-2;    // rate jump prefactor
  double eps_c = 0.37;    // residual-equity ratio that freezes the market

  // Run policy knobs.
  double gamma_cap = 1e3;
  double rate_floor = 1e-6;
  std::int64_t max_iterations = 1'000'000;

  // Throws ConfigError on an out-of-range value.
  void validate() const;

  // Assigns a field by its symbol name ("alpha", "eps_c", ...).
  void set(std::string_view name, std::string_view value);

  // Name/value pairs in declaration order, values at full precision.
  std::vector<std::pair<std::string, double>> named_values() const;
};

}  // namespace contagion
