#include "contagion/parameters.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "contagion/error.hpp"

namespace contagion {

namespace {

double parse_double(std::string_view name, std::string_view text) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
    throw ConfigError("parameter '" + std::string(name) +
                      "': not a finite number: '" + std::string(text) + "'");
  }
  return value;
}

std::int64_t parse_count(std::string_view name, std::string_view text) {
  const double value = parse_double(name, text);
  if (value < 1.0 || value != std::floor(value) || value > 9.0e15) {
    throw ConfigError("parameter '" + std::string(name) +
                      "': expected a positive integer, got '" +
                      std::string(text) + "'");
  }
  return static_cast<std::int64_t>(value);
}

void require(bool ok, const char* message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

void Parameters::validate() const {
  require(d > 0.0 && d <= 1.0, "d must lie in (0, 1]");
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
  require(rho >= 0.0 && rho <= 1.0, "rho must lie in [0, 1]");
  require(phi > 0.0 && std::isfinite(phi), "phi must be positive");
  require(r0 > 0.0 && std::isfinite(r0), "r0 must be positive");
  require(alpha > 0.0 && std::isfinite(alpha), "alpha must be positive");
  require(sigma >= 0.0 && std::isfinite(sigma), "sigma must be non-negative");
  require(delta >= 0.0 && std::isfinite(delta), "delta must be non-negative");
  // eps_c = 1 is accepted as the degenerate always-freeze threshold.
  require(eps_c > 0.0 && eps_c <= 1.0, "eps_c must lie in (0, 1]");
  require(gamma_cap > 0.0 && std::isfinite(gamma_cap),
          "gamma_cap must be positive");
  require(rate_floor > 0.0 && rate_floor < r0,
          "rate_floor must be positive and below r0");
  require(max_iterations >= 1, "max_iterations must be at least 1");
}

void Parameters::set(std::string_view name, std::string_view value) {
  if (name == "d") d = parse_double(name, value);
  else if (name == "lambda") lambda = parse_double(name, value);
  else if (name == "rho") rho = parse_double(name, value);
  else if (name == "phi") phi = parse_double(name, value);
  else if (name == "r0") r0 = parse_double(name, value);
  else if (name == "alpha") alpha = parse_double(name, value);
  else if (name == "sigma") sigma = parse_double(name, value);
  else if (name == "delta") delta = parse_double(name, value);
  else if (name == "eps_c") eps_c = parse_double(name, value);
  else if (name == "gamma_cap") gamma_cap = parse_double(name, value);
  else if (name == "rate_floor") rate_floor = parse_double(name, value);
  else if (name == "max_iterations") max_iterations = parse_count(name, value);
  else throw ConfigError("unknown parameter '" + std::string(name) + "'");
}

std::vector<std::pair<std::string, double>> Parameters::named_values() const {
  return {{"d", d},
          {"lambda", lambda},
          {"rho", rho},
          {"phi", phi},
          {"r0", r0},
          {"alpha", alpha},
          {"sigma", sigma},
          {"delta", delta},
          {"eps_c", eps_c},
          {"gamma_cap", gamma_cap},
          {"rate_floor", rate_floor},
          {"max_iterations", static_cast<double>(max_iterations)}};
}

}  // namespace contagion
