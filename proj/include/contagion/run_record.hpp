#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace contagion {

struct SeriesPoint {
  std::int64_t t = 0;
  double rate = 0.0;
  double rel_equity = 0.0;
  double defaulted_frac = 0.0;
  double gamma = 0.0;

  bool operator==(const SeriesPoint&) const = default;
};

// Outcome of one realization of the dynamics.
struct RunRecord {
  std::vector<SeriesPoint> series;  // t = 0 .. t_c
  std::int64_t t_c = 0;
  std::int64_t t_half = 0;
  bool half_life_reached = false;
  double final_rel_equity = 0.0;  // after the terminal liquidation
  bool converged = false;
  std::uint64_t seed = 0;

  std::vector<std::size_t> default_order;
  double gamma_c = 0.0;
  bool degenerate_freeze = false;
  std::size_t shock_clamps = 0;
  std::size_t sale_clamps = 0;
  std::size_t gamma_caps = 0;

  bool operator==(const RunRecord&) const = default;
};

struct HalfLife {
  std::int64_t t = 0;
  bool reached = false;
};

// First index whose relative equity is <= 0.5. When none is, returns the
// last index with `reached` cleared. Throws Error on an empty series.
HalfLife half_life(std::span<const double> rel_equity);

}  // namespace contagion
