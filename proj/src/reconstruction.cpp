#include "contagion/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "contagion/error.hpp"
#include "contagion/kernels.hpp"
#include "contagion/rng.hpp"

namespace contagion {

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

std::vector<double> normalized(const std::vector<double>& v) {
  const double top = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size(), 0.0);
  if (top <= 0.0) return out;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / top;
  return out;
}

// Bisection on log z for fitness already normalized to a unit maximum.
double solve_log_z(const std::vector<double>& out, const std::vector<double>& in,
                   double density, double tolerance, int max_iters) {
  auto density_at = [&](double log_z) {
    return kernels::expected_density(out, in, std::exp(log_z));
  };
  double lo = 0.0;
  double hi = 0.0;
  for (int k = 0; k < 200 && density_at(lo) > density; ++k) lo -= 4.0;
  for (int k = 0; k < 200 && density_at(hi) < density; ++k) hi += 4.0;
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < max_iters; ++it) {
    mid = 0.5 * (lo + hi);
    const double value = density_at(mid);
    if (std::abs(value - density) <= tolerance * density) break;
    if (value < density) lo = mid;
    else hi = mid;
  }
  return mid;
}

struct Topology {
  std::vector<std::uint8_t> links;  // row-major
  std::vector<double> probability;  // row-major
};

// Draws one line (row or column) of the adjacency conditioned on having at
// least one link: the first link position is drawn from its exact
// conditional law, the remaining positions independently.
bool draw_at_least_one(const std::vector<double>& p, Engine& engine,
                       std::vector<std::uint8_t>& out) {
  double none = 1.0;
  for (double q : p) none *= (1.0 - q);
  const double some = 1.0 - none;
  if (!(some > 0.0)) return false;
  const double u = uniform01(engine) * some;
  double survive = 1.0;
  double cumulative = 0.0;
  std::size_t first = p.size();
  for (std::size_t k = 0; k < p.size(); ++k) {
    cumulative += survive * p[k];
    if (p[k] > 0.0 && u < cumulative) {
      first = k;
      break;
    }
    survive *= (1.0 - p[k]);
  }
  if (first == p.size()) {
    // Rounding left u beyond the last cumulative value.
    for (std::size_t k = p.size(); k-- > 0;) {
      if (p[k] > 0.0) {
        first = k;
        break;
      }
    }
  }
  std::fill(out.begin(), out.end(), std::uint8_t{0});
  out[first] = 1;
  for (std::size_t k = first + 1; k < p.size(); ++k) {
    out[k] = uniform01(engine) < p[k] ? 1 : 0;
  }
  return true;
}

// Ensures every bank with a positive marginal has at least one link on that
// side. Redrawing an empty line only adds links, so fixing columns never
// empties a row.
void connect_isolated(Topology& topo, std::size_t n,
                      const std::vector<double>& x, const std::vector<double>& y,
                      const ReconstructionConfig& config, Engine& engine) {
  std::vector<double> p(n);
  std::vector<std::uint8_t> line(n);
  auto fix = [&](std::size_t bank, bool as_lender) {
    auto index = [&](std::size_t k) {
      return as_lender ? bank * n + k : k * n + bank;
    };
    for (std::size_t k = 0; k < n; ++k) {
      p[k] = k == bank ? 0.0 : topo.probability[index(k)];
    }
    bool linked = false;
    for (int attempt = 0; attempt < config.max_link_retries && !linked; ++attempt) {
      for (std::size_t k = 0; k < n; ++k) {
        line[k] = (p[k] > 0.0 && uniform01(engine) < p[k]) ? 1 : 0;
        linked = linked || line[k] != 0;
      }
    }
    if (!linked && !draw_at_least_one(p, engine, line)) {
      throw CalibrationError(fmt::format(
          "bank {} has a positive {} marginal but no admissible counterparty",
          bank, as_lender ? "asset" : "liability"));
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (line[k]) topo.links[index(k)] = 1;
    }
  };

  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] <= 0.0) continue;
    bool any = false;
    for (std::size_t j = 0; j < n && !any; ++j) any = topo.links[i * n + j];
    if (!any) fix(i, true);
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (y[j] <= 0.0) continue;
    bool any = false;
    for (std::size_t i = 0; i < n && !any; ++i) any = topo.links[i * n + j];
    if (!any) fix(j, false);
  }
}

// Rows then columns, until every scaling factor is within tolerance of 1.
// Lines with a single link are set to their target directly.
int fit_marginals(std::vector<double>& w, std::size_t n,
                  const std::vector<double>& row_target,
                  const std::vector<double>& col_target,
                  const std::vector<std::uint8_t>& links,
                  const ReconstructionConfig& config) {
  std::vector<std::size_t> row_links(n, 0), col_links(n, 0);
  std::vector<std::size_t> row_single(n), col_single(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!links[i * n + j]) continue;
      ++row_links[i];
      ++col_links[j];
      row_single[i] = j;
      col_single[j] = i;
    }
  }
  std::vector<double> sums(n), factors(n);
  int it = 0;
  while (it < config.max_fitting_iters) {
    ++it;
    double worst = 0.0;

    kernels::row_sums(w, n, sums);
    for (std::size_t i = 0; i < n; ++i) {
      factors[i] = sums[i] > 0.0 ? row_target[i] / sums[i] : 1.0;
      worst = std::max(worst, std::abs(factors[i] - 1.0));
    }
    kernels::scale_rows(w, n, factors);
    for (std::size_t i = 0; i < n; ++i) {
      if (row_links[i] == 1) w[i * n + row_single[i]] = row_target[i];
    }

    kernels::column_sums(w, n, sums);
    for (std::size_t j = 0; j < n; ++j) {
      factors[j] = sums[j] > 0.0 ? col_target[j] / sums[j] : 1.0;
      worst = std::max(worst, std::abs(factors[j] - 1.0));
    }
    kernels::scale_columns(w, n, factors);
    for (std::size_t j = 0; j < n; ++j) {
      if (col_links[j] == 1) w[col_single[j] * n + j] = col_target[j];
    }

    if (worst < config.fitting_tolerance) break;
  }
  return it;
}

// Max flow source -> lenders -> linked borrowers -> sink. A support can carry
// the marginals exactly iff the flow saturates every lender.
class SupportFlow {
 public:
  SupportFlow(const std::vector<std::uint8_t>& links, std::size_t n,
              const std::vector<double>& row_target,
              const std::vector<double>& col_target)
      : n_(n), adj_(2 * n + 2), level_(2 * n + 2), next_(2 * n + 2) {
    const std::size_t source = 2 * n, sink = 2 * n + 1;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += row_target[i];
      if (row_target[i] > 0.0) add(source, i, row_target[i]);
      if (col_target[i] > 0.0) add(n + i, sink, col_target[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (links[i * n + j]) add(i, n + j, kInfinity);
      }
    }
    slack_ = total * 1e-12;
    total_ = total;
  }

  double deficit() {
    double flow = 0.0;
    while (layer()) {
      std::fill(next_.begin(), next_.end(), 0);
      while (true) {
        const double pushed = push(2 * n_, kInfinity);
        if (!(pushed > slack_)) break;
        flow += pushed;
      }
    }
    return total_ - flow;
  }

  // Lenders still reachable from the source after the flow: the bottleneck.
  bool reachable(std::size_t node) const { return level_[node] >= 0; }

 private:
  struct Arc {
    std::size_t to;
    double cap;
  };

  void add(std::size_t from, std::size_t to, double cap) {
    adj_[from].push_back(arcs_.size());
    arcs_.push_back({to, cap});
    adj_[to].push_back(arcs_.size());
    arcs_.push_back({from, 0.0});
  }

  bool layer() {
    std::fill(level_.begin(), level_.end(), -1);
    std::vector<std::size_t> queue = {2 * n_};
    level_[2 * n_] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t u = queue[head];
      for (std::size_t e : adj_[u]) {
        if (arcs_[e].cap > slack_ && level_[arcs_[e].to] < 0) {
          level_[arcs_[e].to] = level_[u] + 1;
          queue.push_back(arcs_[e].to);
        }
      }
    }
    return level_[2 * n_ + 1] >= 0;
  }

  double push(std::size_t u, double limit) {
    if (u == 2 * n_ + 1) return limit;
    for (; next_[u] < adj_[u].size(); ++next_[u]) {
      const std::size_t e = adj_[u][next_[u]];
      Arc& arc = arcs_[e];
      if (!(arc.cap > slack_) || level_[arc.to] != level_[u] + 1) continue;
      const double got = push(arc.to, std::min(limit, arc.cap));
      if (got > 0.0) {
        arc.cap -= got;
        arcs_[e ^ 1].cap += got;
        return got;
      }
    }
    return 0.0;
  }

  std::size_t n_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<Arc> arcs_;
  std::vector<int> level_;
  std::vector<std::size_t> next_;
  double slack_ = 0.0;
  double total_ = 0.0;
};

// Adds links until the support can carry the marginals: each time, the most
// probable missing link out of the flow bottleneck. Returns the number added.
std::size_t widen_support(Topology& topo, std::size_t n,
                          const std::vector<double>& row_target,
                          const std::vector<double>& col_target,
                          int max_added) {
  double total = 0.0;
  for (double v : row_target) total += v;
  std::size_t added = 0;
  while (true) {
    SupportFlow flow(topo.links, n, row_target, col_target);
    if (!(flow.deficit() > total * 1e-9)) return added;
    if (added >= static_cast<std::size_t>(max_added)) break;
    std::size_t best = n * n;
    double best_p = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!flow.reachable(i)) continue;
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t at = i * n + j;
        if (i == j || topo.links[at] || flow.reachable(n + j)) continue;
        if (topo.probability[at] > best_p) best_p = topo.probability[at], best = at;
      }
    }
    if (best == n * n) break;
    topo.links[best] = 1;
    ++added;
  }
  throw CalibrationError(
      "interbank marginals cannot be carried by any admissible network");
}

double marginal_error(const std::vector<double>& w, std::size_t n,
                      const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> rows(n), cols(n);
  kernels::row_sums(w, n, rows);
  kernels::column_sums(w, n, cols);
  double worst = 0.0;
  auto deviation = [](double realized, double target) {
    if (target > 0.0) return std::abs(realized - target) / target;
    return realized > 0.0 ? kInfinity : 0.0;
  };
  for (std::size_t i = 0; i < n; ++i) {
    worst = std::max(worst, deviation(rows[i], x[i]));
    worst = std::max(worst, deviation(cols[i], y[i]));
  }
  return worst;
}

}  // namespace

void ReconstructionConfig::validate() const {
  if (!(density > 0.0 && density <= 1.0)) {
    throw ConfigError("target density must lie in (0, 1]");
  }
  if (!(density_tolerance > 0.0) || !(fitting_tolerance > 0.0) ||
      !(marginal_tolerance > 0.0)) {
    throw ConfigError("reconstruction tolerances must be positive");
  }
  if (max_calibration_iters < 1 || max_fitting_iters < 1 ||
      max_link_retries < 0 || max_network_retries < 1 ||
      max_added_links < 0) {
    throw ConfigError("reconstruction iteration limits must be positive");
  }
}

double max_attainable_density(const std::vector<double>& out_fitness,
                              const std::vector<double>& in_fitness) {
  return kernels::expected_density(out_fitness, in_fitness, kInfinity);
}

double calibrate_z(const std::vector<double>& out_fitness,
                   const std::vector<double>& in_fitness, double density,
                   double tolerance, int max_iters) {
  if (out_fitness.size() != in_fitness.size() || out_fitness.size() < 2) {
    throw CalibrationError("fitness vectors must have equal size >= 2");
  }
  if (!(density > 0.0 && density <= 1.0)) {
    throw CalibrationError("target density must lie in (0, 1]");
  }
  const double ceiling = max_attainable_density(out_fitness, in_fitness);
  if (ceiling <= 0.0) {
    throw CalibrationError("no pair of banks has a positive fitness product");
  }
  if (density > ceiling * (1.0 + tolerance)) {
    throw CalibrationError(fmt::format(
        "target density {} exceeds the attainable maximum {}", density,
        ceiling));
  }
  if (density >= ceiling * (1.0 - tolerance)) return kInfinity;

  const auto out = normalized(out_fitness);
  const auto in = normalized(in_fitness);
  const double log_z = solve_log_z(out, in, density, tolerance, max_iters);
  const double out_top = *std::max_element(out_fitness.begin(), out_fitness.end());
  const double in_top = *std::max_element(in_fitness.begin(), in_fitness.end());
  return std::exp(log_z) / out_top / in_top;
}

double calibrate_z(const std::vector<BankRecord>& records, double density,
                   double tolerance, int max_iters) {
  std::vector<double> out, in;
  for (const auto& r : records) {
    out.push_back(r.interbank_assets);
    in.push_back(r.interbank_liabilities);
  }
  return calibrate_z(out, in, density, tolerance, max_iters);
}

SampledNetwork sample_exposures(const std::vector<BankRecord>& records,
                                const ReconstructionConfig& config,
                                double unit) {
  config.validate();
  const std::size_t n = records.size();
  if (n < 2) throw CalibrationError("reconstruction needs at least two banks");

  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = records[i].interbank_assets / unit;
    y[i] = records[i].interbank_liabilities / unit;
  }
  const auto xn = normalized(x);
  const auto yn = normalized(y);
  // z for the max-normalized fitness; p_ij is the same either way.
  const double z = calibrate_z(xn, yn, config.density, config.density_tolerance,
                               config.max_calibration_iters);

  double total_x = 0.0;
  double total_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total_x += x[i];
    total_y += y[i];
  }
  std::vector<double> col_target(n);
  for (std::size_t j = 0; j < n; ++j) col_target[j] = y[j] * (total_x / total_y);

  Topology topo;
  topo.probability.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) topo.probability[i * n + j] = kernels::link_probability(z, xn[i], yn[j]);
    }
  }

  Engine engine = make_engine(config.seed, Stream::kReconstruction);
  for (int attempt = 0; attempt < config.max_network_retries; ++attempt) {
    topo.links.assign(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double p = topo.probability[i * n + j];
        const double u = uniform01(engine);
        if (u < p) topo.links[i * n + j] = 1;
      }
    }
    connect_isolated(topo, n, x, y, config, engine);

    SampledNetwork net;
    net.n = n;
    net.unit = unit;
    net.z = z;
    net.added_links =
        widen_support(topo, n, x, col_target, config.max_added_links);
    net.weights.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (!topo.links[i * n + j]) continue;
        ++net.links;
        net.weights[i * n + j] =
            x[i] * y[j] / (total_x * topo.probability[i * n + j]);
      }
    }
    net.fitting_iterations =
        fit_marginals(net.weights, n, x, col_target, topo.links, config);
    net.max_marginal_error = marginal_error(net.weights, n, x, y);
    if (net.max_marginal_error <= config.marginal_tolerance) return net;
    spdlog::debug("network attempt {} missed marginals by {:.3g}; resampling",
                  attempt, net.max_marginal_error);
  }
  throw CalibrationError(fmt::format(
      "could not fit marginals within {} after {} network draws",
      config.marginal_tolerance, config.max_network_retries));
}

MarketState build_market(const std::vector<BankRecord>& records,
                         const SampledNetwork& network,
                         const Parameters& params) {
  const std::size_t n = records.size();
  if (network.n != n) throw ConfigError("network size does not match records");
  const double unit = params.phi;
  const double weight_scale = network.unit == unit ? 1.0 : network.unit / unit;
  std::vector<double> exposures(n * n);
  for (std::size_t k = 0; k < n * n; ++k) {
    exposures[k] = params.r0 * (network.weights[k] * weight_scale);
  }
  std::vector<double> ext_assets(n), ext_liabilities(n);
  for (std::size_t i = 0; i < n; ++i) {
    ext_assets[i] = records[i].external_assets / unit;
    ext_liabilities[i] = records[i].external_liabilities / unit;
  }
  MarketState state = make_market(std::move(exposures), std::move(ext_assets),
                                   std::move(ext_liabilities), params.r0, unit);
  for (std::size_t i = 0; i < n; ++i) {
    if (!solvent(state.book_equity[i])) {
      throw InsolventBankError(
          fmt::format("bank '{}' is insolvent in the reconstructed network "
                      "(equity {} x {})",
                      records[i].id, state.book_equity[i], unit),
          records[i].id);
    }
  }
  return state;
}

MarketState sample_network(const std::vector<BankRecord>& records,
                           const Parameters& params,
                           const ReconstructionConfig& config) {
  params.validate();
  return build_market(records, sample_exposures(records, config, params.phi),
                      params);
}

void write_matrix(std::ostream& out, std::size_t n,
                  const std::vector<double>& values) {
  out << n << '\n';
  std::string line;
  for (std::size_t i = 0; i < n; ++i) {
    line.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j) line += ',';
      line += fmt::format("{}", values[i * n + j]);
    }
    out << line << '\n';
  }
}

std::vector<double> read_matrix(std::istream& in, std::size_t& n) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("matrix: missing size line", 1, 0);
  try {
    std::size_t used = 0;
    const unsigned long long parsed = std::stoull(line, &used);
    if (used != line.size()) throw std::invalid_argument("trailing text");
    n = static_cast<std::size_t>(parsed);
  } catch (const std::exception&) {
    throw ParseError("matrix: first line must be the dimension", 1, 1);
  }
  std::vector<double> values;
  values.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) {
      throw ParseError(fmt::format("matrix: missing row {}", i + 1), i + 2, 0);
    }
    std::istringstream cells(line);
    std::string cell;
    std::size_t j = 0;
    while (std::getline(cells, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ParseError(fmt::format("matrix: bad value '{}'", cell), i + 2, j + 1);
      }
      ++j;
    }
    if (j != n) {
      throw ParseError(fmt::format("matrix: row {} has {} values", i + 1, j),
                       i + 2, 0);
    }
  }
  return values;
}

std::vector<double> exposures_in_currency(const MarketState& state) {
  std::vector<double> out(state.exposures);
  for (double& v : out) v *= state.unit;
  return out;
}

}  // namespace contagion
