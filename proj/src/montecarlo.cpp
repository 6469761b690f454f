#include "contagion/montecarlo.hpp"

#include <algorithm>
#include <bit>
#include <exception>
#include <optional>

#include <fmt/format.h>

#include "contagion/error.hpp"
#include "contagion/rng.hpp"

namespace contagion {

HalfLife half_life(std::span<const double> rel_equity) {
  if (rel_equity.empty()) throw Error("half_life: empty series");
  for (std::size_t t = 0; t < rel_equity.size(); ++t) {
    if (rel_equity[t] <= 0.5) return {static_cast<std::int64_t>(t), true};
  }
  return {static_cast<std::int64_t>(rel_equity.size() - 1), false};
}

void MetricAccumulator::add(double value) {
  MetricAccumulator single;
  single.count_ = 1;
  single.mean_ = value;
  single.min_ = value;
  single.max_ = value;
  merge(single);
}

void MetricAccumulator::merge(const MetricAccumulator& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double n_a = static_cast<double>(count_);
  const double n_b = static_cast<double>(other.count_);
  const double n = n_a + n_b;
  const double diff = other.mean_ - mean_;
  mean_ += diff * (n_b / n);
  m2_ += other.m2_ + diff * diff * (n_a * n_b / n);
  count_ += other.count_;
  min_ = std::min(min_, other.min_);
  max_ = std::max(max_, other.max_);
}

MetricStats MetricAccumulator::stats() const {
  MetricStats s;
  s.count = count_;
  if (count_ == 0) return s;
  s.mean = mean_;
  s.std = count_ > 1 ? std::sqrt(m2_ / static_cast<double>(count_ - 1)) : 0.0;
  s.min = min_;
  s.max = max_;
  return s;
}

AggregateReport aggregate(const std::vector<RunRecord>& runs) {
  AggregateReport report;
  report.requested = runs.size();
  MetricAccumulator final_equity, t_c, t_half;
  for (const auto& run : runs) {
    if (!run.converged) {
      ++report.non_converged;
      continue;
    }
    ++report.converged;
    if (!run.half_life_reached) ++report.half_life_unreached;
    final_equity.add(run.final_rel_equity);
    t_c.add(static_cast<double>(run.t_c));
    t_half.add(static_cast<double>(run.t_half));
  }
  report.final_rel_equity = final_equity.stats();
  report.t_c = t_c.stats();
  report.t_half = t_half.stats();
  return report;
}

std::uint64_t fixed_network_seed(std::uint64_t master_seed) {
  return mix64(master_seed ^ 0x5bd1e9955bd1e995ULL);
}

namespace {

ReconstructionConfig reconstruction_for(const EnsembleConfig& config,
                                        const Parameters& params,
                                        std::uint64_t seed) {
  ReconstructionConfig rc = config.reconstruction;
  rc.density = params.d;
  rc.seed = seed;
  return rc;
}

// One realization: its own network unless `shared` is given.
RunRecord run_one(const std::vector<BankRecord>* records,
                  const MarketState* shared, const Parameters& params,
                  const ShockPolicy& policy, const EnsembleConfig& config,
                  std::size_t k) {
  const std::uint64_t seed = realization_seed(config.master_seed, k);
  if (shared) return run_realization(*shared, params, policy, seed);
  return run_realization(
      sample_network(*records, params, reconstruction_for(config, params, seed)),
      params, policy, seed);
}

void check_request(const Parameters& params, const EnsembleConfig& config) {
  params.validate();
  if (config.realizations < 1) throw ConfigError("need at least one realization");
  if (config.parallelism < 1) throw ConfigError("parallelism must be >= 1");
}

EnsembleResult finish(std::vector<RunRecord> runs,
                      const std::vector<std::optional<std::string>>& errors,
                      const Parameters& params, const ShockPolicy& policy,
                      const EnsembleConfig& config, std::size_t n_banks,
                      std::uint64_t fingerprint, bool fixed) {
  for (std::size_t k = 0; k < errors.size(); ++k) {
    if (errors[k]) {
      throw RealizationError(
          fmt::format("realization {} failed: {}", k, *errors[k]), k);
    }
  }
  EnsembleResult result;
  result.report = aggregate(runs);
  result.report.params = params;
  result.report.policy = policy.name();
  result.report.master_seed = config.master_seed;
  result.report.input_fingerprint = fingerprint;
  result.report.n_banks = n_banks;
  result.report.fixed_network = fixed;
  result.runs = std::move(runs);
  return result;
}

std::uint64_t market_fingerprint(const MarketState& market) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  auto feed = [&](const std::vector<double>& values) {
    for (double v : values) {
      hash ^= std::bit_cast<std::uint64_t>(v);
      hash = mix64(hash);
    }
  };
  feed(market.exposures);
  feed(market.external_assets);
  feed(market.external_liabilities);
  return hash;
}

EnsembleResult ensemble(const std::vector<BankRecord>* records,
                        const MarketState* shared, const Parameters& params,
                        const ShockPolicy& policy, const EnsembleConfig& config,
                        bool parallel, std::uint64_t fingerprint,
                        std::size_t n_banks) {
  const std::size_t n = config.realizations;
  std::vector<RunRecord> runs(n);
  std::vector<std::optional<std::string>> errors(n);
  auto body = [&](std::size_t k) {
    try {
      runs[k] = run_one(records, shared, params, policy, config, k);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  };
  if (parallel) {
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(config.parallelism)
    for (std::ptrdiff_t k = 0; k < count; ++k) body(static_cast<std::size_t>(k));
  } else {
    for (std::size_t k = 0; k < n; ++k) body(k);
  }
  return finish(std::move(runs), errors, params, policy, config, n_banks,
                fingerprint, shared != nullptr);
}

EnsembleResult from_records(const std::vector<BankRecord>& records,
                            const Parameters& params, const ShockPolicy& policy,
                            const EnsembleConfig& config, bool parallel) {
  check_request(params, config);
  const std::uint64_t fp = fingerprint(records);
  if (config.fix_network) {
    const MarketState market = sample_network(
        records, params,
        reconstruction_for(config, params, fixed_network_seed(config.master_seed)));
    return ensemble(nullptr, &market, params, policy, config, parallel, fp,
                    records.size());
  }
  return ensemble(&records, nullptr, params, policy, config, parallel, fp,
                  records.size());
}

}  // namespace

EnsembleResult run_ensemble(const std::vector<BankRecord>& records,
                            const Parameters& params, const ShockPolicy& policy,
                            const EnsembleConfig& config) {
  return from_records(records, params, policy, config, true);
}

EnsembleResult run_ensemble(const MarketState& market,
                            const Parameters& params, const ShockPolicy& policy,
                            const EnsembleConfig& config) {
  check_request(params, config);
  return ensemble(nullptr, &market, params, policy, config, true,
                  market_fingerprint(market), market.size());
}

EnsembleResult run_ensemble_serial(const std::vector<BankRecord>& records,
                                   const Parameters& params,
                                   const ShockPolicy& policy,
                                   const EnsembleConfig& config) {
  return from_records(records, params, policy, config, false);
}

EnsembleResult run_ensemble_serial(const MarketState& market,
                                   const Parameters& params,
                                   const ShockPolicy& policy,
                                   const EnsembleConfig& config) {
  check_request(params, config);
  return ensemble(nullptr, &market, params, policy, config, false,
                  market_fingerprint(market), market.size());
}

namespace {

nlohmann::ordered_json stats_json(const MetricStats& s) {
  nlohmann::ordered_json j;
  j["count"] = s.count;
  j["mean"] = s.mean;
  j["std"] = s.std;
  j["min"] = s.min;
  j["max"] = s.max;
  return j;
}

}  // namespace

nlohmann::ordered_json to_json(const AggregateReport& report) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json params;
  for (const auto& [name, value] : report.params.named_values()) {
    params[name] = value;
  }
  j["parameters"] = params;
  j["policy"] = report.policy;
  j["master_seed"] = report.master_seed;
  j["input_fingerprint"] = fmt::format("{:016x}", report.input_fingerprint);
  j["n_banks"] = report.n_banks;
  j["fixed_network"] = report.fixed_network;
  j["realizations"] = report.requested;
  j["converged"] = report.converged;
  j["non_converged"] = report.non_converged;
  j["half_life_unreached"] = report.half_life_unreached;
  nlohmann::ordered_json metrics;
  metrics["final_rel_equity"] = stats_json(report.final_rel_equity);
  metrics["t_c"] = stats_json(report.t_c);
  metrics["t_half"] = stats_json(report.t_half);
  j["metrics"] = metrics;
  return j;
}

std::string report_text(const AggregateReport& report) {
  return to_json(report).dump(2) + "\n";
}

}  // namespace contagion
