#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "contagion/dynamics.hpp"
#include "contagion/ingest.hpp"
#include "contagion/parameters.hpp"
#include "contagion/reconstruction.hpp"
#include "contagion/run_record.hpp"

namespace contagion {

struct MetricStats {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for fewer than 2 values
  double min = 0.0;
  double max = 0.0;

  double standard_error() const {
    return count > 0 ? std / std::sqrt(static_cast<double>(count)) : 0.0;
  }
  bool operator==(const MetricStats&) const = default;
};

// Streaming mean/variance with an associative merge (Chan et al.).
class MetricAccumulator {
 public:
  void add(double value);
  void merge(const MetricAccumulator& other);
  MetricStats stats() const;

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double min_ = 0.0;
  double max_ = 0.0;
};

struct AggregateReport {
  MetricStats final_rel_equity;
  MetricStats t_c;
  MetricStats t_half;
  std::size_t requested = 0;
  std::size_t converged = 0;
  std::size_t non_converged = 0;
  std::size_t half_life_unreached = 0;

  Parameters params;
  std::string policy;
  std::uint64_t master_seed = 0;
  std::uint64_t input_fingerprint = 0;
  std::size_t n_banks = 0;
  bool fixed_network = false;
};

struct EnsembleConfig {
  std::size_t realizations = 1;
  std::uint64_t master_seed = 0;
  int parallelism = 1;
  // Sample one network for the whole ensemble instead of one per
  // realization.
  bool fix_network = false;
  // Density is taken from Parameters::d; the seed is derived per
  // realization.
  ReconstructionConfig reconstruction;
};

struct EnsembleResult {
  AggregateReport report;
  std::vector<RunRecord> runs;
};

// Realization k draws its network (unless fixed) and its dynamics from
// realization_seed(master_seed, k). Output does not depend on
// `parallelism`. Throws RealizationError naming the first failing index.
EnsembleResult run_ensemble(const std::vector<BankRecord>& records,
                            const Parameters& params, const ShockPolicy& policy,
                            const EnsembleConfig& config);

// Same contract on an already built market shared by every realization.
EnsembleResult run_ensemble(const MarketState& market,
                            const Parameters& params, const ShockPolicy& policy,
                            const EnsembleConfig& config);

// Serial reference implementations.
EnsembleResult run_ensemble_serial(const std::vector<BankRecord>& records,
                                   const Parameters& params,
                                   const ShockPolicy& policy,
                                   const EnsembleConfig& config);
EnsembleResult run_ensemble_serial(const MarketState& market,
                                   const Parameters& params,
                                   const ShockPolicy& policy,
                                   const EnsembleConfig& config);

// Statistics over converged runs, accumulated in run order.
AggregateReport aggregate(const std::vector<RunRecord>& runs);

// Seed of the network shared by a fixed-network ensemble.
std::uint64_t fixed_network_seed(std::uint64_t master_seed);

nlohmann::ordered_json to_json(const AggregateReport& report);
std::string report_text(const AggregateReport& report);

}  // namespace contagion
