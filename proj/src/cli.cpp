#include "contagion/cli.hpp"

#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "contagion/charts.hpp"
#include "contagion/error.hpp"
#include "contagion/ingest.hpp"
#include "contagion/montecarlo.hpp"
#include "contagion/reconstruction.hpp"
#include "contagion/rng.hpp"

namespace fs = std::filesystem;

namespace contagion::cli {

namespace {

std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("expected name=value, got '" + text + "'");
  }
  return {text.substr(0, eq), text.substr(eq + 1)};
}

double to_number(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("synthetic '" + key + "': bad number '" + value + "'");
  }
}

// "n=183,tail=1.5,share=0.1,lev_min=10,lev_max=30,min_assets=5e9,seed=1"
SyntheticSpec parse_synthetic(const std::string& text) {
  SyntheticSpec spec;
  std::stringstream items(text);
  std::string item;
  while (std::getline(items, item, ',')) {
    if (item.empty()) continue;
    const auto [key, value] = split_assignment(item);
    const double v = to_number(key, value);
    if (key == "n") spec.n_banks = static_cast<std::size_t>(v);
    else if (key == "tail") spec.asset_tail_exponent = v;
    else if (key == "share") spec.interbank_share = v;
    else if (key == "lev_min") spec.leverage_min = v;
    else if (key == "lev_max") spec.leverage_max = v;
    else if (key == "min_assets") spec.min_total_assets = v;
    else if (key == "seed") spec.seed = static_cast<std::uint64_t>(v);
    else throw ConfigError("unknown synthetic key '" + key + "'");
  }
  spec.validate();
  return spec;
}

struct InputOptions {
  std::string input;
  std::string synthetic;
  std::vector<std::string> overrides;

  void attach(CLI::App* cmd) {
    auto* in = cmd->add_option("--input", input, "Balance-sheet file");
    auto* syn = cmd->add_option(
        "--synthetic", synthetic,
        "Synthetic population, e.g. n=183,tail=1.5,share=0.1,lev_min=10,"
        "lev_max=30,min_assets=5e9,seed=1");
    in->excludes(syn);
    syn->excludes(in);
    cmd->add_option("--set", overrides,
                    "Parameter override name=value (d, lambda, rho, phi, r0, "
                    "alpha, sigma, delta, eps_c, gamma_cap, rate_floor, "
                    "max_iterations)");
  }

  Parameters parameters() const {
    Parameters p;
    for (const auto& o : overrides) {
      const auto [name, value] = split_assignment(o);
      p.set(name, value);
    }
    p.validate();
    return p;
  }

  std::vector<BankRecord> records(const Parameters& p) const {
    if (!input.empty()) return load_balance_sheets(input, p.r0);
    if (!synthetic.empty()) {
      auto records = generate_synthetic(parse_synthetic(synthetic));
      validate_records(records, p.r0);
      return records;
    }
    throw ConfigError("exactly one of --input or --synthetic is required");
  }
};

struct SimulationOptions {
  std::size_t realizations = 1;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out_dir = "out";
  bool no_series = false;
  bool no_report = false;
  bool charts = false;
  bool matrix_dump = false;
  bool fix_network = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--realizations,-n", realizations, "Realizations per policy")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "Master seed");
    cmd->add_option("--threads", threads,
                    "Parallel realizations (default: all cores)");
    cmd->add_option("--out,-o", out_dir, "Output directory");
    cmd->add_flag("--no-series", no_series, "Skip per-realization series files");
    cmd->add_flag("--no-report", no_report, "Skip the aggregate report");
    cmd->add_flag("--charts", charts, "Write one SVG chart per panel");
    cmd->add_flag("--matrix-dump", matrix_dump,
                  "Write the initial exposure matrix of realization 0");
    cmd->add_flag("--fix-network", fix_network,
                  "Share one sampled network across realizations");
  }

  EnsembleConfig ensemble() const {
    EnsembleConfig c;
    c.realizations = realizations;
    c.master_seed = seed;
    c.parallelism = threads > 0 ? threads : omp_get_max_threads();
    c.fix_network = fix_network;
    return c;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

void dump_matrix(const fs::path& path, const MarketState& market) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_matrix(out, market.size(), exposures_in_currency(market));
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

// Network of realization 0 (or the shared one), as the ensemble builds it.
MarketState first_network(const std::vector<BankRecord>& records,
                          const Parameters& params,
                          const EnsembleConfig& config) {
  ReconstructionConfig rc = config.reconstruction;
  rc.density = params.d;
  rc.seed = config.fix_network ? fixed_network_seed(config.master_seed)
                               : realization_seed(config.master_seed, 0);
  return sample_network(records, params, rc);
}

// Writes series and report for one ensemble under `dir`; returns the series
// file of realization 0 (empty when series are disabled).
fs::path write_ensemble(const fs::path& dir, const EnsembleResult& result,
                        const SimulationOptions& opts, std::ostream& out) {
  fs::create_directories(dir);
  fs::path first;
  if (!opts.no_series) {
    fs::create_directories(dir / "series");
    for (std::size_t k = 0; k < result.runs.size(); ++k) {
      const auto path = dir / "series" / fmt::format("run_{:05}.csv", k);
      save_series(path, result.runs[k].series);
      if (k == 0) first = path;
    }
  }
  if (!opts.no_report) {
    write_text(dir / "report.json", report_text(result.report));
  }
  const auto& r = result.report;
  out << fmt::format(
      "{}: {} realizations, {} converged; t_c mean {:.6g}, t_half mean "
      "{:.6g}, final relative equity mean {:.6g}\n",
      r.policy, r.requested, r.converged, r.t_c.mean, r.t_half.mean,
      r.final_rel_equity.mean);
  return first;
}

int cmd_run(const InputOptions& in, const SimulationOptions& opts,
            const std::string& policy_text, std::ostream& out) {
  const Parameters params = in.parameters();
  const auto records = in.records(params);
  const auto policy = ShockPolicy::parse(policy_text);
  const auto config = opts.ensemble();
  const fs::path dir = opts.out_dir;

  const auto result = run_ensemble(records, params, policy, config);
  const auto first = write_ensemble(dir, result, opts, out);
  if (!in.synthetic.empty()) save_balance_sheets(dir / "population.csv", records);
  if (opts.charts) {
    if (first.empty()) throw ConfigError("--charts needs series files");
    write_panel_charts(dir / "charts", {{policy.name(), first}});
  }
  if (opts.matrix_dump) {
    dump_matrix(dir / "network.csv", first_network(records, params, config));
  }
  return result.report.non_converged == 0 ? 0 : 2;
}

int cmd_sweep(const InputOptions& in, const SimulationOptions& opts,
              const std::vector<std::string>& policy_names, std::ostream& out) {
  const Parameters params = in.parameters();
  const auto records = in.records(params);
  auto config = opts.ensemble();
  config.fix_network = true;
  const fs::path dir = opts.out_dir;

  const MarketState market = first_network(records, params, config);
  fs::create_directories(dir);
  if (opts.matrix_dump) dump_matrix(dir / "network.csv", market);
  if (!in.synthetic.empty()) save_balance_sheets(dir / "population.csv", records);

  std::vector<SeriesSource> sources;
  std::size_t non_converged = 0;
  for (const auto& name : policy_names) {
    const auto policy = ShockPolicy::parse(name);
    auto result = run_ensemble(market, params, policy, config);
    result.report.input_fingerprint = fingerprint(records);
    const auto first = write_ensemble(dir / policy.name(), result, opts, out);
    if (!first.empty()) sources.push_back({policy.name(), first});
    non_converged += result.report.non_converged;
  }
  if (opts.charts) {
    if (sources.empty()) throw ConfigError("--charts needs series files");
    write_panel_charts(dir / "charts", sources);
  }
  return non_converged == 0 ? 0 : 2;
}

int cmd_validate(const std::string& path, const InputOptions& in,
                 std::ostream& out) {
  const Parameters params = in.parameters();
  const auto records = load_balance_sheets(path, params.r0);
  out << "id,equity,leverage,solvent\n";
  for (const auto& r : records) {
    const double e = r.equity(params.r0);
    out << fmt::format("{},{},{},{}\n", r.id, e, r.total_assets(params.r0) / e,
                       e > 0.0 ? "yes" : "no");
  }
  return 0;
}

int cmd_sample_network(const InputOptions& in, std::uint64_t seed,
                       const std::string& out_path, std::ostream& out) {
  const Parameters params = in.parameters();
  const auto records = in.records(params);
  ReconstructionConfig rc;
  rc.density = params.d;
  rc.seed = seed;
  const auto market = sample_network(records, params, rc);
  if (out_path.empty()) {
    write_matrix(out, market.size(), exposures_in_currency(market));
  } else {
    if (const auto parent = fs::path(out_path).parent_path(); !parent.empty()) {
      fs::create_directories(parent);
    }
    dump_matrix(out_path, market);
    std::size_t links = 0;
    for (double a : market.exposures) links += a > 0.0;
    const double n = static_cast<double>(market.size());
    out << fmt::format("{} banks, {} links, density {:.6g}\n", market.size(),
                       links, static_cast<double>(links) / (n * (n - 1.0)));
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Interbank distress propagation simulator", "contagion"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("--verbose,-v", verbose, "Debug logging");

  InputOptions run_in, sweep_in, validate_in, sample_in;
  SimulationOptions run_opts, sweep_opts;
  std::string policy = "random";
  std::vector<std::string> policies = {"A_max", "A_min", "B_max",
                                       "B_min", "K_max", "K_min"};
  std::string validate_path;
  std::uint64_t sample_seed = 0;
  std::string sample_out;

  auto* run_cmd = app.add_subcommand("run", "Run an ensemble of realizations");
  run_in.attach(run_cmd);
  run_opts.attach(run_cmd);
  run_cmd->add_option("--policy", policy,
                      "random, A_max, A_min, B_max, B_min, K_max, K_min or "
                      "index:<n>");

  auto* sweep_cmd =
      app.add_subcommand("sweep", "Compare shock policies on one network");
  sweep_in.attach(sweep_cmd);
  sweep_opts.attach(sweep_cmd);
  sweep_cmd->add_option("--policies", policies, "Comma-separated policies")
      ->delimiter(',');

  auto* validate_cmd =
      app.add_subcommand("validate", "Check a balance-sheet file");
  validate_cmd->add_option("path", validate_path, "Balance-sheet file")
      ->required();
  validate_cmd->add_option("--set", validate_in.overrides,
                           "Parameter override name=value");

  auto* sample_cmd = app.add_subcommand(
      "sample-network", "Reconstruct one exposure matrix and dump it");
  sample_in.attach(sample_cmd);
  sample_cmd->add_option("--seed", sample_seed, "Reconstruction seed");
  sample_cmd->add_option("--out,-o", sample_out,
                         "Output file (default: standard output)");

  std::vector<const char*> argv{"contagion"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);
  try {
    if (*run_cmd) return cmd_run(run_in, run_opts, policy, out);
    if (*sweep_cmd) return cmd_sweep(sweep_in, sweep_opts, policies, out);
    if (*validate_cmd) return cmd_validate(validate_path, validate_in, out);
    if (*sample_cmd) return cmd_sample_network(sample_in, sample_seed, sample_out, out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

int main(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace contagion::cli
