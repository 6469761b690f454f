#include "contagion/ingest.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>
#include <unordered_set>

#include <fmt/format.h>

#include "contagion/error.hpp"
#include "contagion/rng.hpp"

namespace contagion {

namespace {

constexpr std::size_t kColumns = 5;
constexpr std::string_view kColumnNames[kColumns] = {
    "id", "external_assets", "external_liabilities", "interbank_assets",
    "interbank_liabilities"};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_amount(std::string_view text, std::size_t row,
                    std::size_t column) {
  double value = 0.0;
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), last, value);
  if (text.empty() || ec != std::errc{} || ptr != last) {
    throw ParseError(fmt::format("row {}, column {} ({}): '{}' is not a number",
                                 row, column, kColumnNames[column - 1], text),
                     row, column);
  }
  if (!std::isfinite(value) || value < 0.0) {
    throw ParseError(
        fmt::format("row {}, column {} ({}): {} must be finite and "
                    "non-negative",
                    row, column, kColumnNames[column - 1], text),
        row, column);
  }
  return value;
}

// Rescales both marginal vectors to their common mean total when they
// disagree by more than the tolerance.
void balance_marginals(std::vector<BankRecord>& records) {
  const double assets = total_interbank_assets(records);
  const double liabilities = total_interbank_liabilities(records);
  const double larger = std::max(assets, liabilities);
  if (larger <= 0.0) return;
  const double mismatch = std::abs(assets - liabilities) / larger;
  if (mismatch <= kMarginalMismatchTolerance) return;
  const double target = 0.5 * (assets + liabilities);
  spdlog::warn(
      "interbank marginals mismatch by {:.4}% (assets {}, liabilities {}); "
      "rescaling both to {}",
      100.0 * mismatch, assets, liabilities, target);
  const double asset_factor = assets > 0.0 ? target / assets : 0.0;
  const double liability_factor =
      liabilities > 0.0 ? target / liabilities : 0.0;
  for (auto& r : records) {
    r.interbank_assets *= asset_factor;
    r.interbank_liabilities *= liability_factor;
  }
}

}  // namespace

double total_interbank_assets(const std::vector<BankRecord>& records) {
  double acc = 0.0;
  for (const auto& r : records) acc += r.interbank_assets;
  return acc;
}

double total_interbank_liabilities(const std::vector<BankRecord>& records) {
  double acc = 0.0;
  for (const auto& r : records) acc += r.interbank_liabilities;
  return acc;
}

void validate_records(const std::vector<BankRecord>& records, double r0) {
  if (records.size() < 2) {
    throw ParseError("at least two banks are required", 0, 0);
  }
  std::unordered_set<std::string> ids;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& r = records[k];
    const std::size_t row = k + 2;  // header is row 1
    if (r.id.empty()) throw ParseError(fmt::format("row {}: empty id", row), row, 1);
    if (!ids.insert(r.id).second) {
      throw ParseError(fmt::format("row {}: duplicate id '{}'", row, r.id), row, 1);
    }
    const double amounts[] = {r.external_assets, r.external_liabilities,
                              r.interbank_assets, r.interbank_liabilities};
    for (std::size_t c = 0; c < 4; ++c) {
      if (!std::isfinite(amounts[c]) || amounts[c] < 0.0) {
        throw ParseError(fmt::format("row {}, column {} ({}): must be finite "
                                     "and non-negative",
                                     row, c + 2, kColumnNames[c + 1]),
                         row, c + 2);
      }
    }
    const double e = r.equity(r0);
    if (!(e > 0.0)) {
      throw InsolventBankError(
          fmt::format("bank '{}' (row {}) is insolvent at start: equity {}",
                      r.id, row, e),
          r.id);
    }
  }
}

std::vector<BankRecord> parse_balance_sheets(std::istream& in, double r0) {
  std::string line;
  std::size_t row = 0;
  bool have_header = false;
  std::vector<BankRecord> records;
  while (std::getline(in, line)) {
    ++row;
    const auto content = trim(line);
    if (!have_header) {
      if (content.size() >= 3 &&
          static_cast<unsigned char>(content[0]) == 0xEF) {
        // UTF-8 byte order mark
        line.erase(0, 3);
      }
      if (trim(line) != kBalanceSheetHeader) {
        throw ParseError(fmt::format("row 1: expected header '{}'",
                                     kBalanceSheetHeader),
                         1, 0);
      }
      have_header = true;
      continue;
    }
    if (content.empty()) continue;
    const auto fields = split(content);
    if (fields.size() != kColumns) {
      throw ParseError(fmt::format("row {}: expected {} fields, found {}", row,
                                   kColumns, fields.size()),
                       row, std::min(fields.size(), kColumns) + 1);
    }
    if (fields[0].empty()) {
      throw ParseError(fmt::format("row {}, column 1 (id): empty id", row),
                       row, 1);
    }
    BankRecord r;
    r.id = std::string(fields[0]);
    r.external_assets = parse_amount(fields[1], row, 2);
    r.external_liabilities = parse_amount(fields[2], row, 3);
    r.interbank_assets = parse_amount(fields[3], row, 4);
    r.interbank_liabilities = parse_amount(fields[4], row, 5);
    records.push_back(std::move(r));
  }
  if (!have_header) throw ParseError("empty file: missing header", 1, 0);
  balance_marginals(records);
  validate_records(records, r0);
  return records;
}

std::vector<BankRecord> load_balance_sheets(const std::filesystem::path& path,
                                            double r0) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open balance-sheet file '" + path.string() + "'");
  return parse_balance_sheets(in, r0);
}

void write_balance_sheets(std::ostream& out,
                          const std::vector<BankRecord>& records) {
  out << kBalanceSheetHeader << '\n';
  for (const auto& r : records) {
    out << fmt::format("{},{},{},{},{}\n", r.id, r.external_assets,
                       r.external_liabilities, r.interbank_assets,
                       r.interbank_liabilities);
  }
}

void save_balance_sheets(const std::filesystem::path& path,
                         const std::vector<BankRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  write_balance_sheets(out, records);
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::uint64_t fingerprint(const std::vector<BankRecord>& records) {
  std::ostringstream text;
  write_balance_sheets(text, records);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text.str()) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

void SyntheticSpec::validate() const {
  if (n_banks < 2) throw ConfigError("synthetic population needs n >= 2");
  if (!(asset_tail_exponent > 0.0)) {
    throw ConfigError("asset tail exponent must be positive");
  }
  if (!(interbank_share > 0.0 && interbank_share < 1.0)) {
    throw ConfigError("interbank share must lie in (0, 1)");
  }
  if (!(leverage_min > 1.0) || !(leverage_max >= leverage_min)) {
    throw ConfigError("leverage band must satisfy 1 < min <= max");
  }
  if (!(min_total_assets >= 1.0) || min_total_assets > 1e12) {
    throw ConfigError("minimum total assets must lie in [1, 1e12]");
  }
}

std::vector<BankRecord> generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_banks;
  Engine engine(mix64(spec.seed));

  // Totals are capped so that amounts stay exactly representable integers
  // even after a 1e3 rescaling.
  constexpr double kMaxTotal = 1e12 * 4.0;
  std::vector<double> totals(n), leverage(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = 1.0 - uniform01(engine);  // (0, 1]
    const double draw =
        spec.min_total_assets * std::pow(u, -1.0 / spec.asset_tail_exponent);
    totals[i] = std::round(std::min(draw, kMaxTotal));
    leverage[i] = spec.leverage_min +
                  (spec.leverage_max - spec.leverage_min) * uniform01(engine);
  }

  std::vector<BankRecord> records(n);
  std::vector<double> liabilities(n), raw_interbank_liabilities(n);
  double sum_interbank_assets = 0.0;
  double sum_raw = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = records[i];
    r.id = fmt::format("B{:04}", i);
    r.interbank_assets = std::round(spec.interbank_share * totals[i]);
    r.external_assets = totals[i] - r.interbank_assets;
    liabilities[i] = std::round(totals[i] - totals[i] / leverage[i]);
    raw_interbank_liabilities[i] = spec.interbank_share * liabilities[i];
    sum_interbank_assets += r.interbank_assets;
    sum_raw += raw_interbank_liabilities[i];
  }

  // Proportional rescaling closes the market; rounding residue goes to the
  // largest borrower so that the integer totals match exactly.
  const double factor = sum_interbank_assets / sum_raw;
  double sum_interbank_liabilities = 0.0;
  std::size_t largest = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = records[i];
    r.interbank_liabilities = std::round(factor * raw_interbank_liabilities[i]);
    sum_interbank_liabilities += r.interbank_liabilities;
    if (r.interbank_liabilities > records[largest].interbank_liabilities) {
      largest = i;
    }
  }
  records[largest].interbank_liabilities +=
      sum_interbank_assets - sum_interbank_liabilities;

  for (std::size_t i = 0; i < n; ++i) {
    auto& r = records[i];
    r.external_liabilities = liabilities[i] - r.interbank_liabilities;
    if (r.external_liabilities < 0.0 || r.interbank_liabilities < 0.0) {
      throw ConfigError(fmt::format(
          "infeasible synthetic spec: bank {} would need negative liabilities "
          "(interbank share {} too large for leverage band [{}, {}])",
          r.id, spec.interbank_share, spec.leverage_min, spec.leverage_max));
    }
    if (!(r.equity() > 0.0)) {
      throw ConfigError(fmt::format(
          "infeasible synthetic spec: bank {} is insolvent after closing the "
          "interbank market",
          r.id));
    }
  }
  return records;
}

}  // namespace contagion
