#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace contagion {

// Aggregate balance sheet of one bank. Interbank totals are face amounts;
// at rate r their current value is r times the face amount.
struct BankRecord {
  std::string id;
  double external_assets = 0.0;
  double external_liabilities = 0.0;
  double interbank_assets = 0.0;
  double interbank_liabilities = 0.0;

  double total_assets(double rate = 1.0) const {
    return external_assets + rate * interbank_assets;
  }
  double equity(double rate = 1.0) const {
    return external_assets - external_liabilities +
           rate * (interbank_assets - interbank_liabilities);
  }

  bool operator==(const BankRecord&) const = default;
};

inline constexpr const char* kBalanceSheetHeader =
    "id,external_assets,external_liabilities,interbank_assets,"
    "interbank_liabilities";

// Marginal totals may disagree by this relative amount before loading
// rescales them.
inline constexpr double kMarginalMismatchTolerance = 1e-3;

// Parses a balance-sheet file. Throws ParseError (with 1-based row and
// column) on malformed content and InsolventBankError when a bank has
// non-positive equity at rate r0. Marginal totals that disagree by more
// than 0.1% are rescaled to their common mean, with a warning.
std::vector<BankRecord> load_balance_sheets(const std::filesystem::path& path,
                                            double r0 = 1.0);
std::vector<BankRecord> parse_balance_sheets(std::istream& in,
                                             double r0 = 1.0);

// Writes the header and one row per bank at round-trip precision.
void save_balance_sheets(const std::filesystem::path& path,
                         const std::vector<BankRecord>& records);
void write_balance_sheets(std::ostream& out,
                          const std::vector<BankRecord>& records);

// Checks count, finiteness, sign, id uniqueness and initial solvency.
void validate_records(const std::vector<BankRecord>& records, double r0 = 1.0);

// Population generator standing in for proprietary balance-sheet data.
struct SyntheticSpec {
  std::size_t n_banks = 183;
  double asset_tail_exponent = 1.5;  // Pareto tail of total assets
  double interbank_share = 0.1;      // interbank fraction of assets
  double leverage_min = 10.0;
  double leverage_max = 30.0;
  // Pareto scale, currency units. With the default leverage band the
  // smallest bank still has more equity than one reference shock.
  double min_total_assets = 5e9;
  std::uint64_t seed = 1;

  void validate() const;
};

// Deterministic in `spec.seed`. All amounts are whole currency units,
// interbank assets and liabilities balance exactly in aggregate and every
// bank is solvent at rate 1.
std::vector<BankRecord> generate_synthetic(const SyntheticSpec& spec);

// Total interbank assets and liabilities.
double total_interbank_assets(const std::vector<BankRecord>& records);
double total_interbank_liabilities(const std::vector<BankRecord>& records);

// 64-bit FNV-1a over the canonical text serialization.
std::uint64_t fingerprint(const std::vector<BankRecord>& records);

}  // namespace contagion
