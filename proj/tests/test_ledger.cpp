#include <doctest.h>

#include <random>
#include <stdexcept>

#include "contagion/error.hpp"
#include "contagion/ledger.hpp"
#include "support.hpp"

using namespace contagion;
using testing::Link;
using testing::matrix;

namespace {

// 3 banks, exposures already revalued at r = 1.25 from face values.
MarketState three_bank_ledger() {
  const double r = 1.25;
  auto a = matrix(3, {{0, 1, 4.0 * r}, {1, 2, 2.0 * r}, {2, 0, 1.0 * r}, {0, 2, 3.0 * r}});
  return make_market(a, {20, 8, 6}, {10, 5, 3}, r);
}

}  // namespace

TEST_CASE("equity by direct substitution") {
  // A^E=10, L^E=4, row-sum 3, col-sum 2
  auto a = matrix(3, {{0, 1, 3.0}, {2, 0, 2.0}});
  auto s = make_market(a, {10, 0, 0}, {4, 0, 0}, 1.0);
  CHECK(equity(s, 0) == 7.0);
}

TEST_CASE("isolated bank with matched external book has zero equity") {
  auto s = make_market(matrix(2, {}), {5, 3}, {5, 1}, 1.0);
  CHECK(equity(s, 0) == 0.0);
}

TEST_CASE("revalued 3-bank ledger against brute-force recomputation") {
  auto s = three_bank_ledger();
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(equity(s, i) ==
          doctest::Approx(testing::brute_equity(s.exposures, 3, s.external_assets,
                                                s.external_liabilities, i))
              .epsilon(1e-15));
  }
  // by hand: E0 = 20-10+8.75-1.25, E1 = 8-5+2.5-5, E2 = 6-3+1.25-6.25
  CHECK(equity(s, 0) == doctest::Approx(17.5).epsilon(1e-15));
  CHECK(equity(s, 1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(equity(s, 2) == doctest::Approx(-2.0).epsilon(1e-15));
  const auto all = equities(s);
  for (std::size_t i = 0; i < 3; ++i) CHECK(all[i] == equity(s, i));
}

TEST_CASE("dead bank has zero equity") {
  auto s = three_bank_ledger();
  remove_bank(s, 1);
  CHECK(equity(s, 1) == 0.0);
  CHECK(equities(s)[1] == 0.0);
}

TEST_CASE("total relative equity") {
  auto s = three_bank_ledger();
  CHECK(total_relative_equity(s) == 1.0);
  for (std::size_t i = 0; i < 3; ++i) remove_bank(s, i);
  CHECK(total_relative_equity(s) == 0.0);
  CHECK(defaulted_fraction(s) == 1.0);
}

TEST_CASE("remove_bank zeroes books and does not transfer equity") {
  SUBCASE("only counterparty") {
    auto s = make_market(matrix(2, {{0, 1, 3.0}, {1, 0, 1.0}}), {5, 5}, {1, 1}, 1.0);
    remove_bank(s, 1);
    CHECK(interbank_assets(s, 0) == 0.0);
    CHECK(interbank_liabilities(s, 0) == 0.0);
    CHECK_FALSE(s.is_alive(1));
    CHECK(s.external_assets[1] == 0.0);
    CHECK(s.external_liabilities[1] == 0.0);
  }
  SUBCASE("isolated bank") {
    auto s = make_market(matrix(3, {{0, 1, 2.0}}), {5, 5, 7}, {1, 1, 2}, 1.0);
    const double before = equity(s, 0) + equity(s, 1);
    remove_bank(s, 2);
    CHECK(equity(s, 0) + equity(s, 1) == before);
  }
  SUBCASE("hub of a star: survivors only lose their netted exposures") {
    auto s = make_market(matrix(4, {{0, 1, 2}, {0, 2, 3}, {0, 3, 5}, {1, 0, 1}, {2, 0, 1}, {3, 0, 2}}),
                         {1, 100, 100, 100}, {30, 50, 50, 50}, 1.0);
    const auto before = s.book_equity;
    remove_bank(s, 0);
    // the removal step itself books nothing
    for (std::size_t j = 1; j < 4; ++j) CHECK(s.book_equity[j] == before[j]);
  }
  SUBCASE("already dead is a no-op") {
    auto s = three_bank_ledger();
    remove_bank(s, 0);
    const auto snapshot = s.exposures;
    remove_bank(s, 0);
    CHECK(s.exposures == snapshot);
  }
}

TEST_CASE("revaluation") {
  SUBCASE("matched book is neutral") {
    // bank 1 lends 3 and borrows 3
    auto s = make_market(matrix(3, {{1, 0, 1.0}, {1, 2, 2.0}, {0, 1, 3.0}}),
                         {10, 10, 10}, {1, 1, 1}, 1.0);
    const double e1 = equity(s, 1);
    revalue(s, 1.001);
    CHECK(equity(s, 1) == e1);
    CHECK(s.book_equity[1] == e1);
    check_equity_identity(s);
  }
  SUBCASE("book equity tracks the ledger") {
    auto s = three_bank_ledger();
    for (int k = 0; k < 100; ++k) revalue(s, 1.0 + 1e-3 * (k % 7));
    CHECK_NOTHROW(check_equity_identity(s));
  }
}

TEST_CASE("equity identity violation is a hard error") {
  auto s = three_bank_ledger();
  s.book_equity[0] += 1e-3;
  CHECK_THROWS_AS(check_equity_identity(s), std::logic_error);
}

TEST_CASE("make_market validation") {
  CHECK_THROWS_AS(make_market(matrix(2, {{0, 0, 1.0}}), {5, 5}, {1, 1}, 1.0), ConfigError);
  CHECK_THROWS_AS(make_market(matrix(2, {{0, 1, -1.0}}), {5, 5}, {1, 1}, 1.0), ConfigError);
  CHECK_THROWS_AS(make_market(matrix(2, {}), {5, 5}, {1}, 1.0), ConfigError);
  CHECK_THROWS_AS(make_market(matrix(2, {}), {5, 5}, {1, 1}, 0.0), ConfigError);
  CHECK_THROWS_AS(make_market(matrix(2, {}), {1, 1}, {5, 5}, 1.0), ConfigError);
}

TEST_CASE("random ledgers: zero diagonal and identity hold under revaluation") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto x = testing::random_shock_instance(rng);
    auto s = make_market(x.a, x.ae, x.le, x.r);
    revalue(s, 1.0 + x.alpha);
    for (std::size_t i = 0; i < x.n; ++i) CHECK(s.exposure(i, i) == 0.0);
    CHECK_NOTHROW(check_equity_identity(s));
  }
}
