#include <doctest.h>

#include <omp.h>

#include <random>
#include <vector>

#include "contagion/kernels.hpp"

using namespace contagion;

namespace {

std::vector<double> random_values(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1e6);
  std::vector<double> v(count);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("parallel kernels are bit-identical to the serial references") {
  for (std::size_t n : {1u, 7u, 64u, 200u}) {
    const auto m = random_values(n * n, n);
    const auto f = random_values(n, n + 1);
    const auto g = random_values(n, n + 2);
    for (int threads : {1, 2, 4}) {
      omp_set_num_threads(threads);
      CAPTURE(n);
      CAPTURE(threads);
      std::vector<double> a(n), b(n);
      kernels::row_sums(m, n, a);
      kernels::reference::row_sums(m, n, b);
      CHECK(a == b);
      kernels::column_sums(m, n, a);
      kernels::reference::column_sums(m, n, b);
      CHECK(a == b);

      CHECK(kernels::expected_density(f, g, 3e-12) ==
            kernels::reference::expected_density(f, g, 3e-12));

      auto x = m, y = m;
      kernels::scale_rows(x, n, f);
      kernels::reference::scale_rows(y, n, f);
      CHECK(x == y);
      kernels::scale_columns(x, n, g);
      kernels::reference::scale_columns(y, n, g);
      CHECK(x == y);
      kernels::scale_all(x, 1.001);
      kernels::reference::scale_all(y, 1.001);
      CHECK(x == y);
    }
  }
  omp_set_num_threads(omp_get_num_procs());
}

TEST_CASE("kernel values") {
  const std::vector<double> m = {0, 1, 2, 3, 0, 5, 6, 7, 0};
  std::vector<double> s(3);
  kernels::row_sums(m, 3, s);
  CHECK(s == std::vector<double>{3, 8, 13});
  kernels::column_sums(m, 3, s);
  CHECK(s == std::vector<double>{9, 8, 7});
  // p = t / (1 + t) with t = 1 on every off-diagonal pair
  const std::vector<double> one(3, 1.0);
  CHECK(kernels::expected_density(one, one, 1.0) == 0.5);
  CHECK(kernels::link_probability(2.0, 0.0, 5.0) == 0.0);
}
