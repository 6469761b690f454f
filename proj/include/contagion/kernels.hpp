#pragma once

#include <cmath>
#include <cstddef>
#include <span>

// Dense N x N row-major matrix kernels used by reconstruction and dynamics.
//
// The kernels in `contagion::kernels` are OpenMP-parallel; the ones in
// `contagion::kernels::reference` are plain serial loops kept for testing
// and benchmarking. Both produce bit-identical results for every thread
// count: reductions are split into per-row (or per-column) partials that
// are always accumulated in index order.

namespace contagion::kernels {

// Link probability of the fitness model for a fitness product t = z*x*y.
// An infinite z saturates every pair with positive product.
inline double link_probability(double z, double x, double y) noexcept {
  const double product = x * y;
  if (product <= 0.0) return 0.0;
  if (std::isinf(z)) return 1.0;
  const double t = z * product;
  return t / (1.0 + t);
}

// Mean of p_ij over ordered pairs i != j.
double expected_density(std::span<const double> out_fitness,
                        std::span<const double> in_fitness, double z);

// Row sums and column sums of an n x n matrix.
void row_sums(std::span<const double> matrix, std::size_t n,
              std::span<double> sums);
void column_sums(std::span<const double> matrix, std::size_t n,
                 std::span<double> sums);

// Multiplies row i by factors[i] (rows) or column j by factors[j] (columns).
void scale_rows(std::span<double> matrix, std::size_t n,
                std::span<const double> factors);
void scale_columns(std::span<double> matrix, std::size_t n,
                   std::span<const double> factors);

// matrix *= ratio
void scale_all(std::span<double> matrix, double ratio);

namespace reference {

double expected_density(std::span<const double> out_fitness,
                        std::span<const double> in_fitness, double z);
void row_sums(std::span<const double> matrix, std::size_t n,
              std::span<double> sums);
void column_sums(std::span<const double> matrix, std::size_t n,
                 std::span<double> sums);
void scale_rows(std::span<double> matrix, std::size_t n,
                std::span<const double> factors);
void scale_columns(std::span<double> matrix, std::size_t n,
                   std::span<const double> factors);
void scale_all(std::span<double> matrix, double ratio);

}  // namespace reference

}  // namespace contagion::kernels
