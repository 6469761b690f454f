#include "contagion/kernels.hpp"

#include <vector>

namespace contagion::kernels {

namespace {

// Below this many matrix entries a parallel region costs more than it saves.
constexpr std::size_t kParallelThreshold = 64 * 64;

double density_row(std::span<const double> out_fitness,
                   std::span<const double> in_fitness, double z,
                   std::size_t i) {
  double acc = 0.0;
  const std::size_t n = in_fitness.size();
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    acc += link_probability(z, out_fitness[i], in_fitness[j]);
  }
  return acc;
}

double pair_count(std::size_t n) {
  return static_cast<double>(n) * static_cast<double>(n - 1);
}

}  // namespace

double expected_density(std::span<const double> out_fitness,
                        std::span<const double> in_fitness, double z) {
  const std::size_t n = out_fitness.size();
  if (n < 2) return 0.0;
  std::vector<double> partial(n);
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n * n >= kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    partial[i] = density_row(out_fitness, in_fitness, z,
                             static_cast<std::size_t>(i));
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total / pair_count(n);
}

void row_sums(std::span<const double> matrix, std::size_t n,
              std::span<double> sums) {
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n * n >= kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const double* row = matrix.data() + i * rows;
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += row[j];
    sums[i] = acc;
  }
}

void column_sums(std::span<const double> matrix, std::size_t n,
                 std::span<double> sums) {
  const auto cols = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n * n >= kParallelThreshold)
  for (std::ptrdiff_t j = 0; j < cols; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += matrix[i * n + j];
    sums[j] = acc;
  }
}

void scale_rows(std::span<double> matrix, std::size_t n,
                std::span<const double> factors) {
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n * n >= kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    double* row = matrix.data() + i * rows;
    const double f = factors[i];
    for (std::size_t j = 0; j < n; ++j) row[j] *= f;
  }
}

void scale_columns(std::span<double> matrix, std::size_t n,
                   std::span<const double> factors) {
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n * n >= kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    double* row = matrix.data() + i * rows;
    for (std::size_t j = 0; j < n; ++j) row[j] *= factors[j];
  }
}

void scale_all(std::span<double> matrix, double ratio) {
  const auto size = static_cast<std::ptrdiff_t>(matrix.size());
#pragma omp parallel for simd schedule(static) if (matrix.size() >= kParallelThreshold * 16)
  for (std::ptrdiff_t k = 0; k < size; ++k) matrix[k] *= ratio;
}

namespace reference {

double expected_density(std::span<const double> out_fitness,
                        std::span<const double> in_fitness, double z) {
  const std::size_t n = out_fitness.size();
  if (n < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += density_row(out_fitness, in_fitness, z, i);
  }
  return total / pair_count(n);
}

void row_sums(std::span<const double> matrix, std::size_t n,
              std::span<double> sums) {
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += matrix[i * n + j];
    sums[i] = acc;
  }
}

void column_sums(std::span<const double> matrix, std::size_t n,
                 std::span<double> sums) {
  for (std::size_t j = 0; j < n; ++j) sums[j] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) sums[j] += matrix[i * n + j];
  }
}

void scale_rows(std::span<double> matrix, std::size_t n,
                std::span<const double> factors) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) matrix[i * n + j] *= factors[i];
  }
}

void scale_columns(std::span<double> matrix, std::size_t n,
                   std::span<const double> factors) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) matrix[i * n + j] *= factors[j];
  }
}

void scale_all(std::span<double> matrix, double ratio) {
  for (double& v : matrix) v *= ratio;
}

}  // namespace reference

}  // namespace contagion::kernels
