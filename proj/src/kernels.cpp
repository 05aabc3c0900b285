#include "rarec/kernels.hpp"

#include <cassert>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rarec::kernels {

namespace {

constexpr std::size_t kLeafSize = 8;

double pairwise_dot(const float* a, const float* b, std::size_t n) {
  if (n <= kLeafSize) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_dot(a, b, half) + pairwise_dot(a + half, b + half, n - half);
}

std::uint32_t argmax_centroid(const float* row, std::size_t dim, std::span<const float> centroids) {
  const std::size_t count = centroids.size() / dim;
  std::uint32_t best = 0;
  double best_score = 0.0;
  for (std::size_t c = 0; c < count; ++c) {
    const double s = pairwise_dot(row, centroids.data() + c * dim, dim);
    if (c == 0 || s > best_score) {
      best = static_cast<std::uint32_t>(c);
      best_score = s;
    }
  }
  return best;
}

}  // namespace

double dot(std::span<const float> a, std::span<const float> b) {
  assert(a.size() == b.size());
  return pairwise_dot(a.data(), b.data(), a.size());
}

void score_rows_serial(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                       std::span<double> out) {
  const std::size_t rows = out.size();
  assert(matrix.size() == rows * dim && query.size() == dim);
  for (std::size_t r = 0; r < rows; ++r) out[r] = pairwise_dot(matrix.data() + r * dim, query.data(), dim);
}

void score_rows_parallel(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                         std::span<double> out) {
  const auto rows = static_cast<std::ptrdiff_t>(out.size());
  assert(matrix.size() == out.size() * dim && query.size() == dim);
  const float* m = matrix.data();
  const float* q = query.data();
  double* o = out.data();
#pragma omp parallel for schedule(static) if (rows > 2048)
  for (std::ptrdiff_t r = 0; r < rows; ++r) o[r] = pairwise_dot(m + r * dim, q, dim);
}

void score_selected_serial(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                           std::span<const std::uint32_t> rows, std::span<double> out) {
  assert(rows.size() == out.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out[i] = pairwise_dot(matrix.data() + static_cast<std::size_t>(rows[i]) * dim, query.data(), dim);
  }
}

void score_selected_parallel(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                             std::span<const std::uint32_t> rows, std::span<double> out) {
  assert(rows.size() == out.size());
  const auto n = static_cast<std::ptrdiff_t>(rows.size());
  const float* m = matrix.data();
  const float* q = query.data();
  const std::uint32_t* r = rows.data();
  double* o = out.data();
#pragma omp parallel for schedule(static) if (n > 2048)
  for (std::ptrdiff_t i = 0; i < n; ++i) o[i] = pairwise_dot(m + static_cast<std::size_t>(r[i]) * dim, q, dim);
}

void assign_max_inner_product_serial(std::span<const float> matrix, std::size_t dim,
                                     std::span<const float> centroids, std::span<std::uint32_t> out) {
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = argmax_centroid(matrix.data() + r * dim, dim, centroids);
}

void assign_max_inner_product_parallel(std::span<const float> matrix, std::size_t dim,
                                       std::span<const float> centroids, std::span<std::uint32_t> out) {
  const auto rows = static_cast<std::ptrdiff_t>(out.size());
  const float* m = matrix.data();
  std::uint32_t* o = out.data();
#pragma omp parallel for schedule(static) if (rows > 512)
  for (std::ptrdiff_t r = 0; r < rows; ++r) o[r] = argmax_centroid(m + r * dim, dim, centroids);
}

bool parallel_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace rarec::kernels
