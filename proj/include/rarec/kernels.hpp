#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

// Dense scoring kernels over a row-major float matrix.
//
// Every kernel has a serial reference and an OpenMP version. Both evaluate
// each dot product with the same fixed pairwise summation in double, so the
// parallel results are bit-identical to the serial ones; only the row loop is
// split across threads.
namespace rarec::kernels {

// Pairwise sum of a[i]*b[i] in index order: blocks of up to 8 terms are summed
// left to right, larger ranges split at n/2 and the halves are added.
double dot(std::span<const float> a, std::span<const float> b);

void score_rows_serial(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                       std::span<double> out);
void score_rows_parallel(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                         std::span<double> out);

// Scores only the listed rows; out[i] belongs to rows[i].
void score_selected_serial(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                           std::span<const std::uint32_t> rows, std::span<double> out);
void score_selected_parallel(std::span<const float> matrix, std::size_t dim, std::span<const float> query,
                             std::span<const std::uint32_t> rows, std::span<double> out);

// For every row, the index of the centroid with the largest inner product
// (lowest index wins ties).
void assign_max_inner_product_serial(std::span<const float> matrix, std::size_t dim,
                                     std::span<const float> centroids, std::span<std::uint32_t> out);
void assign_max_inner_product_parallel(std::span<const float> matrix, std::size_t dim,
                                       std::span<const float> centroids, std::span<std::uint32_t> out);

bool parallel_enabled();
int max_threads();

}  // namespace rarec::kernels
