// Serial vs OpenMP timings for the dense scoring and partition-assignment kernels.
//
//   rarec_bench [rows] [dim] [repeats]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <random>
#include <vector>

#include "rarec/kernels.hpp"

namespace {

using Clock = std::chrono::steady_clock;

template <typename Fn>
double best_ms(int repeats, Fn&& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    fn();
    const auto t1 = Clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  namespace k = rarec::kernels;
  const std::size_t rows = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 200000;
  const std::size_t dim = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 64;
  const int repeats = argc > 3 ? std::atoi(argv[3]) : 5;
  const std::size_t centroids = 64;

  std::mt19937_64 rng(7);
  std::normal_distribution<float> normal;
  std::vector<float> matrix(rows * dim), query(dim), cents(centroids * dim);
  for (auto& v : matrix) v = normal(rng);
  for (auto& v : query) v = normal(rng);
  for (auto& v : cents) v = normal(rng);

  std::vector<double> serial(rows), parallel(rows);
  std::vector<std::uint32_t> a_serial(rows), a_parallel(rows);

  std::printf("rows=%zu dim=%zu repeats=%d openmp=%s threads=%d\n", rows, dim, repeats,
              k::parallel_enabled() ? "yes" : "no", k::max_threads());

  const double s1 = best_ms(repeats, [&] { k::score_rows_serial(matrix, dim, query, serial); });
  const double p1 = best_ms(repeats, [&] { k::score_rows_parallel(matrix, dim, query, parallel); });
  const bool same1 = std::memcmp(serial.data(), parallel.data(), rows * sizeof(double)) == 0;
  std::printf("score_rows      serial %9.3f ms  parallel %9.3f ms  speedup %5.2fx  identical=%s\n", s1, p1, s1 / p1,
              same1 ? "yes" : "NO");

  const double s2 = best_ms(repeats, [&] { k::assign_max_inner_product_serial(matrix, dim, cents, a_serial); });
  const double p2 = best_ms(repeats, [&] { k::assign_max_inner_product_parallel(matrix, dim, cents, a_parallel); });
  const bool same2 = a_serial == a_parallel;
  std::printf("assign(k=%zu)   serial %9.3f ms  parallel %9.3f ms  speedup %5.2fx  identical=%s\n", centroids, s2,
              p2, s2 / p2, same2 ? "yes" : "NO");

  return same1 && same2 ? 0 : 1;
}
