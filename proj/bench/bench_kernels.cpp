// Serial reference vs OpenMP brute-force kNN on random data. The parallel kernel is also
// timed on one thread, so algorithmic and threading gains show separately. Exits nonzero
// if any neighbour lists differ.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <omp.h>

#include "fmalign/kernels.hpp"
#include "fmalign/rng.hpp"

using namespace fmalign;

namespace {

Matrix random_matrix(Index rows, Index cols, std::uint64_t seed) {
  CounterStream rng(seed, 0);
  Matrix x(rows, cols);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  return x;
}

template <class F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 3;
  std::printf("threads=%d\n", omp_get_max_threads());
  const int threads = omp_get_max_threads();
  std::printf("%-10s %6s %4s %4s %10s %12s %10s %8s %s\n", "metric", "n", "d", "k", "serial_s", "parallel_1t_s",
              "parallel_s", "speedup", "equal");
  bool all_equal = true;
  for (const Index n : {500, 1000, 2000, 4000}) {
    const Matrix x = random_matrix(n, 50, static_cast<std::uint64_t>(n));
    for (const auto metric : {kernels::Metric::cosine, kernels::Metric::euclidean}) {
      kernels::NeighborLists a, b, c;
      const double ts = best_of(reps, [&] { a = kernels::knn_serial(x, 12, metric); });
      omp_set_num_threads(1);
      const double t1 = best_of(reps, [&] { c = kernels::knn_parallel(x, 12, metric); });
      omp_set_num_threads(threads);
      const double tp = best_of(reps, [&] { b = kernels::knn_parallel(x, 12, metric); });
      const bool equal = a == b && a == c;
      all_equal = all_equal && equal;
      std::printf("%-10s %6ld %4d %4d %10.4f %12.4f %10.4f %8.2f %s\n",
                  metric == kernels::Metric::cosine ? "cosine" : "euclidean", static_cast<long>(n), 50, 12, ts, t1,
                  tp, ts / tp, equal ? "yes" : "NO");
    }
  }
  return all_equal ? 0 : 1;
}
