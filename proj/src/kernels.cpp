#include "fmalign/kernels.hpp"

#include <algorithm>
#include <cmath>

#include <omp.h>

namespace fmalign::kernels {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline double dot(const double* a, const double* b, Index n) {
  double s = 0.0;
  for (Index f = 0; f < n; ++f) s += a[f] * b[f];
  return s;
}

inline double squared_distance(const double* a, const double* b, Index n) {
  double s = 0.0;
  for (Index f = 0; f < n; ++f) {
    const double d = a[f] - b[f];
    s += d * d;
  }
  return s;
}

struct Scorer {
  const RowMajor& rows;
  const Vector& norms;
  Metric metric;

  double operator()(Index i, Index j) const {
    const Index n = rows.cols();
    if (metric == Metric::cosine) return dot(rows.row(i).data(), rows.row(j).data(), n) / (norms(i) * norms(j));
    return squared_distance(rows.row(i).data(), rows.row(j).data(), n);
  }
};

auto better(Metric metric) {
  return [metric](const Neighbor& a, const Neighbor& b) {
    if (a.score != b.score) return metric == Metric::cosine ? a.score > b.score : a.score < b.score;
    return a.index < b.index;
  };
}

void check_args(const Matrix& x, Index k) {
  if (k < 1 || k >= x.rows())
    throw ConfigError("neighbour count k=" + std::to_string(k) + " must satisfy 1 <= k < " +
                      std::to_string(x.rows()));
}

double norm_of(const double* a, Index n) { return std::sqrt(dot(a, a, n)); }

}  // namespace

Vector row_norms(const Matrix& x) {
  const RowMajor rows = x;
  Vector norms(x.rows());
  for (Index i = 0; i < x.rows(); ++i) norms(i) = norm_of(rows.row(i).data(), rows.cols());
  return norms;
}

NeighborLists knn_parallel(const Matrix& x, Index k, Metric metric) {
  check_args(x, k);
  const RowMajor rows = x;
  const Index m = rows.rows();
  Vector norms(m);
  for (Index i = 0; i < m; ++i) norms(i) = norm_of(rows.row(i).data(), rows.cols());
  const Scorer score{rows, norms, metric};
  const auto cmp = better(metric);

  NeighborLists out(static_cast<std::size_t>(m));
#pragma omp parallel
  {
    std::vector<Neighbor> candidates;
    candidates.reserve(static_cast<std::size_t>(m));
#pragma omp for schedule(dynamic, 16)
    for (Index i = 0; i < m; ++i) {
      candidates.clear();
      for (Index j = 0; j < m; ++j)
        if (j != i) candidates.push_back({j, score(i, j)});
      std::partial_sort(candidates.begin(), candidates.begin() + k, candidates.end(), cmp);
      out[static_cast<std::size_t>(i)].assign(candidates.begin(), candidates.begin() + k);
    }
  }
  return out;
}

NeighborLists knn_serial(const Matrix& x, Index k, Metric metric) {
  check_args(x, k);
  const RowMajor rows = x;
  const Index m = rows.rows();
  Vector norms(m);
  for (Index i = 0; i < m; ++i) norms(i) = norm_of(rows.row(i).data(), rows.cols());
  const Scorer score{rows, norms, metric};

  // Full score table, then a complete sort of every row.
  Matrix table(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j) table(i, j) = i == j ? 0.0 : score(i, j);

  NeighborLists out(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    std::vector<Neighbor> all;
    for (Index j = 0; j < m; ++j)
      if (j != i) all.push_back({j, table(i, j)});
    std::stable_sort(all.begin(), all.end(), better(metric));
    all.resize(static_cast<std::size_t>(k));
    out[static_cast<std::size_t>(i)] = std::move(all);
  }
  return out;
}

std::vector<Neighbor> knn_query(const Matrix& x, const Vector& query, Index k, Metric metric) {
  if (k < 1 || k > x.rows())
    throw ConfigError("neighbour count k=" + std::to_string(k) + " must satisfy 1 <= k <= " +
                      std::to_string(x.rows()));
  if (query.size() != x.cols())
    throw DataError("query has " + std::to_string(query.size()) + " features, expected " +
                    std::to_string(x.cols()));
  const RowMajor rows = x;
  const Index n = rows.cols();
  const double qnorm = norm_of(query.data(), n);
  std::vector<Neighbor> all;
  all.reserve(static_cast<std::size_t>(rows.rows()));
  for (Index j = 0; j < rows.rows(); ++j) {
    const double* r = rows.row(j).data();
    const double s = metric == Metric::cosine ? dot(query.data(), r, n) / (qnorm * norm_of(r, n))
                                              : squared_distance(query.data(), r, n);
    all.push_back({j, s});
  }
  std::partial_sort(all.begin(), all.begin() + k, all.end(), better(metric));
  all.resize(static_cast<std::size_t>(k));
  return all;
}

}  // namespace fmalign::kernels
