#pragma once

// Random generators and brute-force reference computations shared by the tests.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "doctest.h"
#include "fmalign/graph.hpp"
#include "fmalign/rng.hpp"
#include "fmalign/spectral.hpp"
#include "fmalign/types.hpp"

namespace fmtest {

using namespace fmalign;

struct Gen {
  CounterStream rng;

  explicit Gen(std::uint64_t seed) : rng(seed, 0x7e57) {}

  /// Uniform in [lo, hi].
  Index integer(Index lo, Index hi) { return lo + static_cast<Index>(rng.uniform_below(static_cast<std::uint64_t>(hi - lo + 1))); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * rng.uniform01(); }
  double normal() { return rng.normal(); }

  Matrix matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal();
    return m;
  }

  Vector vector(Index n) { return matrix(n, 1).col(0); }

  /// Orthonormal n x r columns.
  Matrix orthonormal(Index n, Index r) {
    Eigen::HouseholderQR<Matrix> qr(matrix(n, r));
    return qr.householderQ() * Matrix::Identity(n, r);
  }

  /// Symmetric nonnegative hollow weights with roughly `density` of the pairs connected.
  SparseMatrix weights(Index m, double density) {
    std::vector<Eigen::Triplet<double>> t;
    for (Index i = 0; i < m; ++i)
      for (Index j = i + 1; j < m; ++j)
        if (uniform(0.0, 1.0) < density) {
          const double w = uniform(0.05, 1.0);
          t.emplace_back(i, j, w);
          t.emplace_back(j, i, w);
        }
    SparseMatrix w(m, m);
    w.setFromTriplets(t.begin(), t.end());
    return w;
  }

  /// Random weights plus a spanning path, so the graph is connected.
  SparseMatrix connected_weights(Index m, double density) {
    Matrix w = Matrix(weights(m, density));
    for (Index i = 0; i + 1 < m; ++i)
      if (w(i, i + 1) == 0.0) w(i, i + 1) = w(i + 1, i) = uniform(0.05, 1.0);
    return w.sparseView();
  }

  std::vector<Correspondence> pairs(Index m1, Index m2, Index count) {
    std::vector<Correspondence> p;
    for (Index k = 0; k < count; ++k) p.push_back({integer(0, m1 - 1), integer(0, m2 - 1), 1.0});
    return p;
  }
};

/// Runs `body` on `cases` independently seeded generators; the case number is captured
/// so a failure names its seed.
template <class F>
void for_all(int cases, std::uint64_t seed, F&& body) {
  for (int c = 0; c < cases; ++c) {
    CAPTURE(c);
    Gen g(seed * 1000003u + static_cast<std::uint64_t>(c));
    body(g);
  }
}

inline Matrix path_weights(Index m) {
  Matrix w = Matrix::Zero(m, m);
  for (Index i = 0; i + 1 < m; ++i) w(i, i + 1) = w(i + 1, i) = 1.0;
  return w;
}

// Oracles --------------------------------------------------------------------------

/// All-pairs cosine kNN with explicit sorting, positive similarities only,
/// symmetrized by elementwise max.
inline Matrix brute_force_knn(const Matrix& x, Index k, double alpha) {
  const Index m = x.rows();
  Matrix w = Matrix::Zero(m, m);
  for (Index i = 0; i < m; ++i) {
    std::vector<std::pair<double, Index>> c;
    for (Index j = 0; j < m; ++j) {
      if (j == i) continue;
      double dot = 0.0, ni = 0.0, nj = 0.0;
      for (Index f = 0; f < x.cols(); ++f) {
        dot += x(i, f) * x(j, f);
        ni += x(i, f) * x(i, f);
        nj += x(j, f) * x(j, f);
      }
      c.emplace_back(dot / (std::sqrt(ni) * std::sqrt(nj)), j);
    }
    std::sort(c.begin(), c.end(), [](auto& a, auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    for (Index r = 0; r < k; ++r)
      if (c[static_cast<std::size_t>(r)].first > 0.0) {
        const Index j = c[static_cast<std::size_t>(r)].second;
        const double v = alpha * c[static_cast<std::size_t>(r)].first;
        w(i, j) = std::max(w(i, j), v);
        w(j, i) = std::max(w(j, i), v);
      }
  }
  return w;
}

/// Ascending eigenvalues of a dense symmetric matrix.
inline Vector dense_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// Largest principal angle between the column spans of a and b (same column count).
inline double max_principal_angle(const Matrix& a, const Matrix& b) {
  const Matrix qa = Eigen::HouseholderQR<Matrix>(a).householderQ() * Matrix::Identity(a.rows(), a.cols());
  const Matrix qb = Eigen::HouseholderQR<Matrix>(b).householderQ() * Matrix::Identity(b.rows(), b.cols());
  const Vector s = Eigen::JacobiSVD<Matrix>(qa.transpose() * qb).singularValues();
  return std::acos(std::clamp(s.minCoeff(), -1.0, 1.0));
}

/// Sum over ordered pairs of w_ij |z_i - z_j|^2 by direct double loop.
inline double pairwise_loss(const Matrix& w, const Matrix& z) {
  double s = 0.0;
  for (Index i = 0; i < w.rows(); ++i)
    for (Index j = 0; j < w.cols(); ++j) s += w(i, j) * (z.row(i) - z.row(j)).squaredNorm();
  return s;
}

/// Joint weights: within-domain blocks plus symmetric correspondence entries.
inline Matrix joint_weights(const Matrix& w1, const Matrix& w2, const std::vector<Correspondence>& pairs) {
  const Index m1 = w1.rows(), m = m1 + w2.rows();
  Matrix w = Matrix::Zero(m, m);
  w.topLeftCorner(m1, m1) = w1;
  w.bottomRightCorner(w2.rows(), w2.rows()) = w2;
  for (const auto& p : pairs) {
    w(p.source, m1 + p.target) += p.weight;
    w(m1 + p.target, p.source) += p.weight;
  }
  return w;
}

/// Generalized eigenvalues of (L* + A A^T) v = lambda D v with D from within-domain
/// degrees (+1e-8), ascending.
inline Vector generalized_joint_spectrum(const Matrix& w1, const Matrix& w2, const std::vector<Correspondence>& pairs) {
  const Matrix w = joint_weights(w1, w2, pairs);
  const Matrix l = Matrix(w.rowwise().sum().asDiagonal()) - w;
  Vector d(w.rows());
  d << w1.rowwise().sum(), w2.rowwise().sum();
  d.array() += kDegreeEpsilon;
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(l, Matrix(d.asDiagonal()), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("fmalign_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  std::filesystem::path write(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name) << text;
    return path_ / name;
  }

private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace fmtest
