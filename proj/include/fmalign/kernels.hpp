#pragma once

#include <vector>

#include "fmalign/types.hpp"

// Brute-force nearest-neighbour kernels. Each kernel exists in an OpenMP-parallel form
// used by the library and a serial reference form kept for tests and benchmarks; both
// evaluate every pairwise score with identical arithmetic, so their outputs are equal
// bit for bit.

namespace fmalign::kernels {

enum class Metric : std::uint8_t {
  cosine,     ///< larger score is closer
  euclidean,  ///< score is the squared distance; smaller is closer
};

struct Neighbor {
  Index index;
  double score;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Directed neighbour lists: entry i holds the k best j != i, best first, ties by
/// smaller index. For the cosine metric rows must be nonzero.
using NeighborLists = std::vector<std::vector<Neighbor>>;

NeighborLists knn_parallel(const Matrix& x, Index k, Metric metric);
NeighborLists knn_serial(const Matrix& x, Index k, Metric metric);

/// Neighbours of an out-of-sample query among the rows of `x`.
std::vector<Neighbor> knn_query(const Matrix& x, const Vector& query, Index k, Metric metric);

/// Euclidean norms of the rows, accumulated in index order.
Vector row_norms(const Matrix& x);

}  // namespace fmalign::kernels
