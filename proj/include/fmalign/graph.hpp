#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "fmalign/kernels.hpp"
#include "fmalign/types.hpp"

namespace fmalign {

/// Added to every degree before forming D^{-1/2}.
inline constexpr double kDegreeEpsilon = 1e-8;

/// Within-domain similarity graph: symmetric nonnegative W with zero diagonal,
/// degrees D_ii = sum_j W_ij and Laplacian L = D - W.
struct SimilarityGraph {
  SparseMatrix weights;
  Vector degrees;
  SparseMatrix laplacian;
  /// Heat-kernel bandwidth sigma^2 (0 for cosine graphs).
  double heat_sigma2 = 0.0;

  [[nodiscard]] Index size() const { return weights.rows(); }
  /// D_ii + epsilon.
  [[nodiscard]] Vector regularized_degrees(double epsilon = kDegreeEpsilon) const;
};

enum class SimilarityKind : std::uint8_t {
  cosine,  ///< neighbours and weights from cosine similarity (negative values dropped)
  heat,    ///< Euclidean neighbours, weight exp(-d^2 / sigma^2), sigma = median k-th distance
};

struct GraphOptions {
  Index k = 12;
  double alpha = 0.2;
  SimilarityKind similarity = SimilarityKind::cosine;
};

/// Union-symmetrized k-nearest-neighbour graph with edge weights alpha * sim.
SimilarityGraph build_knn_graph(const Matrix& x, const GraphOptions& options);

/// Wraps an explicit weight matrix; throws unless it is symmetric, nonnegative and hollow.
SimilarityGraph graph_from_weights(SparseMatrix weights);

/// Number of connected components of the graph with positive-weight edges.
Index connected_components(const SparseMatrix& weights);

/// D^{-1/2} L D^{-1/2} with D regularized by `epsilon`; eigenvalues lie in [0, 2].
SparseMatrix normalized_operator(const SimilarityGraph& g, double epsilon = kDegreeEpsilon);

struct Correspondence {
  Index source;
  Index target;
  double weight = 1.0;

  friend bool operator==(const Correspondence&, const Correspondence&) = default;
};

/// Signed cross-domain incidence matrix, one column per correspondence:
/// +sqrt(w) at row `source`, -sqrt(w) at row `m1 + target`.
struct IncidenceMatrix {
  SparseMatrix entries;
  std::vector<Correspondence> pairs;
  Index source_size = 0;
  Index target_size = 0;

  [[nodiscard]] Index columns() const { return entries.cols(); }
  /// A A^T, the Laplacian of the correspondence edges.
  [[nodiscard]] SparseMatrix gram() const;
};

IncidenceMatrix build_incidence(const std::vector<Correspondence>& pairs, Index source_size, Index target_size);

/// (sample index, label) pairs for the labeled subset of one domain.
using LabeledIndices = std::vector<std::pair<Index, Label>>;

/// One unit-weight pair per same-label (source, target) combination, source-index major.
std::vector<Correspondence> correspondences_from_labels(const LabeledIndices& source, const LabeledIndices& target);

/// CSV "src_index,tgt_index[,weight]" with an optional header.
std::vector<Correspondence> load_correspondences(const std::filesystem::path& path);
void save_correspondences(const std::filesystem::path& path, const std::vector<Correspondence>& pairs);

}  // namespace fmalign
