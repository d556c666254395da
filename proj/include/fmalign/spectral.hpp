#pragma once

#include <span>
#include <vector>

#include "fmalign/graph.hpp"
#include "fmalign/types.hpp"

namespace fmalign {

/// Default threshold below which an eigenvalue counts as a trivial (zero) mode.
inline constexpr double kSkipTol = 1e-9;

/// Orthonormal eigenvector columns with ascending eigenvalues.
struct SpectralBasis {
  Matrix vectors;
  Vector values;

  [[nodiscard]] Index modes() const { return values.size(); }
};

/// Per-row coordinates in the joint space, tagged with the row's domain and its
/// index within that domain.
struct Embedding {
  Matrix coordinates;
  std::vector<Domain> row_domain;
  std::vector<Index> row_index;

  [[nodiscard]] Index dimension() const { return coordinates.cols(); }
  /// Rows belonging to `d`, in their original order.
  [[nodiscard]] Matrix rows_of(Domain d) const;
};

/// Rows [0, m1) tagged source, the remaining rows tagged target.
Embedding make_embedding(Matrix coordinates, Index source_rows);

void write_embedding_csv(const std::filesystem::path& path, const Embedding& z);
Embedding read_embedding_csv(const std::filesystem::path& path);

/// Flips each column so that its largest-magnitude entry is positive (first index on ties).
void apply_sign_convention(Matrix& vectors);

enum class EigenSolverKind : std::uint8_t { automatic, dense, iterative };

struct EigenOptions {
  double skip_tol = kSkipTol;
  EigenSolverKind solver = EigenSolverKind::automatic;
  /// Operators up to this size use the dense solver under `automatic`.
  Index dense_limit = 1500;
  /// Also return the trivial modes (eigenvalue <= skip_tol) found below the requested ones.
  bool keep_trivial = false;
};

/// The `count` smallest eigenpairs with eigenvalue > skip_tol, ascending, sign convention
/// applied. With `keep_trivial`, the trivial modes are prepended. Throws NumericalError
/// when fewer than `count` nontrivial pairs exist.
SpectralBasis eig_smallest(const Matrix& m, Index count, const EigenOptions& options = {});
SpectralBasis eig_smallest(const SparseMatrix& m, Index count, const EigenOptions& options = {});

/// Requests every nontrivial mode.
inline constexpr Index kAllModes = -1;

/// Sum over both domains and all ordered pairs of W_ij |z_i - z_j|^2. Rows of `z` are
/// consumed graph by graph.
double loss_intra(const Matrix& z, std::span<const SimilarityGraph> graphs);

/// Sum over correspondences of w |z_src - z_tgt|^2.
double loss_inter(const Matrix& z, const IncidenceMatrix& a);

/// 2 tr(Z^T L Z), the ordered-pair sum over the joint weight matrix. Equals
/// loss_intra + 2 loss_inter when L = L* + A A^T.
double loss_joint(const Matrix& z, const SparseMatrix& joint_laplacian);

/// L* + A A^T.
SparseMatrix joint_laplacian(const SimilarityGraph& g1, const SimilarityGraph& g2, const IncidenceMatrix& a);

struct SmaResult {
  Embedding embedding;
  /// Retained eigenpairs of the joint normalized operator.
  SpectralBasis basis;
  /// Full ascending spectrum of the joint normalized operator.
  Vector spectrum;
  /// Regularized joint degrees used in D^{-1/2}.
  Vector degrees;
};

/// Single-step dense solve of D^{-1/2}(L* + A A^T)D^{-1/2}; Z = D^{-1/2} Phi Lambda^{-1/2}.
/// Degrees come from the within-domain graphs only. `dim == kAllModes` keeps every
/// nontrivial mode.
SmaResult sma_solve(const SimilarityGraph& g1, const SimilarityGraph& g2, const IncidenceMatrix& a, Index dim,
                    double skip_tol = kSkipTol);

}  // namespace fmalign
