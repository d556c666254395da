#pragma once

#include "fmalign/spectral.hpp"
#include "fmalign/types.hpp"

namespace fmalign {

/// Thin singular value decomposition U diag(S) V^T, S descending.
struct SvdTriple {
  Matrix left;
  Vector singular;
  Matrix right;

  [[nodiscard]] Matrix reconstruct() const { return left * singular.asDiagonal() * right.transpose(); }
};

/// Returns the SVD of U S V^T + A B^T without forming either matrix. The left and right
/// bases are extended by orthonormal complements of A against U and of B against V; the
/// core SVD is of size (rank U + rank of the complement).
SvdTriple svd_update(const SvdTriple& t, const Matrix& a, const Matrix& b);

/// Eigendecomposition of Phi Lambda Phi^T + A A^T restricted to span(Phi): solves
/// Lambda + (Phi^T A)(Phi^T A)^T and rotates Phi by its eigenvectors. Output is ascending
/// with the sign convention applied.
SpectralBasis block_svd_update(const SpectralBasis& phi, const Matrix& a);
SpectralBasis block_svd_update(const SpectralBasis& phi, const SparseMatrix& a);

/// ||A - Phi Phi^T A||_F / max(||A||_F, tiny): the share of the update outside span(Phi).
double projection_defect(const SpectralBasis& phi, const Matrix& a);

/// max |Q^T Q - I|.
double orthonormality_error(const Matrix& q);

}  // namespace fmalign
