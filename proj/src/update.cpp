#include "fmalign/update.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace fmalign {

namespace {

struct Complement {
  Matrix basis;       // orthonormal, orthogonal to the existing basis
  Matrix projection;  // existing^T * update
  Matrix residual;    // basis^T * (update - existing * projection)
};

/// Orthonormal basis for the part of `update` outside span(`existing`).
Complement orthogonal_complement(const Matrix& existing, const Matrix& update) {
  Complement c;
  c.projection = existing.transpose() * update;
  Matrix rest = update - existing * c.projection;
  // Second Gram-Schmidt pass against cancellation.
  const Matrix again = existing.transpose() * rest;
  rest -= existing * again;
  c.projection += again;

  // Column pivoting makes |R_ii| non-increasing; directions below the tolerance are
  // rounding noise of the projection, not new rank.
  Eigen::ColPivHouseholderQR<Matrix> qr(rest);
  const double tol = 1e-11 * update.norm();
  Index rank = 0;
  const Index diag = std::min(rest.rows(), rest.cols());
  while (rank < diag && std::abs(qr.matrixQR()(rank, rank)) > tol) ++rank;
  Matrix q = qr.householderQ() * Matrix::Identity(rest.rows(), rank);
  if (rank > 0) {
    q -= existing * (existing.transpose() * q);
    q = Eigen::HouseholderQR<Matrix>(q).householderQ() * Matrix::Identity(q.rows(), rank);
  }
  c.basis = std::move(q);
  c.residual = c.basis.transpose() * rest;
  return c;
}

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericalError(std::string("non-finite values in ") + what);
}

Matrix reorthonormalize(const Matrix& q) {
  Eigen::HouseholderQR<Matrix> qr(q);
  Matrix out = qr.householderQ() * Matrix::Identity(q.rows(), q.cols());
  // Keep each column's orientation: R's diagonal sign tells whether it was flipped.
  const Matrix& r = qr.matrixQR();
  for (Index j = 0; j < out.cols(); ++j)
    if (r(j, j) < 0.0) out.col(j) *= -1.0;
  return out;
}

}  // namespace

double orthonormality_error(const Matrix& q) {
  if (q.cols() == 0) return 0.0;
  return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff();
}

SvdTriple svd_update(const SvdTriple& t, const Matrix& a, const Matrix& b) {
  const Index rank = t.singular.size();
  if (t.left.cols() != rank || t.right.cols() != rank)
    throw DataError("SVD triple has inconsistent ranks");
  if (a.rows() != t.left.rows())
    throw DataError("A has " + std::to_string(a.rows()) + " rows, U has " + std::to_string(t.left.rows()));
  if (b.rows() != t.right.rows())
    throw DataError("B has " + std::to_string(b.rows()) + " rows, V has " + std::to_string(t.right.rows()));
  if (a.cols() != b.cols()) throw DataError("A and B must have the same number of columns");

  const Complement left = orthogonal_complement(t.left, a);
  const Complement right = orthogonal_complement(t.right, b);
  if (rank + left.basis.cols() > t.left.rows() || rank + right.basis.cols() > t.right.rows())
    throw NumericalError("rank growth exceeds the available dimension");

  const Index kl = rank + left.basis.cols();
  const Index kr = rank + right.basis.cols();
  // Core matrix: [S 0; 0 0] + [U^T A; R_A][V^T B; R_B]^T.
  Matrix stacked_a(kl, a.cols()), stacked_b(kr, b.cols());
  stacked_a << left.projection, left.residual;
  stacked_b << right.projection, right.residual;
  Matrix core = stacked_a * stacked_b.transpose();
  core.topLeftCorner(rank, rank).diagonal() += t.singular;
  require_finite(core, "SVD update core matrix");

  Eigen::JacobiSVD<Matrix> svd(core, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Matrix ul(t.left.rows(), kl), vr(t.right.rows(), kr);
  ul << t.left, left.basis;
  vr << t.right, right.basis;

  SvdTriple out;
  out.left = ul * svd.matrixU();
  out.singular = svd.singularValues();
  out.right = vr * svd.matrixV();
  require_finite(out.left, "updated left vectors");
  require_finite(out.right, "updated right vectors");
  return out;
}

namespace {

SpectralBasis rotate_by_core(const SpectralBasis& phi, const Matrix& projected) {
  Matrix core = projected * projected.transpose();
  core.diagonal() += phi.values;
  require_finite(core, "block update core matrix");

  Eigen::SelfAdjointEigenSolver<Matrix> es(core);
  if (es.info() != Eigen::Success) throw NumericalError("block update eigensolve failed");
  SpectralBasis out;
  out.values = es.eigenvalues();
  out.vectors = phi.vectors * es.eigenvectors();
  require_finite(out.vectors, "updated eigenvectors");
  if (orthonormality_error(out.vectors) > 1e-8) out.vectors = reorthonormalize(out.vectors);
  apply_sign_convention(out.vectors);
  return out;
}

void check_update_rows(const SpectralBasis& phi, Index rows) {
  if (rows != phi.vectors.rows())
    throw DataError("update has " + std::to_string(rows) + " rows, basis has " + std::to_string(phi.vectors.rows()));
}

}  // namespace

SpectralBasis block_svd_update(const SpectralBasis& phi, const Matrix& a) {
  check_update_rows(phi, a.rows());
  return rotate_by_core(phi, phi.vectors.transpose() * a);
}

SpectralBasis block_svd_update(const SpectralBasis& phi, const SparseMatrix& a) {
  check_update_rows(phi, a.rows());
  return rotate_by_core(phi, (SparseMatrix(a.transpose()) * phi.vectors).transpose());
}

double projection_defect(const SpectralBasis& phi, const Matrix& a) {
  if (a.rows() != phi.vectors.rows()) throw DataError("projection_defect: shape mismatch");
  const Matrix residual = a - phi.vectors * (phi.vectors.transpose() * a);
  return residual.norm() / std::max(a.norm(), std::numeric_limits<double>::min());
}

}  // namespace fmalign
