#include "fmalign/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SparseCholesky>

#include "fmalign/csv.hpp"
#include "fmalign/rng.hpp"

namespace fmalign {

Matrix Embedding::rows_of(Domain d) const {
  std::vector<Index> rows;
  for (std::size_t i = 0; i < row_domain.size(); ++i)
    if (row_domain[i] == d) rows.push_back(static_cast<Index>(i));
  Matrix out(static_cast<Index>(rows.size()), coordinates.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = coordinates.row(rows[r]);
  return out;
}

Embedding make_embedding(Matrix coordinates, Index source_rows) {
  Embedding z;
  const Index rows = coordinates.rows();
  z.coordinates = std::move(coordinates);
  z.row_domain.reserve(static_cast<std::size_t>(rows));
  z.row_index.reserve(static_cast<std::size_t>(rows));
  for (Index i = 0; i < rows; ++i) {
    const bool src = i < source_rows;
    z.row_domain.push_back(src ? Domain::source : Domain::target);
    z.row_index.push_back(src ? i : i - source_rows);
  }
  return z;
}

void write_embedding_csv(const std::filesystem::path& path, const Embedding& z) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  for (Index j = 0; j < z.dimension(); ++j) out << "z_" << j << ',';
  out << "domain,row\n";
  for (Index i = 0; i < z.coordinates.rows(); ++i) {
    for (Index j = 0; j < z.dimension(); ++j) out << csv::format_double(z.coordinates(i, j)) << ',';
    out << to_string(z.row_domain[static_cast<std::size_t>(i)]) << ',' << z.row_index[static_cast<std::size_t>(i)]
        << '\n';
  }
}

Embedding read_embedding_csv(const std::filesystem::path& path) {
  const csv::Table t = csv::read_table(path);
  if (!t.header || t.header->size() < 2) throw DataError(path.string() + ": embedding CSV needs a header");
  const Index dim = static_cast<Index>(t.header->size()) - 2;
  Embedding z;
  z.coordinates.resize(static_cast<Index>(t.rows.size()), dim);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const std::string where = path.string() + ": line " + std::to_string(t.line_numbers[i]);
    if (static_cast<Index>(row.size()) != dim + 2) throw DataError(where + ": wrong number of cells");
    for (Index j = 0; j < dim; ++j) {
      const auto v = csv::parse_double(row[static_cast<std::size_t>(j)]);
      if (!v) throw DataError(where + ": not a number");
      z.coordinates(static_cast<Index>(i), j) = *v;
    }
    const std::string& tag = row[static_cast<std::size_t>(dim)];
    if (tag != "source" && tag != "target") throw DataError(where + ": unknown domain '" + tag + "'");
    z.row_domain.push_back(tag == "source" ? Domain::source : Domain::target);
    const auto idx = csv::parse_int(row[static_cast<std::size_t>(dim + 1)]);
    if (!idx) throw DataError(where + ": row index is not an integer");
    z.row_index.push_back(static_cast<Index>(*idx));
  }
  return z;
}

void apply_sign_convention(Matrix& vectors) {
  for (Index c = 0; c < vectors.cols(); ++c) {
    Index best = 0;
    double best_abs = -1.0;
    for (Index r = 0; r < vectors.rows(); ++r) {
      const double a = std::abs(vectors(r, c));
      if (a > best_abs) {
        best_abs = a;
        best = r;
      }
    }
    if (vectors.rows() > 0 && vectors(best, c) < 0.0) vectors.col(c) *= -1.0;
  }
}

namespace {

void check_symmetric(const Matrix& m) {
  if (m.rows() != m.cols()) throw DataError("operator must be square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale)
    throw DataError("operator is not symmetric (max asymmetry " + csv::format_double(asym) + ")");
}

/// Picks the ascending pairs to return given all computed pairs in ascending order.
SpectralBasis select_modes(const Vector& values, const Matrix& vectors, Index count, const EigenOptions& o,
                           Index available_total) {
  std::vector<Index> trivial, nontrivial;
  for (Index i = 0; i < values.size(); ++i) (values(i) > o.skip_tol ? nontrivial : trivial).push_back(i);
  const Index want = count == kAllModes ? static_cast<Index>(nontrivial.size()) : count;
  if (static_cast<Index>(nontrivial.size()) < want)
    throw NumericalError("requested " + std::to_string(want) + " nontrivial eigenpairs but only " +
                         std::to_string(nontrivial.size()) + " of " + std::to_string(available_total) +
                         " exceed skip_tol " + csv::format_double(o.skip_tol));
  std::vector<Index> keep;
  if (o.keep_trivial) keep = trivial;
  keep.insert(keep.end(), nontrivial.begin(), nontrivial.begin() + want);

  SpectralBasis out;
  out.values.resize(static_cast<Index>(keep.size()));
  out.vectors.resize(vectors.rows(), static_cast<Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    out.values(static_cast<Index>(j)) = values(keep[j]);
    out.vectors.col(static_cast<Index>(j)) = vectors.col(keep[j]);
  }
  apply_sign_convention(out.vectors);
  return out;
}

Matrix thin_q(const Matrix& y) {
  Eigen::HouseholderQR<Matrix> qr(y);
  return qr.householderQ() * Matrix::Identity(y.rows(), y.cols());
}

Index off_diagonal_components(const SparseMatrix& m) {
  SparseMatrix pattern = m;
  for (Index c = 0; c < pattern.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(pattern, c); it; ++it)
      it.valueRef() = it.row() == it.col() ? 0.0 : std::abs(it.value());
  return connected_components(pattern);
}

struct IterativeOutcome {
  bool converged = false;
  Vector values;
  Matrix vectors;
  Index nontrivial = 0;
};

/// Shift-invert subspace iteration with a Rayleigh-Ritz step per sweep.
IterativeOutcome subspace_iteration(const SparseMatrix& m, const Eigen::SimplicialLDLT<SparseMatrix>& factor,
                                    Index block, Index count, double skip_tol) {
  constexpr int kMaxSweeps = 2000;
  const Index n = m.rows();
  CounterStream rng(0x5eedull, static_cast<std::uint64_t>(block));
  Matrix q(n, block);
  for (Index j = 0; j < block; ++j)
    for (Index i = 0; i < n; ++i) q(i, j) = rng.normal();
  q = thin_q(q);

  IterativeOutcome out;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    q = thin_q(factor.solve(q));
    const Matrix mq = m * q;
    Matrix h = q.transpose() * mq;
    h = 0.5 * (h + h.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    const Matrix ritz = q * es.eigenvectors();
    const Matrix residual = mq * es.eigenvectors() - ritz * es.eigenvalues().asDiagonal();

    Index nontrivial = 0, needed = block;
    for (Index j = 0; j < block; ++j) {
      if (es.eigenvalues()(j) > skip_tol && ++nontrivial == count) {
        needed = j + 1;
        break;
      }
    }
    bool ok = true;
    for (Index j = 0; j < needed && ok; ++j) ok = residual.col(j).norm() < 1e-10;
    q = ritz;
    if (ok) {
      out.converged = true;
      out.values = es.eigenvalues().head(needed);
      out.vectors = ritz.leftCols(needed);
      out.nontrivial = nontrivial;
      return out;
    }
  }
  return out;
}

}  // namespace

SpectralBasis eig_smallest(const Matrix& m, Index count, const EigenOptions& options) {
  check_symmetric(m);
  if (count != kAllModes && (count < 0 || count > m.rows()))
    throw ConfigError("requested " + std::to_string(count) + " eigenpairs of a " + std::to_string(m.rows()) +
                      "-dimensional operator");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success) throw NumericalError("dense symmetric eigensolver failed");
  return select_modes(es.eigenvalues(), es.eigenvectors(), count, options, m.rows());
}

SpectralBasis eig_smallest(const SparseMatrix& m, Index count, const EigenOptions& options) {
  const Index n = m.rows();
  if (m.rows() != m.cols()) throw DataError("operator must be square");
  const bool use_dense = options.solver == EigenSolverKind::dense ||
                         (options.solver == EigenSolverKind::automatic && n <= options.dense_limit) ||
                         count == kAllModes;
  if (use_dense) return eig_smallest(Matrix(m), count, options);
  if (count < 0 || count > n)
    throw ConfigError("requested " + std::to_string(count) + " eigenpairs of a " + std::to_string(n) +
                      "-dimensional operator");
  {
    const SparseMatrix mt = m.transpose();
    const SparseMatrix diff = m - mt;
    const double asym = diff.nonZeros() ? diff.coeffs().cwiseAbs().maxCoeff() : 0.0;
    if (asym > 1e-10 * std::max(1.0, m.nonZeros() ? m.coeffs().cwiseAbs().maxCoeff() : 0.0))
      throw DataError("operator is not symmetric (max asymmetry " + csv::format_double(asym) + ")");
  }

  constexpr double kShift = 1e-3;
  SparseMatrix shifted = m;
  for (Index i = 0; i < n; ++i) shifted.coeffRef(i, i) += kShift;
  Eigen::SimplicialLDLT<SparseMatrix> factor(shifted);
  if (factor.info() != Eigen::Success) return eig_smallest(Matrix(m), count, options);

  const Index zeros = off_diagonal_components(m);
  Index block = std::min(n, count + zeros + std::max<Index>(8, count / 2));
  while (3 * block <= n) {
    IterativeOutcome r = subspace_iteration(m, factor, block, count, options.skip_tol);
    if (r.converged && r.nontrivial >= count) return select_modes(r.values, r.vectors, count, options, n);
    block *= 2;
  }
  return eig_smallest(Matrix(m), count, options);
}

double loss_intra(const Matrix& z, std::span<const SimilarityGraph> graphs) {
  Index total = 0;
  for (const auto& g : graphs) total += g.size();
  if (total != z.rows())
    throw DataError("embedding has " + std::to_string(z.rows()) + " rows but graphs cover " + std::to_string(total));
  double loss = 0.0;
  Index offset = 0;
  for (const auto& g : graphs) {
    for (Index c = 0; c < g.weights.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(g.weights, c); it; ++it)
        loss += it.value() * (z.row(offset + it.row()) - z.row(offset + it.col())).squaredNorm();
    offset += g.size();
  }
  return loss;
}

double loss_inter(const Matrix& z, const IncidenceMatrix& a) {
  if (a.entries.rows() != z.rows())
    throw DataError("embedding has " + std::to_string(z.rows()) + " rows but the incidence matrix has " +
                    std::to_string(a.entries.rows()));
  double loss = 0.0;
  for (const auto& p : a.pairs)
    loss += p.weight * (z.row(p.source) - z.row(a.source_size + p.target)).squaredNorm();
  return loss;
}

double loss_joint(const Matrix& z, const SparseMatrix& joint_laplacian) {
  if (joint_laplacian.rows() != z.rows())
    throw DataError("embedding has " + std::to_string(z.rows()) + " rows but the Laplacian is " +
                    std::to_string(joint_laplacian.rows()) + "-dimensional");
  return 2.0 * (z.transpose() * (joint_laplacian * z)).trace();
}

SparseMatrix joint_laplacian(const SimilarityGraph& g1, const SimilarityGraph& g2, const IncidenceMatrix& a) {
  const Index m1 = g1.size(), m2 = g2.size();
  if (a.source_size != m1 || a.target_size != m2)
    throw DataError("incidence matrix sizes do not match the graphs");
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(g1.laplacian.nonZeros() + g2.laplacian.nonZeros()));
  for (Index c = 0; c < g1.laplacian.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(g1.laplacian, c); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  for (Index c = 0; c < g2.laplacian.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(g2.laplacian, c); it; ++it)
      t.emplace_back(m1 + it.row(), m1 + it.col(), it.value());
  SparseMatrix l(m1 + m2, m1 + m2);
  l.setFromTriplets(t.begin(), t.end());
  return l + a.gram();
}

SmaResult sma_solve(const SimilarityGraph& g1, const SimilarityGraph& g2, const IncidenceMatrix& a, Index dim,
                    double skip_tol) {
  const Index m = g1.size() + g2.size();
  SmaResult out;
  out.degrees.resize(m);
  out.degrees << g1.regularized_degrees(), g2.regularized_degrees();
  const Vector inv_sqrt = out.degrees.array().rsqrt();

  const Matrix l = Matrix(joint_laplacian(g1, g2, a));
  Matrix n = inv_sqrt.asDiagonal() * l * inv_sqrt.asDiagonal();
  n = 0.5 * (n + n.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(n);
  if (es.info() != Eigen::Success) throw NumericalError("dense joint eigensolve failed");
  out.spectrum = es.eigenvalues();
  EigenOptions o;
  o.skip_tol = skip_tol;
  out.basis = select_modes(es.eigenvalues(), es.eigenvectors(), dim, o, m);
  Matrix z = inv_sqrt.asDiagonal() * out.basis.vectors;
  z *= out.basis.values.array().rsqrt().matrix().asDiagonal();
  out.embedding = make_embedding(std::move(z), g1.size());
  return out;
}

}  // namespace fmalign
