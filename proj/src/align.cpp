#include "fmalign/align.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "fmalign/csv.hpp"

namespace fmalign {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::size_t slot(Domain d) { return static_cast<std::size_t>(d); }

/// (X^T D X)^{-1/2}, treating eigenvalues below 1e-8 of the largest as zero.
Matrix whitening_transform(const Matrix& x, const Vector& degrees) {
  Matrix gram = x.transpose() * degrees.asDiagonal() * x;
  gram = 0.5 * (gram + gram.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition of X^T D X failed");
  const Vector& mu = es.eigenvalues();
  const double floor = 1e-8 * std::max(mu.maxCoeff(), 0.0);
  Vector inv_sqrt(mu.size());
  for (Index i = 0; i < mu.size(); ++i) inv_sqrt(i) = mu(i) > floor && mu(i) > 0.0 ? 1.0 / std::sqrt(mu(i)) : 0.0;
  return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
}

Matrix block_diagonal(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

/// Columns of the updated basis above skip_tol, at most `count` (kAllModes: all).
SpectralBasis retain(const SpectralBasis& updated, Index count, double skip_tol) {
  std::vector<Index> keep;
  for (Index j = 0; j < updated.modes(); ++j)
    if (updated.values(j) > skip_tol) keep.push_back(j);
  const Index available = static_cast<Index>(keep.size());
  const Index want = count == kAllModes ? available : count;
  if (available < want)
    throw NumericalError("post-update basis has " + std::to_string(available) + " nontrivial modes but " +
                         std::to_string(want) + " were requested (deficit " + std::to_string(want - available) + ")");
  SpectralBasis out;
  out.values.resize(want);
  out.vectors.resize(updated.vectors.rows(), want);
  for (Index j = 0; j < want; ++j) {
    out.values(j) = updated.values(keep[static_cast<std::size_t>(j)]);
    out.vectors.col(j) = updated.vectors.col(keep[static_cast<std::size_t>(j)]);
  }
  return out;
}

/// Orthonormal null space of the joint normalized operator: sqrt(D) restricted to each
/// component of the within-domain graphs joined by the correspondences.
Matrix joint_zero_modes(const SimilarityGraph& g1, const SimilarityGraph& g2,
                        const std::vector<Correspondence>& pairs, const Vector& sqrt_degrees) {
  const Index m1 = g1.size(), m = m1 + g2.size();
  std::vector<Eigen::Triplet<double>> t;
  for (const auto* g : {&g1, &g2}) {
    const Index offset = g == &g1 ? 0 : m1;
    for (Index c = 0; c < g->weights.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(g->weights, c); it; ++it)
        t.emplace_back(offset + it.row(), offset + it.col(), it.value());
  }
  for (const auto& p : pairs) {
    t.emplace_back(p.source, m1 + p.target, p.weight);
    t.emplace_back(m1 + p.target, p.source, p.weight);
  }
  SparseMatrix w(m, m);
  w.setFromTriplets(t.begin(), t.end());

  std::vector<Index> parent(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) parent[static_cast<std::size_t>(i)] = i;
  auto find = [&](Index a) {
    while (parent[static_cast<std::size_t>(a)] != a) a = parent[static_cast<std::size_t>(a)] =
                                                         parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
    return a;
  };
  for (Index c = 0; c < w.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(w, c); it; ++it)
      if (it.value() > 0.0) {
        const Index a = find(it.row()), b = find(it.col());
        if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
      }
  std::vector<Index> column(static_cast<std::size_t>(m), -1);
  Index count = 0;
  for (Index i = 0; i < m; ++i)
    if (find(i) == i) column[static_cast<std::size_t>(i)] = count++;
  Matrix z = Matrix::Zero(m, count);
  for (Index i = 0; i < m; ++i) z(i, column[static_cast<std::size_t>(find(i))]) = sqrt_degrees(i);
  for (Index c = 0; c < count; ++c) z.col(c).normalize();
  return z;
}

void check_pair_ranges(const std::vector<Correspondence>& pairs, Index m1, Index m2) {
  // build_incidence reports the offending pair.
  (void)build_incidence(pairs, m1, m2);
}

}  // namespace

const char* to_string(AlignmentMode mode) { return mode == AlignmentMode::instance ? "instance" : "feature"; }

AlignmentMode parse_alignment_mode(const std::string& text) {
  if (text == "instance") return AlignmentMode::instance;
  if (text == "feature") return AlignmentMode::feature;
  throw ConfigError("mode must be 'instance' or 'feature', got '" + text + "'");
}

const char* to_string(SimilarityKind kind) { return kind == SimilarityKind::cosine ? "cosine" : "heat"; }

SimilarityKind parse_similarity(const std::string& text) {
  if (text == "cosine") return SimilarityKind::cosine;
  if (text == "heat") return SimilarityKind::heat;
  throw ConfigError("similarity must be 'cosine' or 'heat', got '" + text + "'");
}

void AlignmentConfig::validate() const {
  if (dim < 2 || dim % 2 != 0)
    throw ConfigError("embedding dimension must be even and >= 2 (dim/2 modes per domain), got " +
                      std::to_string(dim));
  if (k < 1) throw ConfigError("neighbour count k must be >= 1, got " + std::to_string(k));
  if (!(alpha > 0.0)) throw ConfigError("edge weight coefficient alpha must be positive");
  if (!(skip_tol >= 0.0)) throw ConfigError("skip_tol must be >= 0");
  if (dense_limit < 1) throw ConfigError("dense_limit must be >= 1");
}

EigenOptions AlignmentConfig::eigen_options() const {
  EigenOptions o;
  o.skip_tol = skip_tol;
  o.dense_limit = dense_limit;
  o.keep_trivial = carry_trivial_modes;
  return o;
}

Index AlignmentModel::rows(Domain d) const {
  Index n = 0;
  for (const Domain r : embedding.row_domain) n += r == d ? 1 : 0;
  return n;
}

Index AlignmentModel::features(Domain d) const { return standardizers[slot(d)].mean.size(); }

FilteredDomain filter_domain(const SimilarityGraph& graph, const Matrix& features, const AlignmentConfig& cfg,
                             Index modes) {
  FilteredDomain out;
  out.graph = graph;
  out.features = features;
  out.degrees = graph.regularized_degrees();
  const auto start = Clock::now();
  if (cfg.mode == AlignmentMode::instance) {
    out.basis = eig_smallest(normalized_operator(graph), modes, cfg.eigen_options());
  } else {
    if (features.rows() != graph.size())
      throw DataError("feature matrix has " + std::to_string(features.rows()) + " rows but the graph has " +
                      std::to_string(graph.size()) + " nodes");
    out.whitening = whitening_transform(features, out.degrees);
    const Matrix xt = features * out.whitening;
    Matrix m = xt.transpose() * (graph.laplacian * xt);
    m = 0.5 * (m + m.transpose()).eval();
    out.basis = eig_smallest(m, modes, cfg.eigen_options());
  }
  out.times.eigensolve = seconds_since(start);
  return out;
}

FilteredDomain filter_domain(const DataMatrix& x, const AlignmentConfig& cfg, Index modes) {
  cfg.validate();
  x.validate();
  const Standardizer s = cfg.standardize ? fit_standardizer(x.values) : Standardizer::identity(x.features());
  Matrix features = s.apply(x.values);
  const auto start = Clock::now();
  const SimilarityGraph graph = build_knn_graph(features, cfg.graph_options());
  const double graph_time = seconds_since(start);
  FilteredDomain out = filter_domain(graph, features, cfg, modes);
  out.standardizer = s;
  out.times.graph = graph_time;
  return out;
}

AlignmentModel fuse(const FilteredDomain& source, const FilteredDomain& target,
                    const std::vector<Correspondence>& pairs, const AlignmentConfig& cfg, Index output_dim) {
  const Index m1 = source.graph.size(), m2 = target.graph.size();
  const IncidenceMatrix incidence = build_incidence(pairs, m1, m2);
  const auto start = Clock::now();

  AlignmentModel model;
  model.config = cfg;
  model.standardizers = {source.standardizer, target.standardizer};
  model.heat_sigma2 = {source.graph.heat_sigma2, target.graph.heat_sigma2};

  SpectralBasis joint;
  joint.vectors = block_diagonal(source.basis.vectors, target.basis.vectors);
  joint.values.resize(source.basis.modes() + target.basis.modes());
  joint.values << source.basis.values, target.basis.values;

  SparseMatrix scaled;  // correspondence update expressed in the basis' row space
  if (cfg.mode == AlignmentMode::instance) {
    Vector inv_sqrt(m1 + m2);
    inv_sqrt << source.degrees.array().rsqrt(), target.degrees.array().rsqrt();
    scaled = inv_sqrt.asDiagonal() * incidence.entries;
  } else {
    // (blockdiag(X1 T1, X2 T2))^T A, one column per pair.
    const Matrix xt1 = source.features * source.whitening;
    const Matrix xt2 = target.features * target.whitening;
    const Index f1 = xt1.cols(), f2 = xt2.cols();
    Matrix dense(f1 + f2, static_cast<Index>(pairs.size()));
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const double s = std::sqrt(pairs[k].weight);
      dense.col(static_cast<Index>(k)) << s * xt1.row(pairs[k].source).transpose(),
          -s * xt2.row(pairs[k].target).transpose();
    }
    scaled = dense.sparseView();
  }

  model.projection_defect = projection_defect(joint, Matrix(scaled));
  const SpectralBasis updated = block_svd_update(joint, scaled);
  model.basis = retain(updated, output_dim, cfg.skip_tol);
  const Vector inv_sqrt_lambda = model.basis.values.array().rsqrt();

  Matrix z;
  if (cfg.mode == AlignmentMode::instance) {
    Vector inv_sqrt(m1 + m2);
    inv_sqrt << source.degrees.array().rsqrt(), target.degrees.array().rsqrt();
    z = inv_sqrt.asDiagonal() * model.basis.vectors * inv_sqrt_lambda.asDiagonal();
    model.training = {source.features, target.features};
    model.degrees = {source.degrees, target.degrees};
    model.trivial = joint_zero_modes(source.graph, target.graph, pairs, inv_sqrt.cwiseInverse());
  } else {
    const Index f1 = source.whitening.rows();
    model.feature_map[0] = source.whitening * model.basis.vectors.topRows(f1) * inv_sqrt_lambda.asDiagonal();
    model.feature_map[1] =
        target.whitening * model.basis.vectors.bottomRows(model.basis.vectors.rows() - f1) * inv_sqrt_lambda.asDiagonal();
    z.resize(m1 + m2, model.basis.modes());
    z.topRows(m1) = source.features * model.feature_map[0];
    z.bottomRows(m2) = target.features * model.feature_map[1];
  }
  if (!z.allFinite()) throw NumericalError("embedding contains non-finite values");
  model.embedding = make_embedding(std::move(z), m1);
  model.times.graph = source.times.graph + target.times.graph;
  model.times.eigensolve = source.times.eigensolve + target.times.eigensolve;
  model.times.update = seconds_since(start);
  return model;
}

namespace {

AlignmentModel run(const DataMatrix& source, const DataMatrix& target, const std::vector<Correspondence>& pairs,
                   AlignmentConfig cfg, AlignmentMode mode) {
  cfg.mode = mode;
  cfg.validate();
  check_pair_ranges(pairs, source.samples(), target.samples());
  const FilteredDomain s = filter_domain(source, cfg, cfg.modes_per_domain());
  const FilteredDomain t = filter_domain(target, cfg, cfg.modes_per_domain());
  return fuse(s, t, pairs, cfg, cfg.dim);
}

}  // namespace

AlignmentModel fma_instance(const DataMatrix& source, const DataMatrix& target,
                            const std::vector<Correspondence>& pairs, const AlignmentConfig& cfg) {
  return run(source, target, pairs, cfg, AlignmentMode::instance);
}

AlignmentModel fma_feature(const DataMatrix& source, const DataMatrix& target,
                           const std::vector<Correspondence>& pairs, const AlignmentConfig& cfg) {
  return run(source, target, pairs, cfg, AlignmentMode::feature);
}

AlignmentModel align(const DataMatrix& source, const DataMatrix& target, const std::vector<Correspondence>& pairs,
                     const AlignmentConfig& cfg) {
  return run(source, target, pairs, cfg, cfg.mode);
}

std::vector<NeighborEdge> neighbor_edges(const AlignmentModel& model, const Vector& standardized, Domain domain) {
  const AlignmentConfig& cfg = model.config;
  const Matrix& train = model.training[slot(domain)];
  const bool cosine = cfg.similarity == SimilarityKind::cosine;
  const auto nbs = kernels::knn_query(train, standardized, std::min(cfg.k, train.rows()),
                                      cosine ? kernels::Metric::cosine : kernels::Metric::euclidean);
  std::vector<NeighborEdge> edges;
  const double sigma2 = model.heat_sigma2[slot(domain)];
  for (const auto& nb : nbs) {
    const double sim = cosine ? nb.score : std::exp(-nb.score / (sigma2 > 0.0 ? sigma2 : 1.0));
    if (sim > 0.0) edges.push_back({nb.index, cfg.alpha * sim});
  }
  if (edges.empty()) throw DataError("new sample has no neighbour with positive similarity");
  return edges;
}

Vector embed_new_node(const AlignmentModel& model, const std::vector<NeighborEdge>& edges, Domain domain) {
  if (model.config.mode != AlignmentMode::instance)
    throw ConfigError("node insertion applies to instance-level models only");
  if (edges.empty()) throw DataError("new node needs at least one edge");
  const Index m1 = model.degrees[0].size();
  const Index rows = m1 + model.degrees[1].size();
  const Index offset = domain == Domain::source ? 0 : m1;
  const Vector& deg = model.degrees[slot(domain)];
  const Index n = model.basis.modes();
  const Index t = model.trivial.cols();
  const Index cols = t + n + 1;

  // [zero modes | retained modes | unit vector of the still isolated new node].
  SpectralBasis ext;
  ext.vectors = Matrix::Zero(rows + 1, cols);
  ext.vectors.topLeftCorner(rows, t) = model.trivial;
  ext.vectors.block(0, t, rows, n) = model.basis.vectors;
  ext.vectors(rows, cols - 1) = 1.0;
  ext.values = Vector::Zero(cols);
  ext.values.segment(t, n) = model.basis.values;

  double degree = kDegreeEpsilon;
  for (const auto& e : edges) {
    if (e.index < 0 || e.index >= deg.size()) throw DataError("neighbour index out of range");
    if (!(e.weight > 0.0)) throw DataError("neighbour weight must be positive");
    degree += e.weight;
  }
  Matrix a = Matrix::Zero(rows + 1, static_cast<Index>(edges.size()));
  for (std::size_t c = 0; c < edges.size(); ++c) {
    const double s = std::sqrt(edges[c].weight);
    a(rows, static_cast<Index>(c)) = s / std::sqrt(degree);
    a(offset + edges[c].index, static_cast<Index>(c)) = -s / std::sqrt(deg(edges[c].index));
  }
  const SpectralBasis updated = block_svd_update(ext, a);

  // The update mixes modes, so the appended row is read in the model's frame: combine
  // the updated columns, minus the one dominated by the new node itself, so that the old
  // rows reproduce the retained modes exactly, and apply the same combination to the new row.
  const Matrix rotation = ext.vectors.transpose() * updated.vectors;
  Index own = 0;
  rotation.row(cols - 1).cwiseAbs().maxCoeff(&own);
  Matrix old_rows(cols - 1, cols - 1);
  Vector new_row(cols - 1);
  for (Index c = 0, k = 0; c < cols; ++c) {
    if (c == own) continue;
    old_rows.col(k) = rotation.col(c).head(cols - 1);
    new_row(k++) = rotation(cols - 1, c);
  }
  const Eigen::ColPivHouseholderQR<Matrix> qr(old_rows.transpose());
  if (qr.rank() < cols - 1) throw NumericalError("inductive update lost a retained mode");
  const Vector coeff = Vector(qr.solve(new_row)).tail(n);
  return (coeff.array() * model.basis.values.array().rsqrt()).matrix() / std::sqrt(degree);
}

Vector embed_new_instance(const AlignmentModel& model, const Vector& x, Domain domain) {
  const Index arity = model.features(domain);
  if (x.size() != arity)
    throw DataError("sample has " + std::to_string(x.size()) + " features, the " + to_string(domain) +
                    " domain has " + std::to_string(arity));
  if (x.cwiseAbs().maxCoeff() == 0.0) throw DataError("sample is an all-zero vector");
  const Vector standardized = model.standardizers[slot(domain)].apply_row(x);
  if (model.config.mode == AlignmentMode::feature) return model.feature_map[slot(domain)].transpose() * standardized;
  return embed_new_node(model, neighbor_edges(model, standardized, domain), domain);
}

}  // namespace fmalign
