#include "fmalign/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "fmalign/csv.hpp"

namespace fmalign {

Vector SimilarityGraph::regularized_degrees(double epsilon) const {
  return degrees.array() + epsilon;
}

namespace {

using Triplet = Eigen::Triplet<double>;

SimilarityGraph assemble(SparseMatrix w) {
  SimilarityGraph g;
  const Index m = w.rows();
  g.degrees = Vector::Zero(m);
  for (Index c = 0; c < w.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(w, c); it; ++it) g.degrees(it.row()) += it.value();

  std::vector<Triplet> lap;
  lap.reserve(static_cast<std::size_t>(w.nonZeros() + m));
  for (Index c = 0; c < w.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(w, c); it; ++it) lap.emplace_back(it.row(), it.col(), -it.value());
  for (Index i = 0; i < m; ++i) lap.emplace_back(i, i, g.degrees(i));
  g.laplacian.resize(m, m);
  g.laplacian.setFromTriplets(lap.begin(), lap.end());
  g.weights = std::move(w);
  return g;
}

double median(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

}  // namespace

SimilarityGraph build_knn_graph(const Matrix& x, const GraphOptions& options) {
  const Index m = x.rows();
  if (options.k < 1 || options.k >= m)
    throw ConfigError("k=" + std::to_string(options.k) + " must satisfy 1 <= k < sample count " + std::to_string(m));
  if (!(options.alpha > 0.0)) throw ConfigError("edge weight coefficient alpha must be positive");

  const auto metric =
      options.similarity == SimilarityKind::cosine ? kernels::Metric::cosine : kernels::Metric::euclidean;
  if (metric == kernels::Metric::cosine) {
    for (Index i = 0; i < m; ++i)
      if (x.row(i).cwiseAbs().maxCoeff() == 0.0)
        throw DataError("sample " + std::to_string(i) + " is an all-zero row; cosine similarity is undefined");
  }
  const kernels::NeighborLists lists = kernels::knn_parallel(x, options.k, metric);

  double inv_sigma2 = 1.0;
  if (options.similarity == SimilarityKind::heat) {
    std::vector<double> kth;
    kth.reserve(lists.size());
    for (const auto& l : lists) kth.push_back(l.back().score);
    const double sigma2 = median(std::move(kth));
    inv_sigma2 = sigma2 > 0.0 ? 1.0 / sigma2 : 1.0;
  }

  std::vector<Triplet> edges;
  edges.reserve(lists.size() * static_cast<std::size_t>(options.k) * 2);
  for (Index i = 0; i < m; ++i) {
    for (const auto& nb : lists[static_cast<std::size_t>(i)]) {
      const double sim = metric == kernels::Metric::cosine ? nb.score : std::exp(-nb.score * inv_sigma2);
      if (!(sim > 0.0)) continue;
      const double w = options.alpha * sim;
      edges.emplace_back(i, nb.index, w);
      edges.emplace_back(nb.index, i, w);
    }
  }
  SparseMatrix w(m, m);
  w.setFromTriplets(edges.begin(), edges.end(), [](double a, double b) { return std::max(a, b); });
  SimilarityGraph g = assemble(std::move(w));
  if (options.similarity == SimilarityKind::heat) g.heat_sigma2 = 1.0 / inv_sigma2;
  return g;
}

SimilarityGraph graph_from_weights(SparseMatrix weights) {
  if (weights.rows() != weights.cols()) throw DataError("weight matrix must be square");
  weights.makeCompressed();
  const SparseMatrix t = weights.transpose();
  for (Index c = 0; c < weights.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(weights, c); it; ++it) {
      if (!(it.value() >= 0.0) || !std::isfinite(it.value()))
        throw DataError("weight (" + std::to_string(it.row()) + "," + std::to_string(it.col()) +
                        ") must be finite and nonnegative");
      if (it.row() == it.col() && it.value() != 0.0)
        throw DataError("weight matrix must have a zero diagonal (sample " + std::to_string(it.row()) + ")");
      if (t.coeff(it.row(), it.col()) != it.value())
        throw DataError("weight matrix is not symmetric at (" + std::to_string(it.row()) + "," +
                        std::to_string(it.col()) + ")");
    }
  weights.prune(0.0);
  return assemble(std::move(weights));
}

Index connected_components(const SparseMatrix& weights) {
  const Index m = weights.rows();
  std::vector<Index> parent(static_cast<std::size_t>(m));
  std::iota(parent.begin(), parent.end(), Index{0});
  auto find = [&](Index a) {
    while (parent[static_cast<std::size_t>(a)] != a) {
      parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
      a = parent[static_cast<std::size_t>(a)];
    }
    return a;
  };
  Index components = m;
  for (Index c = 0; c < weights.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(weights, c); it; ++it) {
      if (it.value() <= 0.0) continue;
      const Index a = find(it.row()), b = find(it.col());
      if (a != b) {
        parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
        --components;
      }
    }
  return components;
}

SparseMatrix normalized_operator(const SimilarityGraph& g, double epsilon) {
  const Vector d = g.regularized_degrees(epsilon);
  Vector inv_sqrt(d.size());
  for (Index i = 0; i < d.size(); ++i) {
    if (!(d(i) > 0.0))
      throw NumericalError("sample " + std::to_string(i) + " is isolated (zero degree); D^{-1/2} is undefined");
    inv_sqrt(i) = 1.0 / std::sqrt(d(i));
  }
  SparseMatrix n = g.laplacian;
  for (Index c = 0; c < n.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(n, c); it; ++it) it.valueRef() *= inv_sqrt(it.row()) * inv_sqrt(it.col());
  return n;
}

SparseMatrix IncidenceMatrix::gram() const {
  SparseMatrix g = entries * SparseMatrix(entries.transpose());
  return g;
}

IncidenceMatrix build_incidence(const std::vector<Correspondence>& pairs, Index source_size, Index target_size) {
  IncidenceMatrix a;
  a.source_size = source_size;
  a.target_size = target_size;
  a.pairs = pairs;
  std::vector<Triplet> t;
  t.reserve(pairs.size() * 2);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const Correspondence& p = pairs[k];
    auto describe = [&] {
      return "(" + std::to_string(p.source) + ", " + std::to_string(p.target) + ", " + csv::format_double(p.weight) +
             ")";
    };
    if (p.source < 0 || p.source >= source_size)
      throw DataError("correspondence " + describe() + ": source index out of range [0, " +
                      std::to_string(source_size) + ")");
    if (p.target < 0 || p.target >= target_size)
      throw DataError("correspondence " + describe() + ": target index out of range [0, " +
                      std::to_string(target_size) + ")");
    if (!(p.weight > 0.0) || !std::isfinite(p.weight))
      throw DataError("correspondence " + describe() + ": weight must be positive");
    const double s = std::sqrt(p.weight);
    const auto col = static_cast<Index>(k);
    t.emplace_back(p.source, col, s);
    t.emplace_back(source_size + p.target, col, -s);
  }
  a.entries.resize(source_size + target_size, static_cast<Index>(pairs.size()));
  a.entries.setFromTriplets(t.begin(), t.end());
  return a;
}

std::vector<Correspondence> correspondences_from_labels(const LabeledIndices& source, const LabeledIndices& target) {
  LabeledIndices src = source, tgt = target;
  std::sort(src.begin(), src.end());
  std::sort(tgt.begin(), tgt.end());
  std::vector<Correspondence> pairs;
  for (const auto& [i, li] : src) {
    if (li == kUnlabeled) continue;
    for (const auto& [j, lj] : tgt)
      if (lj == li) pairs.push_back({i, j, 1.0});
  }
  return pairs;
}

std::vector<Correspondence> load_correspondences(const std::filesystem::path& path) {
  const csv::Table table = csv::read_table(path);
  std::vector<Correspondence> pairs;
  pairs.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = path.string() + ": line " + std::to_string(table.line_numbers[r]);
    if (row.size() != 2 && row.size() != 3) throw DataError(where + ": expected 2 or 3 columns");
    const auto i = csv::parse_int(row[0]);
    const auto j = csv::parse_int(row[1]);
    if (!i || !j) throw DataError(where + ": indices must be integers");
    double w = 1.0;
    if (row.size() == 3) {
      const auto v = csv::parse_double(row[2]);
      if (!v) throw DataError(where + ": weight is not a number");
      w = *v;
    }
    pairs.push_back({static_cast<Index>(*i), static_cast<Index>(*j), w});
  }
  return pairs;
}

void save_correspondences(const std::filesystem::path& path, const std::vector<Correspondence>& pairs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "src_index,tgt_index,weight\n";
  for (const auto& p : pairs) out << p.source << ',' << p.target << ',' << csv::format_double(p.weight) << '\n';
}

}  // namespace fmalign
