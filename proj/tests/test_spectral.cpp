#include <array>

#include "fmalign/spectral.hpp"
#include "support.hpp"

using namespace fmtest;

namespace {

void check_sign_convention(const Matrix& v) {
  for (Index c = 0; c < v.cols(); ++c) {
    Index top = 0;
    v.col(c).cwiseAbs().maxCoeff(&top);
    CHECK(v(top, c) > 0.0);
  }
}

}  // namespace

TEST_CASE("eig_smallest small cases") {
  const SpectralBasis id = eig_smallest(Matrix(Matrix::Identity(4, 4)), 2);
  CHECK(id.values == Eigen::Vector2d(1.0, 1.0));

  const Matrix p3 = normalized_operator(graph_from_weights(path_weights(3).sparseView()));
  const SpectralBasis b = eig_smallest(p3, 2);
  CHECK(b.values(0) == doctest::Approx(1.0));
  CHECK(b.values(1) == doctest::Approx(2.0));

  EigenOptions keep;
  keep.keep_trivial = true;
  const SpectralBasis t = eig_smallest(p3, 1, keep);
  REQUIRE(t.modes() == 2);
  CHECK(std::abs(t.values(0)) < 1e-9);

  CHECK_THROWS_WITH_AS(eig_smallest(p3, 3), doctest::Contains("only 2 of 3"), NumericalError);
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 1.0;
  CHECK_THROWS_AS(eig_smallest(asym, 1), DataError);

  for_all(20, 20, [](Gen& g) {
    const Vector d = g.vector(g.integer(1, 12)).cwiseAbs().array() + 0.01;
    const SpectralBasis s = eig_smallest(Matrix(d.asDiagonal()), kAllModes);
    Vector sorted = d;
    std::sort(sorted.data(), sorted.data() + sorted.size());
    CHECK((s.values - sorted).cwiseAbs().maxCoeff() < 1e-14);
  });
}

TEST_CASE("eig_smallest matches a dense reference") {
  for_all(30, 21, [](Gen& g) {
    const Index n = g.integer(2, 60);
    const Matrix r = g.matrix(n, n);
    const Matrix m = r * r.transpose() + Matrix::Identity(n, n) * 1e-3;
    const Index count = g.integer(1, n);
    const SpectralBasis s = eig_smallest(m, count);
    const Vector ref = dense_eigenvalues(m);
    CHECK((s.values - ref.head(count)).cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, ref.maxCoeff()));
    CHECK((s.vectors.transpose() * s.vectors - Matrix::Identity(count, count)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((m * s.vectors - s.vectors * s.values.asDiagonal()).cwiseAbs().maxCoeff() < 1e-8 * ref.maxCoeff());
    CHECK(std::is_sorted(s.values.data(), s.values.data() + count));
    check_sign_convention(s.vectors);
    const SpectralBasis again = eig_smallest(m, count);
    CHECK(again.values == s.values);
    CHECK((again.vectors - s.vectors).cwiseAbs().maxCoeff() < 1e-12);
  });
}

TEST_CASE("iterative and dense solvers agree") {
  for_all(6, 22, [](Gen& g) {
    const Index m = g.integer(150, 260), count = g.integer(2, 12);
    const Matrix x = g.matrix(m, 5);
    const SparseMatrix op = normalized_operator(build_knn_graph(x, {g.integer(4, 10), 0.2}));
    EigenOptions dense, iterative;
    dense.solver = EigenSolverKind::dense;
    iterative.solver = EigenSolverKind::iterative;
    const SpectralBasis a = eig_smallest(op, count, dense), b = eig_smallest(op, count, iterative);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() < 1e-8);
    // Compare the span of well separated leading modes only.
    Index sep = count;
    while (sep > 1 && a.values(sep - 1) > 0.0 && sep < a.modes() && std::abs(a.values(sep) - a.values(sep - 1)) < 1e-6) --sep;
    CHECK(max_principal_angle(a.vectors.leftCols(sep), b.vectors.leftCols(sep)) < 1e-6);
  });
}

TEST_CASE("sign convention") {
  Matrix v(3, 2);
  v << -0.2, 0.5, 0.9, -0.5, -0.1, 0.1;
  apply_sign_convention(v);
  CHECK(v(1, 0) == 0.9);
  CHECK(v(0, 1) == 0.5);  // tie: the first index wins
  CHECK(v(1, 1) == -0.5);
}

TEST_CASE("loss_intra") {
  Matrix w2 = Matrix::Zero(2, 2);
  w2(0, 1) = w2(1, 0) = 0.7;
  const std::array<SimilarityGraph, 1> edge{graph_from_weights(w2.sparseView())};
  CHECK(loss_intra(Matrix::Ones(2, 3), edge) == 0.0);
  CHECK(loss_intra((Matrix(2, 1) << 0, 1).finished(), edge) == doctest::Approx(1.4));
  CHECK_THROWS_AS(loss_intra(Matrix::Ones(3, 1), edge), DataError);

  for_all(20, 23, [](Gen& g) {
    const Matrix w1 = Matrix(g.weights(8, 0.5)), w2 = Matrix(g.weights(g.integer(1, 8), 0.5));
    const std::array<SimilarityGraph, 2> graphs{graph_from_weights(w1.sparseView()),
                                                graph_from_weights(w2.sparseView())};
    const Matrix z = g.matrix(8 + w2.rows(), g.integer(1, 4));
    const double want = pairwise_loss(w1, z.topRows(8)) + pairwise_loss(w2, z.bottomRows(w2.rows()));
    CHECK(loss_intra(z, graphs) == doctest::Approx(want).epsilon(1e-12));
  });
}

TEST_CASE("loss_inter") {
  const IncidenceMatrix a = build_incidence({{0, 1, 1.0}}, 2, 2);
  Matrix z(4, 2);
  z << 1, 2, 0, 0, 0, 0, 1, 2;
  CHECK(loss_inter(z, a) == 0.0);
  z.row(3) << 4, -2;
  CHECK(loss_inter(z, a) == doctest::Approx(9.0 + 16.0));

  for_all(20, 24, [](Gen& g) {
    const Index m1 = g.integer(1, 10), m2 = g.integer(1, 10);
    auto pairs = g.pairs(m1, m2, g.integer(0, 6));
    for (auto& p : pairs) p.weight = g.uniform(0.1, 2.0);
    const IncidenceMatrix inc = build_incidence(pairs, m1, m2);
    const Matrix z = g.matrix(m1 + m2, g.integer(1, 4));
    const double frob = (Matrix(inc.entries).transpose() * z).squaredNorm();
    CHECK(loss_inter(z, inc) == doctest::Approx(frob).epsilon(1e-12));
  });
}

TEST_CASE("loss_joint trace identity") {
  Matrix w2 = Matrix::Zero(2, 2);
  w2(0, 1) = w2(1, 0) = 0.3;
  const SimilarityGraph one = graph_from_weights(w2.sparseView());
  const SimilarityGraph lone = graph_from_weights(Matrix::Zero(1, 1).sparseView());
  const SparseMatrix l = joint_laplacian(one, lone, build_incidence({}, 2, 1));
  CHECK(loss_joint(Matrix::Zero(3, 2), l) == 0.0);
  const Matrix z = (Matrix(3, 1) << 1.0, 3.0, 7.0).finished();
  CHECK(loss_joint(z, l) == doctest::Approx(2.0 * 0.3 * 4.0));

  for_all(60, 25, [](Gen& g) {
    const Index m1 = g.integer(1, 25), m2 = g.integer(1, 25);
    const SimilarityGraph g1 = graph_from_weights(g.weights(m1, 0.4)), g2 = graph_from_weights(g.weights(m2, 0.4));
    auto pairs = g.pairs(m1, m2, g.integer(0, 6));
    for (auto& p : pairs) p.weight = g.uniform(0.1, 2.0);
    const IncidenceMatrix a = build_incidence(pairs, m1, m2);
    const Matrix z = g.matrix(m1 + m2, g.integer(1, 5));
    const std::array<SimilarityGraph, 2> graphs{g1, g2};
    const double joint = loss_joint(z, joint_laplacian(g1, g2, a));
    const double sum = loss_intra(z, graphs) + 2.0 * loss_inter(z, a);
    CHECK(std::abs(joint - sum) <= 1e-10 * std::max(1.0, std::abs(sum)));
    CHECK(joint == doctest::Approx(pairwise_loss(joint_weights(Matrix(g1.weights), Matrix(g2.weights), pairs), z)));
  });
}

TEST_CASE("sma_solve constraint and spectrum") {
  const SimilarityGraph p1 = graph_from_weights(path_weights(8).sparseView());
  const SimilarityGraph p2 = graph_from_weights(path_weights(8).sparseView());
  const std::vector<Correspondence> pairs{{0, 0, 1.0}, {7, 7, 1.0}};
  const SmaResult r = sma_solve(p1, p2, build_incidence(pairs, 8, 8), 6);
  const Matrix& z = r.embedding.coordinates;
  const Matrix zdz = z.transpose() * r.degrees.asDiagonal() * z;
  const Matrix want = r.basis.values.cwiseInverse().asDiagonal();
  CHECK((zdz - want).cwiseAbs().maxCoeff() < 1e-8);
  const Vector oracle = generalized_joint_spectrum(path_weights(8), path_weights(8), pairs);
  CHECK((r.spectrum - oracle).cwiseAbs().maxCoeff() < 1e-8);

  for_all(20, 26, [](Gen& g) {
    const Index m1 = g.integer(3, 20), m2 = g.integer(3, 20);
    const Matrix w1 = Matrix(g.connected_weights(m1, 0.3)), w2 = Matrix(g.connected_weights(m2, 0.3));
    const auto pairs = g.pairs(m1, m2, g.integer(1, 5));
    const SmaResult s = sma_solve(graph_from_weights(w1.sparseView()), graph_from_weights(w2.sparseView()),
                                  build_incidence(pairs, m1, m2), kAllModes);
    const Vector oracle = generalized_joint_spectrum(w1, w2, pairs);
    CHECK((s.spectrum - oracle).cwiseAbs().maxCoeff() < 1e-8);
    // Generalized eigenvector residual of each embedding column.
    const Matrix w = joint_weights(w1, w2, pairs);
    const Matrix l = Matrix(w.rowwise().sum().asDiagonal()) - w;
    const Matrix& z = s.embedding.coordinates;
    const Matrix res = l * z - s.degrees.asDiagonal() * z * s.basis.values.asDiagonal();
    CHECK(res.cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, z.cwiseAbs().maxCoeff()));
  });
}

TEST_CASE("sma_solve without correspondences keeps the domains apart") {
  Gen g(27);
  const Matrix w1 = Matrix(g.connected_weights(7, 0.4)), w2 = Matrix(g.connected_weights(9, 0.4));
  const SmaResult s =
      sma_solve(graph_from_weights(w1.sparseView()), graph_from_weights(w2.sparseView()), build_incidence({}, 7, 9), 8);
  const Matrix& z = s.embedding.coordinates;
  for (Index c = 0; c < z.cols(); ++c) {
    const double a = z.col(c).head(7).norm(), b = z.col(c).tail(9).norm();
    CHECK(std::min(a, b) < 1e-8 * std::max(a, b));
  }
}

TEST_CASE("embedding csv round trip") {
  TempDir dir;
  Gen g(28);
  const Embedding e = make_embedding(g.matrix(7, 3), 4);
  CHECK(e.rows_of(Domain::target).rows() == 3);
  CHECK(e.row_index[5] == 1);
  write_embedding_csv(dir / "z.csv", e);
  const Embedding back = read_embedding_csv(dir / "z.csv");
  CHECK(back.coordinates == e.coordinates);
  CHECK(back.row_domain == e.row_domain);
  CHECK(back.row_index == e.row_index);
  CHECK(read_file(dir / "z.csv").rfind("z_0,z_1,z_2,domain,row\n", 0) == 0);
}
