#include <set>
#include <sstream>

#include "fmalign/eval.hpp"
#include "support.hpp"

using namespace fmtest;

namespace {

/// Minimizes the same penalized cross-entropy by damped Newton steps on the full Hessian.
Matrix newton_logistic(const Matrix& z, const std::vector<Index>& y, Index classes, double l2) {
  const Index m = z.rows(), d = z.cols() + 1, n = d * classes;
  Matrix x(m, d);
  x << z, Vector::Ones(m);
  auto objective = [&](const Vector& w, Vector* grad, Matrix* hess) {
    const Eigen::Map<const Matrix> wm(w.data(), d, classes);
    double f = 0.0;
    if (grad) grad->setZero(n);
    if (hess) hess->setZero(n, n);
    for (Index i = 0; i < m; ++i) {
      Vector s = (x.row(i) * wm).transpose();
      const double top = s.maxCoeff();
      const Vector e = (s.array() - top).exp();
      const Vector p = e / e.sum();
      f -= std::log(p(y[static_cast<std::size_t>(i)]));
      for (Index c = 0; c < classes; ++c) {
        const double r = p(c) - (c == y[static_cast<std::size_t>(i)] ? 1.0 : 0.0);
        if (grad) grad->segment(c * d, d) += r * x.row(i).transpose() / static_cast<double>(m);
        if (hess)
          for (Index c2 = 0; c2 < classes; ++c2) {
            const double h = (c == c2 ? p(c) : 0.0) - p(c) * p(c2);
            hess->block(c * d, c2 * d, d, d) += h * x.row(i).transpose() * x.row(i) / static_cast<double>(m);
          }
      }
    }
    f /= static_cast<double>(m);
    for (Index c = 0; c < classes; ++c)
      for (Index j = 0; j + 1 < d; ++j) {
        f += 0.5 * l2 * w(c * d + j) * w(c * d + j);
        if (grad) (*grad)(c * d + j) += l2 * w(c * d + j);
        if (hess) (*hess)(c * d + j, c * d + j) += l2;
      }
    return f;
  };
  Vector w = Vector::Zero(n), g;
  Matrix h;
  for (int it = 0; it < 100; ++it) {
    const double f = objective(w, &g, &h);
    if (g.cwiseAbs().maxCoeff() < 1e-12) break;
    // The bias block is invariant to a common shift; the minimum-norm step ignores it.
    const Vector step = -Eigen::CompleteOrthogonalDecomposition<Matrix>(h).solve(g);
    double t = 1.0;
    while (objective(w + t * step, nullptr, nullptr) > f + 1e-4 * t * g.dot(step) && t > 1e-10) t *= 0.5;
    w += t * step;
  }
  return Eigen::Map<Matrix>(w.data(), d, classes);
}

/// Gaussian blobs around the given centers.
std::pair<Matrix, std::vector<Label>> blobs(Gen& g, const std::vector<Eigen::Vector2d>& centers, Index per_class,
                                            double spread) {
  Matrix z(static_cast<Index>(centers.size()) * per_class, 2);
  std::vector<Label> y;
  for (std::size_t c = 0; c < centers.size(); ++c)
    for (Index i = 0; i < per_class; ++i) {
      z.row(static_cast<Index>(y.size())) = centers[c].transpose() + spread * g.matrix(1, 2);
      y.push_back(static_cast<Label>(c));
    }
  return {z, y};
}

}  // namespace

TEST_CASE("accuracy on a hand-counted fixture") {
  // Confusion matrix rows=truth {0,1,2}: [[2,1,0],[0,3,1],[1,0,2]] -> 7 of 10 correct.
  const std::vector<Label> truth{0, 0, 0, 1, 1, 1, 1, 2, 2, 2};
  const std::vector<Label> pred{0, 0, 1, 1, 1, 1, 2, 0, 2, 2};
  CHECK(accuracy(pred, truth) == doctest::Approx(0.7));
  CHECK_THROWS_AS(accuracy({1}, {1, 2}), DataError);
  CHECK_THROWS_AS(accuracy({}, {}), DataError);
}

TEST_CASE("spearman") {
  const Vector a = (Vector(5) << 1, 2, 3, 4, 5).finished();
  CHECK(spearman(a, a.array().exp().matrix()) == doctest::Approx(1.0));
  CHECK(spearman(a, -a) == doctest::Approx(-1.0));
  for_all(30, 50, [](Gen& g) {
    const Index n = g.integer(2, 30);
    Vector x(n), y(n);
    for (Index i = 0; i < n; ++i) {
      x(i) = static_cast<double>(g.integer(0, 5));  // many ties
      y(i) = g.normal();
    }
    // Average ranks by counting, then Pearson.
    auto ranks = [](const Vector& v) {
      Vector r(v.size());
      for (Index i = 0; i < v.size(); ++i) {
        double less = 0, equal = 0;
        for (Index j = 0; j < v.size(); ++j) {
          less += v(j) < v(i) ? 1 : 0;
          equal += v(j) == v(i) ? 1 : 0;
        }
        r(i) = less + (equal + 1.0) / 2.0;
      }
      return r;
    };
    const Vector rx = ranks(x), ry = ranks(y);
    const Vector cx = rx.array() - rx.mean(), cy = ry.array() - ry.mean();
    const double want = cx.norm() * cy.norm() > 0 ? cx.dot(cy) / (cx.norm() * cy.norm()) : 0.0;
    CHECK(spearman(x, y) == doctest::Approx(want).epsilon(1e-12));
  });
}

TEST_CASE("logistic regression on separable blobs") {
  Gen g(51);
  const auto [z, y] = blobs(g, {{-5, 0}, {5, 0}}, 30, 0.5);
  const ClassifierModel model = train_logistic(z, y);
  CHECK(accuracy(predict(model, z), y) == 1.0);
  CHECK(model.classes == std::vector<Label>{0, 1});
  CHECK(model.weights.rows() == 3);
  CHECK(model.weights.allFinite());
  for (std::size_t i = 1; i < model.objective_trace.size(); ++i)
    CHECK(model.objective_trace[i] <= model.objective_trace[i - 1]);
  CHECK_THROWS_AS(train_logistic(z, std::vector<Label>(static_cast<std::size_t>(z.rows()), 4)), DataError);
  CHECK_THROWS_AS(train_logistic(z, {0, 1}), DataError);
  CHECK_THROWS_AS(decision_scores(model, Matrix::Zero(2, 3)), DataError);
}

TEST_CASE("logistic regression matches a Newton oracle") {
  for_all(5, 52, [](Gen& g) {
    const auto [z, y] = blobs(g, {{0, 0}, {2, 0.5}, {1, 2}}, 40, 0.9);
    const ClassifierModel model = train_logistic(z, y);
    std::vector<Index> yi(y.begin(), y.end());
    const Matrix w = newton_logistic(z, yi, 3, 1e-4);
    const double f_model = logistic_objective(model.weights, z, y, model.classes, 1e-4);
    const double f_oracle = logistic_objective(w, z, y, model.classes, 1e-4);
    CHECK(f_model >= f_oracle - 1e-12);
    CHECK(f_model - f_oracle < 1e-6);
    const auto [test, truth] = blobs(g, {{0, 0}, {2, 0.5}, {1, 2}}, 300, 0.9);
    ClassifierModel oracle = model;
    oracle.weights = w;
    CHECK(std::abs(accuracy(predict(model, test), truth) - accuracy(predict(oracle, test), truth)) <= 0.005);
  });
}

namespace {

TwoDomainTask task(Index m, std::uint64_t seed = 0) {
  TwoDomainTaskSpec spec;
  spec.source_samples = spec.target_samples = m;
  spec.classes = 5;
  spec.source_features = 20;
  spec.target_features = 15;
  spec.seed = seed;
  return make_two_domain_task(spec);
}

AlignmentConfig small_config() {
  AlignmentConfig cfg;
  cfg.dim = 10;
  cfg.k = 8;
  return cfg;
}

}  // namespace

TEST_CASE("run_split never looks at unlabeled target labels") {
  const TwoDomainTask t = task(150);
  const AlignmentConfig cfg = small_config();
  SplitSpec spec;
  const Split split = make_split(t.source, t.target, spec);
  const FilteredDomain s = filter_domain(t.source, cfg, cfg.modes_per_domain());
  const FilteredDomain d = filter_domain(t.target, cfg, cfg.modes_per_domain());
  const SplitOutcome a = run_split(s, d, t.source, t.target, split, cfg);

  DataMatrix scrambled = t.target;
  std::set<Index> kept;
  for (const auto& [c, rows] : split.target) kept.insert(rows.begin(), rows.end());
  Gen g(53);
  for (Index i = 0; i < scrambled.samples(); ++i)
    if (!kept.count(i)) (*scrambled.labels)[static_cast<std::size_t>(i)] = static_cast<Label>(g.integer(0, 4));
  const SplitOutcome b = run_split(s, d, t.source, scrambled, split, cfg);
  CHECK(a.predictions == b.predictions);
  CHECK(a.accuracy >= 0.0);
  CHECK(a.accuracy <= 1.0);
}

TEST_CASE("evaluate_task is deterministic and aggregates splits") {
  const TwoDomainTask t = task(150);
  SplitSpec spec;
  spec.labeled_per_class_source = 1;
  spec.labeled_per_class_target = 1;
  const ExperimentResult a = evaluate_task(t.source, t.target, spec, small_config(), 3);
  const ExperimentResult b = evaluate_task(t.source, t.target, spec, small_config(), 3);
  REQUIRE(a.splits.size() == 3);
  double mean = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(a.splits[k].split_index == k);
    CHECK(std::isfinite(a.splits[k].accuracy));
    CHECK(a.splits[k].predictions == b.splits[k].predictions);
    mean += a.splits[k].accuracy / 3.0;
  }
  CHECK(a.accuracy_mean == doctest::Approx(mean));
  CHECK(a.accuracy_std >= 0.0);

  std::ostringstream out;
  write_results_csv(out, {a});
  CHECK(out.str().rfind("task,method,split,accuracy\n", 0) == 0);
  std::ostringstream timings;
  write_experiment_timings_csv(timings, {a});
  CHECK(timings.str().rfind("task,method,split,graph_s,eigensolve_s,update_s,classify_s\n", 0) == 0);
}

TEST_CASE("aligning a domain with itself is no worse than the single-domain embedding") {
  const TwoDomainTask t = task(200, 3);
  AlignmentConfig cfg = small_config();
  SplitSpec spec;
  spec.labeled_per_class_source = 5;
  spec.labeled_per_class_target = 5;
  const ExperimentResult joint = evaluate_task(t.source, t.source, spec, cfg, 3);

  // Baseline: classifier on the filtered single-domain embedding, same labeled rows.
  const FilteredDomain f = filter_domain(t.source, cfg, cfg.dim);
  Index trivial = 0;
  while (f.basis.values(trivial) <= cfg.skip_tol) ++trivial;
  const Matrix z = f.degrees.array().rsqrt().matrix().asDiagonal() * f.basis.vectors.rightCols(cfg.dim) *
                   f.basis.values.tail(cfg.dim).array().rsqrt().matrix().asDiagonal();
  double baseline = 0.0;
  for (std::uint64_t k = 0; k < 3; ++k) {
    SplitSpec sk = spec;
    sk.split_index = k;
    const Split split = make_split(t.source, t.source, sk);
    Matrix train(0, z.cols());
    std::vector<Label> labels;
    for (const auto& [c, rows] : split.source)
      for (const Index i : rows) {
        train.conservativeResize(train.rows() + 1, Eigen::NoChange);
        train.row(train.rows() - 1) = z.row(i);
        labels.push_back(c);
      }
    baseline += accuracy(predict(train_logistic(train, labels), z), *t.source.labels) / 3.0;
  }
  CAPTURE(baseline);
  CHECK(joint.accuracy_mean >= baseline - 0.02);
}

TEST_CASE("sweep shapes and parameter sensitivity") {
  const TwoDomainTask t = task(300, 1);
  SplitSpec spec;
  AlignmentConfig cfg = small_config();
  const auto dims = sweep(t.source, t.target, spec, cfg, 2, SweepParameter::dim, {2, 6, 20});
  REQUIRE(dims.size() == 3);
  CHECK(dims[1].value == 6.0);
  const auto alphas = sweep(t.source, t.target, spec, cfg, 2, SweepParameter::alpha, {0.05, 0.2, 1.0});
  auto range = [](const std::vector<SweepRow>& rows) {
    double lo = 1.0, hi = 0.0;
    for (const auto& r : rows) {
      lo = std::min(lo, r.accuracy_mean);
      hi = std::max(hi, r.accuracy_mean);
    }
    return hi - lo;
  };
  CAPTURE(range(dims));
  CAPTURE(range(alphas));
  CHECK(range(alphas) < range(dims));
  CHECK(sweep(t.source, t.target, spec, cfg, 2, SweepParameter::dim, {2, 6, 20})[2].accuracy_mean ==
        dims[2].accuracy_mean);
  std::ostringstream out;
  write_sweep_csv(out, dims);
  const std::string text = out.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  CHECK_THROWS_AS(parse_sweep_parameter("beta"), ConfigError);
}

TEST_CASE("benchmark table shape") {
  TwoDomainTaskSpec spec;
  spec.source_samples = spec.target_samples = 60;
  spec.classes = 3;
  const BenchmarkTask a = make_benchmark_task(spec, {});
  spec.seed = 1;
  BenchmarkTask b = make_benchmark_task(spec, {});
  b.name = "second";
  AlignmentConfig cfg = small_config();
  const auto rows = benchmark_runtime({a, b}, {Method::fma_instance, Method::fma_feature, Method::sma}, cfg);
  CHECK(rows.size() == 6);
  for (const auto& r : rows) CHECK(r.seconds >= 0.0);
  std::ostringstream out;
  write_timings_csv(out, rows);
  CHECK(out.str().rfind("task,method,seconds,graph_s,eigensolve_s,update_s\n", 0) == 0);
  CHECK(parse_method("sma") == Method::sma);
  CHECK_THROWS_AS(parse_method("gfk"), ConfigError);
}

TEST_CASE("suite files") {
  TempDir dir;
  const TwoDomainTask t = task(60);
  std::ofstream(dir / "a.csv") << "f0,f1,label\n";
  auto dump = [&](const std::string& name, const DataMatrix& d) {
    std::ofstream out(dir / name);
    for (Index j = 0; j < d.features(); ++j) out << "f" << j << ',';
    out << "label\n";
    for (Index i = 0; i < d.samples(); ++i) {
      for (Index j = 0; j < d.features(); ++j) out << d.values(i, j) << ',';
      out << (*d.labels)[static_cast<std::size_t>(i)] << '\n';
    }
  };
  dump("src.csv", t.source);
  dump("tgt.csv", t.target);
  dir.write("suite.txt",
            "# two domains\n"
            "domain S src.csv label_column=label labeled_per_class=1\n"
            "domain T tgt.csv label_column=label labeled_per_class=2\n"
            "task S T\n"
            "task T S mode=feature\n");
  const Suite suite = parse_suite(dir / "suite.txt");
  REQUIRE(suite.tasks.size() == 2);
  CHECK(suite.domains.at("T").labeled_per_class == 2);
  CHECK(suite.domains.at("S").path == dir / "src.csv");
  CHECK(suite.tasks[1].mode == AlignmentMode::feature);
  AlignmentConfig cfg = small_config();
  cfg.dim = 4;
  const auto results = run_suite(suite, {}, cfg, 1);
  REQUIRE(results.size() == 2);
  CHECK(results[0].task == "S->T");
  CHECK(results[1].method == "fma_feature");

  dir.write("bad.txt", "domain S src.csv\ntask S X\n");
  CHECK_THROWS_AS(parse_suite(dir / "bad.txt"), ConfigError);
  dir.write("bad2.txt", "dataset S src.csv\n");
  CHECK_THROWS_AS(parse_suite(dir / "bad2.txt"), ConfigError);
}

TEST_CASE("alignment demo") {
  const DemoSpec spec;
  const AlignmentDemo demo = make_alignment_demo(spec);
  CHECK(demo.source.points.samples() == 400);
  CHECK(demo.pairs.size() == 40);
  const DemoReport r = run_alignment_demo(demo, spec);
  CHECK(r.spearman_source > 0.9);
  CHECK(r.spearman_target > 0.9);
  CHECK(r.median_pair_distance < r.median_cross_distance);
}
