#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "fmalign/csv.hpp"
#include "fmalign/eval.hpp"

namespace fmalign {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

LabeledIndices labeled(const ClassIndices& classes) {
  LabeledIndices out;
  for (const auto& [label, rows] : classes)
    for (const Index i : rows) out.emplace_back(i, label);
  return out;
}

void summarize(ExperimentResult& r) {
  const auto n = static_cast<double>(r.splits.size());
  if (r.splits.empty()) return;
  double sum = 0.0;
  for (const auto& s : r.splits) sum += s.accuracy;
  r.accuracy_mean = sum / n;
  double var = 0.0;
  for (const auto& s : r.splits) var += (s.accuracy - r.accuracy_mean) * (s.accuracy - r.accuracy_mean);
  r.accuracy_std = std::sqrt(var / n);
}

}  // namespace

SplitOutcome run_split(const FilteredDomain& source, const FilteredDomain& target, const DataMatrix& source_data,
                       const DataMatrix& target_data, const Split& split, const AlignmentConfig& cfg,
                       const ClassifierOptions& classifier) {
  if (!source_data.labeled() || !target_data.labeled()) throw DataError("evaluation needs labeled datasets");
  const LabeledIndices src = labeled(split.source);
  const std::vector<Correspondence> pairs = correspondences_from_labels(src, labeled(split.target));
  const AlignmentModel model = fuse(source, target, pairs, cfg, cfg.dim);

  SplitOutcome out;
  out.times.graph = source.times.graph + target.times.graph;
  out.times.eigensolve = source.times.eigensolve + target.times.eigensolve;
  out.times.update = model.times.update;

  const auto start = Clock::now();
  const Matrix& z = model.embedding.coordinates;
  Matrix train(static_cast<Index>(src.size()), z.cols());
  std::vector<Label> train_labels;
  for (std::size_t r = 0; r < src.size(); ++r) {
    train.row(static_cast<Index>(r)) = z.row(src[r].first);
    train_labels.push_back(src[r].second);
  }
  const ClassifierModel clf = train_logistic(train, train_labels, classifier);
  const Index m1 = source.graph.size();
  out.predictions = predict(clf, z.bottomRows(z.rows() - m1));

  std::vector<Label> predicted, truth;
  for (std::size_t i = 0; i < out.predictions.size(); ++i) {
    const Label t = (*target_data.labels)[i];
    if (t == kUnlabeled) continue;
    predicted.push_back(out.predictions[i]);
    truth.push_back(t);
  }
  out.accuracy = accuracy(predicted, truth);
  out.times.classify = seconds_since(start);
  return out;
}

ExperimentResult evaluate_task(const DataMatrix& source, const DataMatrix& target, const SplitSpec& spec,
                               const AlignmentConfig& cfg, std::int64_t splits, const ClassifierOptions& classifier) {
  cfg.validate();
  if (splits < 1) throw ConfigError("split count must be >= 1");
  if (!source.labeled() || !target.labeled()) throw DataError("evaluation needs labeled source and target data");
  const FilteredDomain s = filter_domain(source, cfg, cfg.modes_per_domain());
  const FilteredDomain t = filter_domain(target, cfg, cfg.modes_per_domain());

  ExperimentResult result;
  result.task = source.domain_id + "->" + target.domain_id;
  result.method = std::string("fma_") + to_string(cfg.mode);
  for (std::int64_t k = 0; k < splits; ++k) {
    SplitSpec current = spec;
    current.split_index = spec.split_index + static_cast<std::uint64_t>(k);
    const Split split = make_split(source, target, current);
    SplitOutcome o = run_split(s, t, source, target, split, cfg, classifier);
    o.split_index = current.split_index;
    if (k > 0) o.times.graph = o.times.eigensolve = 0.0;  // filtering is shared by all splits
    result.splits.push_back(std::move(o));
  }
  summarize(result);
  return result;
}

const char* to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::dim: return "dim";
    case SweepParameter::alpha: return "alpha";
    case SweepParameter::k: return "k";
  }
  return "?";
}

SweepParameter parse_sweep_parameter(const std::string& text) {
  if (text == "dim") return SweepParameter::dim;
  if (text == "alpha") return SweepParameter::alpha;
  if (text == "k") return SweepParameter::k;
  throw ConfigError("sweep parameter must be dim, alpha or k, got '" + text + "'");
}

std::vector<SweepRow> sweep(const DataMatrix& source, const DataMatrix& target, const SplitSpec& spec,
                            const AlignmentConfig& base, std::int64_t splits, SweepParameter parameter,
                            const std::vector<double>& values, const ClassifierOptions& classifier) {
  std::vector<SweepRow> rows;
  for (const double v : values) {
    AlignmentConfig cfg = base;
    switch (parameter) {
      case SweepParameter::dim:
        if (v != std::floor(v)) throw ConfigError("dim values must be integers");
        cfg.dim = static_cast<Index>(v);
        break;
      case SweepParameter::alpha: cfg.alpha = v; break;
      case SweepParameter::k:
        if (v != std::floor(v)) throw ConfigError("k values must be integers");
        cfg.k = static_cast<Index>(v);
        break;
    }
    const ExperimentResult r = evaluate_task(source, target, spec, cfg, splits, classifier);
    rows.push_back({parameter, v, r.accuracy_mean, r.accuracy_std});
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "parameter,value,accuracy_mean,accuracy_std\n";
  for (const auto& r : rows)
    out << to_string(r.parameter) << ',' << csv::format_double(r.value) << ',' << csv::format_double(r.accuracy_mean)
        << ',' << csv::format_double(r.accuracy_std) << '\n';
}

const char* to_string(Method m) {
  switch (m) {
    case Method::fma_instance: return "fma_instance";
    case Method::fma_feature: return "fma_feature";
    case Method::sma: return "sma";
  }
  return "?";
}

Method parse_method(const std::string& text) {
  if (text == "fma_instance") return Method::fma_instance;
  if (text == "fma_feature") return Method::fma_feature;
  if (text == "sma") return Method::sma;
  throw ConfigError("method must be fma_instance, fma_feature or sma, got '" + text + "'");
}

SmaResult sma_align(const DataMatrix& source, const DataMatrix& target, const std::vector<Correspondence>& pairs,
                    const AlignmentConfig& cfg) {
  cfg.validate();
  auto graph_of = [&](const DataMatrix& x) {
    x.validate();
    const Matrix v = cfg.standardize ? fit_standardizer(x.values).apply(x.values) : x.values;
    return build_knn_graph(v, cfg.graph_options());
  };
  const SimilarityGraph g1 = graph_of(source), g2 = graph_of(target);
  return sma_solve(g1, g2, build_incidence(pairs, g1.size(), g2.size()), cfg.dim, cfg.skip_tol);
}

std::vector<TimingRow> benchmark_runtime(const std::vector<BenchmarkTask>& tasks, const std::vector<Method>& methods,
                                         const AlignmentConfig& cfg) {
  std::vector<TimingRow> rows;
  for (const auto& task : tasks) {
    for (const Method m : methods) {
      TimingRow row{task.name, m, 0.0, {}};
      const auto start = Clock::now();
      if (m == Method::sma) {
        (void)sma_align(task.source, task.target, task.pairs, cfg);
      } else {
        AlignmentConfig c = cfg;
        c.mode = m == Method::fma_instance ? AlignmentMode::instance : AlignmentMode::feature;
        row.phases = align(task.source, task.target, task.pairs, c).times;
      }
      row.seconds = seconds_since(start);
      rows.push_back(row);
    }
  }
  return rows;
}

BenchmarkTask make_benchmark_task(const TwoDomainTaskSpec& spec, const SplitSpec& split) {
  TwoDomainTask t = make_two_domain_task(spec);
  const Split s = make_split(t.source, t.target, split);
  BenchmarkTask out;
  out.name = "synthetic_" + std::to_string(spec.source_samples) + "+" + std::to_string(spec.target_samples) + "x" +
             std::to_string(spec.source_features);
  out.pairs = correspondences_from_labels(labeled(s.source), labeled(s.target));
  out.source = std::move(t.source);
  out.target = std::move(t.target);
  return out;
}

void write_results_csv(std::ostream& out, const std::vector<ExperimentResult>& results) {
  out << "task,method,split,accuracy\n";
  for (const auto& r : results)
    for (const auto& s : r.splits)
      out << r.task << ',' << r.method << ',' << s.split_index << ',' << csv::format_double(s.accuracy) << '\n';
}

void write_experiment_timings_csv(std::ostream& out, const std::vector<ExperimentResult>& results) {
  out << "task,method,split,graph_s,eigensolve_s,update_s,classify_s\n";
  for (const auto& r : results)
    for (const auto& s : r.splits)
      out << r.task << ',' << r.method << ',' << s.split_index << ',' << s.times.graph << ',' << s.times.eigensolve
          << ',' << s.times.update << ',' << s.times.classify << '\n';
}

void write_timings_csv(std::ostream& out, const std::vector<TimingRow>& rows) {
  out << "task,method,seconds,graph_s,eigensolve_s,update_s\n";
  for (const auto& r : rows)
    out << r.task << ',' << to_string(r.method) << ',' << r.seconds << ',' << r.phases.graph << ','
        << r.phases.eigensolve << ',' << r.phases.update << '\n';
}

Suite parse_suite(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open suite file '" + path.string() + "'");
  const std::filesystem::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path q(p);
    return q.is_absolute() ? q : base / q;
  };
  Suite suite;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::vector<std::string> w;
    for (std::string s; words >> s;) w.push_back(s);
    if (w.empty()) continue;
    const std::string where = path.string() + ": line " + std::to_string(line_no) + ": ";

    std::map<std::string, std::string> options;
    constexpr std::size_t positional = 3;
    if (w.size() < positional) throw ConfigError(where + "'" + w[0] + "' needs two arguments");
    for (std::size_t i = positional; i < w.size(); ++i) {
      const auto eq = w[i].find('=');
      if (eq == std::string::npos) throw ConfigError(where + "expected key=value, got '" + w[i] + "'");
      options[w[i].substr(0, eq)] = w[i].substr(eq + 1);
    }

    if (w[0] == "domain") {
      SuiteDomain d;
      d.name = w[1];
      d.path = resolve(w[2]);
      for (const auto& [key, value] : options) {
        if (key == "label_column") {
          d.label_column = value;
        } else if (key == "labels") {
          d.labels_path = resolve(value);
        } else if (key == "labeled_per_class") {
          const auto n = csv::parse_int(value);
          if (!n || *n < 1) throw ConfigError(where + "labeled_per_class must be a positive integer");
          d.labeled_per_class = *n;
        } else {
          throw ConfigError(where + "unknown domain option '" + key + "'");
        }
      }
      if (!suite.domains.emplace(d.name, d).second) throw ConfigError(where + "domain '" + d.name + "' redefined");
    } else if (w[0] == "task") {
      SuiteTask t{w[1], w[2], std::nullopt};
      for (const auto& [key, value] : options) {
        if (key != "mode") throw ConfigError(where + "unknown task option '" + key + "'");
        t.mode = parse_alignment_mode(value);
      }
      for (const auto& name : {t.source, t.target})
        if (!suite.domains.count(name)) throw ConfigError(where + "unknown domain '" + name + "'");
      suite.tasks.push_back(t);
    } else {
      throw ConfigError(where + "expected 'domain' or 'task', got '" + w[0] + "'");
    }
  }
  if (suite.tasks.empty()) throw ConfigError(path.string() + ": suite defines no tasks");
  return suite;
}

DataMatrix load_suite_domain(const SuiteDomain& d) {
  DataMatrix x = load_csv(d.path, d.label_column);
  if (d.labels_path) {
    x.labels = load_labels(*d.labels_path);
    x.validate();
  }
  x.domain_id = d.name;
  return x;
}

std::vector<ExperimentResult> run_suite(const Suite& suite, const SplitSpec& spec, const AlignmentConfig& cfg,
                                        std::int64_t splits, const ClassifierOptions& classifier) {
  std::map<std::string, DataMatrix> loaded;
  auto data = [&](const std::string& name) -> const DataMatrix& {
    auto it = loaded.find(name);
    if (it == loaded.end()) it = loaded.emplace(name, load_suite_domain(suite.domains.at(name))).first;
    return it->second;
  };
  std::vector<ExperimentResult> results;
  for (const auto& task : suite.tasks) {
    SplitSpec s = spec;
    if (const auto& o = suite.domains.at(task.source).labeled_per_class) s.labeled_per_class_source = *o;
    if (const auto& o = suite.domains.at(task.target).labeled_per_class) s.labeled_per_class_target = *o;
    AlignmentConfig c = cfg;
    if (task.mode) c.mode = *task.mode;
    results.push_back(evaluate_task(data(task.source), data(task.target), s, c, splits, classifier));
  }
  return results;
}

}  // namespace fmalign

namespace fmalign {

namespace {

double median_of(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

Vector normalized(const Vector& t) {
  const double lo = t.minCoeff(), hi = t.maxCoeff();
  return hi > lo ? Vector((t.array() - lo) / (hi - lo)) : Vector(Vector::Zero(t.size()));
}

}  // namespace

AlignmentDemo make_alignment_demo(const DemoSpec& spec) {
  if (spec.count < 2 || spec.pairs < 1 || spec.pairs > spec.count)
    throw ConfigError("demo needs count >= 2 and 1 <= pairs <= count");
  AlignmentDemo demo;
  demo.source = make_manifold(Manifold::swiss_roll, spec.count, spec.noise * surface_scale(Manifold::swiss_roll),
                              spec.seed);
  demo.target = make_manifold(Manifold::s_curve, spec.count, spec.noise * surface_scale(Manifold::s_curve),
                              spec.seed + 1);
  const Vector ts = normalized(demo.source.intrinsic), tt = normalized(demo.target.intrinsic);

  // Source points at evenly spaced ranks of t, each paired with the target point whose
  // normalized t is closest.
  std::vector<Index> order(static_cast<std::size_t>(spec.count));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return ts(a) < ts(b); });
  for (Index p = 0; p < spec.pairs; ++p) {
    const Index i = order[static_cast<std::size_t>((2 * p + 1) * spec.count / (2 * spec.pairs))];
    Index best = 0;
    (tt.array() - ts(i)).abs().minCoeff(&best);
    demo.pairs.push_back({i, best, 1.0});
  }
  return demo;
}

DemoReport run_alignment_demo(const AlignmentDemo& demo, const DemoSpec& spec) {
  AlignmentConfig cfg;
  cfg.k = spec.k;
  cfg.dim = spec.dim;
  cfg.similarity = SimilarityKind::heat;
  cfg.standardize = false;
  cfg.mode = AlignmentMode::instance;
  DemoReport r;
  r.model = fma_instance(demo.source.points, demo.target.points, demo.pairs, cfg);
  const Matrix zs = r.model.embedding.rows_of(Domain::source), zt = r.model.embedding.rows_of(Domain::target);
  const Vector us = zs.col(0), ut = zt.col(0);
  r.spearman_source = std::abs(spearman(us, demo.source.intrinsic));
  r.spearman_target = std::abs(spearman(ut, demo.target.intrinsic));
  std::vector<double> pair_d, cross_d;
  for (const auto& p : demo.pairs) pair_d.push_back(std::abs(us(p.source) - ut(p.target)));
  cross_d.reserve(static_cast<std::size_t>(us.size() * ut.size()));
  for (Index i = 0; i < us.size(); ++i)
    for (Index j = 0; j < ut.size(); ++j) cross_d.push_back(std::abs(us(i) - ut(j)));
  r.median_pair_distance = median_of(std::move(pair_d));
  r.median_cross_distance = median_of(std::move(cross_d));
  return r;
}

}  // namespace fmalign
