// fma: command-line front end for filtered manifold alignment.

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fmalign/align.hpp"
#include "fmalign/csv.hpp"
#include "fmalign/eval.hpp"

namespace {

using namespace fmalign;
namespace fs = std::filesystem;

/// Every flag can also be set through FMA_<FLAG>, e.g. FMA_DIM or FMA_SKIP_TOL.
std::string env_name(const std::string& flag) {
  std::string out = "FMA_";
  for (const char c : flag) out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

template <typename T>
CLI::Option* flag(CLI::App* app, const std::string& name, T& var, const std::string& help) {
  return app->add_option("--" + name, var, help)->envname(env_name(name))->capture_default_str();
}

CLI::Option* switch_flag(CLI::App* app, const std::string& name, bool& var, const std::string& help) {
  return app->add_flag("--" + name, var, help)->envname(env_name(name));
}

/// The stage a command is in, reported when it fails.
struct Stage {
  std::string name = "setup";
  void operator()(std::string next) { name = std::move(next); }
};

struct AlignFlags {
  AlignmentConfig cfg;
  std::string mode = "instance";
  std::string similarity = "cosine";
  bool no_standardize = false;

  void add(CLI::App* app) {
    flag(app, "k", cfg.k, "Nearest neighbours per sample in each domain graph");
    flag(app, "alpha", cfg.alpha, "Edge weight coefficient: w = alpha * similarity");
    flag(app, "dim", cfg.dim, "Joint embedding dimension (even; dim/2 modes per domain)");
    flag(app, "mode", mode, "Alignment level")->check(CLI::IsMember({"instance", "feature"}));
    flag(app, "similarity", similarity, "Graph similarity")->check(CLI::IsMember({"cosine", "heat"}));
    flag(app, "skip-tol", cfg.skip_tol, "Eigenvalues at or below this count as trivial");
    flag(app, "dense-limit", cfg.dense_limit, "Largest operator solved with the dense eigensolver");
    switch_flag(app, "no-standardize", no_standardize, "Use raw features instead of per-domain z-scores");
  }

  AlignmentConfig resolve() {
    cfg.mode = parse_alignment_mode(mode);
    cfg.similarity = parse_similarity(similarity);
    cfg.standardize = !no_standardize;
    cfg.validate();
    return cfg;
  }
};

std::optional<std::string> optional_string(const std::string& s) {
  return s.empty() ? std::nullopt : std::optional<std::string>(s);
}

DataMatrix load_domain(const std::string& path, const std::string& label_column, const std::string& labels_path) {
  DataMatrix x = load_csv(path, optional_string(label_column));
  if (!labels_path.empty()) {
    x.labels = load_labels(labels_path);
    x.validate();
  }
  return x;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

// align -----------------------------------------------------------------------------

struct AlignCommand {
  AlignFlags align;
  std::string source, target, correspondences, label_column, out;

  void add(CLI::App& root) {
    CLI::App* app = root.add_subcommand("align", "Align two datasets and write the embedding and model");
    flag(app, "source", source, "Source dataset CSV")->required()->check(CLI::ExistingFile);
    flag(app, "target", target, "Target dataset CSV")->required()->check(CLI::ExistingFile);
    flag(app, "correspondences", correspondences, "CSV of src_index,tgt_index[,weight]")
        ->required()
        ->check(CLI::ExistingFile);
    flag(app, "label-column", label_column, "Column excluded from the features in both datasets");
    flag(app, "out", out, "Model directory; the embedding is written to <out>/embedding.csv")->required();
    align.add(app);
  }

  void run(Stage& stage) {
    stage("configuration");
    const AlignmentConfig cfg = align.resolve();
    stage("loading source");
    const DataMatrix x1 = load_domain(source, label_column, "");
    stage("loading target");
    const DataMatrix x2 = load_domain(target, label_column, "");
    stage("loading correspondences");
    const std::vector<Correspondence> pairs = load_correspondences(correspondences);
    stage("alignment");
    const AlignmentModel model = fmalign::align(x1, x2, pairs, cfg);
    stage("writing model");
    save_model(model, out);

    std::cout << "mode: " << to_string(cfg.mode) << '\n'
              << "rows: " << model.rows(Domain::source) << " source, " << model.rows(Domain::target) << " target\n"
              << "eigenvalues:";
    for (Index j = 0; j < model.basis.modes(); ++j) std::cout << ' ' << csv::format_double(model.basis.values(j));
    std::cout << "\nprojection_defect: " << csv::format_double(model.projection_defect) << '\n'
              << "embedding: " << (fs::path(out) / "embedding.csv").string() << '\n';
  }
};

// evaluate --------------------------------------------------------------------------

struct EvaluateCommand {
  AlignFlags align;
  std::string source, target, source_labels, target_labels, suite, out, timings;
  std::string label_column = "label";
  std::int64_t labeled_source = 20, labeled_target = 3, splits = 20;
  std::uint64_t seed = 0;
  ClassifierOptions classifier;

  void add(CLI::App& root) {
    CLI::App* app = root.add_subcommand("evaluate", "Run the labeled-split protocol and report target accuracy");
    auto* src = flag(app, "source", source, "Labeled source dataset CSV")->check(CLI::ExistingFile);
    auto* tgt = flag(app, "target", target, "Labeled target dataset CSV")->check(CLI::ExistingFile);
    auto* st = flag(app, "suite", suite, "Suite definition file (replaces --source/--target)")
                   ->check(CLI::ExistingFile);
    st->excludes(src)->excludes(tgt);
    src->needs(tgt);
    tgt->needs(src);
    flag(app, "label-column", label_column, "Label column name (empty: use sidecar files)");
    flag(app, "source-labels", source_labels, "Source label sidecar, one integer per line")
        ->check(CLI::ExistingFile);
    flag(app, "target-labels", target_labels, "Target label sidecar, one integer per line")
        ->check(CLI::ExistingFile);
    flag(app, "labeled-source", labeled_source, "Labeled source samples per class")->check(CLI::PositiveNumber);
    flag(app, "labeled-target", labeled_target, "Labeled target samples per class")->check(CLI::PositiveNumber);
    flag(app, "splits", splits, "Number of random splits")->check(CLI::PositiveNumber);
    flag(app, "seed", seed, "Split seed");
    flag(app, "l2", classifier.l2, "Classifier L2 penalty");
    flag(app, "max-iter", classifier.max_iterations, "Classifier iteration budget");
    flag(app, "out", out, "Results CSV (task,method,split,accuracy)")->required();
    flag(app, "timings", timings, "Optional per-split phase timing CSV");
    align.add(app);
  }

  void run(Stage& stage) {
    stage("configuration");
    const AlignmentConfig cfg = align.resolve();
    if (suite.empty() && source.empty()) throw ConfigError("evaluate needs --suite or --source and --target");
    const SplitSpec spec{labeled_source, labeled_target, seed, 0};
    std::vector<ExperimentResult> results;
    if (!suite.empty()) {
      stage("reading suite");
      const Suite s = parse_suite(suite);
      stage("evaluation");
      results = run_suite(s, spec, cfg, splits, classifier);
    } else {
      stage("loading source");
      DataMatrix x1 = load_domain(source, source_labels.empty() ? label_column : "", source_labels);
      stage("loading target");
      DataMatrix x2 = load_domain(target, target_labels.empty() ? label_column : "", target_labels);
      stage("evaluation");
      results.push_back(evaluate_task(x1, x2, spec, cfg, splits, classifier));
    }
    stage("writing results");
    {
      auto o = open_output(out);
      write_results_csv(o, results);
    }
    if (!timings.empty()) {
      auto o = open_output(timings);
      write_experiment_timings_csv(o, results);
    }
    for (const auto& r : results)
      std::cout << r.task << ' ' << r.method << ": " << csv::format_double(100.0 * r.accuracy_mean) << " +- "
                << csv::format_double(100.0 * r.accuracy_std) << " % over " << r.splits.size() << " splits\n";
  }
};

// synth -----------------------------------------------------------------------------

struct SynthCommand {
  std::string kind = "swiss_roll", out, intrinsic;
  Index count = 400, pairs = 40, classes = 10, features = 50;
  double noise = 0.05;
  std::uint64_t seed = 0;

  void add(CLI::App& root) {
    CLI::App* app = root.add_subcommand("synth", "Generate synthetic datasets");
    flag(app, "kind", kind, "swiss_roll | s_curve: one manifold; demo: both manifolds with correspondences; "
                            "task: labeled two-domain classification task")
        ->check(CLI::IsMember({"swiss_roll", "s_curve", "demo", "task"}));
    flag(app, "count", count, "Samples per manifold or per domain")->check(CLI::PositiveNumber);
    flag(app, "noise", noise, "Manifold noise standard deviation relative to the surface scale")
        ->check(CLI::NonNegativeNumber);
    flag(app, "pairs", pairs, "Correspondences in the demo")->check(CLI::PositiveNumber);
    flag(app, "classes", classes, "Classes in the task")->check(CLI::Range(Index{2}, Index{1000000}));
    flag(app, "features", features, "Features per domain in the task")->check(CLI::PositiveNumber);
    flag(app, "seed", seed, "Generator seed");
    flag(app, "out", out, "Output CSV (single manifold) or directory (demo, task)")->required();
    flag(app, "intrinsic", intrinsic, "Single manifold: also write the intrinsic parameter here");
  }

  static void write_points(const fs::path& path, const Matrix& points) {
    auto o = open_output(path);
    csv::write_matrix(o, points, {"x", "y", "z"});
  }

  static void write_column(const fs::path& path, const Vector& v, const std::string& name) {
    auto o = open_output(path);
    csv::write_matrix(o, Matrix(v), {name});
  }

  static void write_labeled(const fs::path& path, const DataMatrix& x) {
    auto o = open_output(path);
    for (Index j = 0; j < x.features(); ++j) o << 'f' << j << ',';
    o << "label\n";
    for (Index i = 0; i < x.samples(); ++i) {
      for (Index j = 0; j < x.features(); ++j) o << csv::format_double(x.values(i, j)) << ',';
      o << (*x.labels)[static_cast<std::size_t>(i)] << '\n';
    }
  }

  void run(Stage& stage) {
    stage("generation");
    if (kind == "swiss_roll" || kind == "s_curve") {
      const Manifold m = kind == "swiss_roll" ? Manifold::swiss_roll : Manifold::s_curve;
      const ManifoldSample s = make_manifold(m, count, noise * surface_scale(m), seed);
      stage("writing output");
      write_points(out, s.points.values);
      if (!intrinsic.empty()) write_column(intrinsic, s.intrinsic, "t");
      std::cout << "wrote " << count << " points to " << out << '\n';
    } else if (kind == "demo") {
      DemoSpec spec;
      spec.count = count;
      spec.pairs = pairs;
      spec.noise = noise;
      spec.seed = seed;
      const AlignmentDemo demo = make_alignment_demo(spec);
      stage("writing output");
      const fs::path dir = out;
      write_points(dir / "swiss_roll.csv", demo.source.points.values);
      write_points(dir / "s_curve.csv", demo.target.points.values);
      write_column(dir / "swiss_roll_t.csv", demo.source.intrinsic, "t");
      write_column(dir / "s_curve_t.csv", demo.target.intrinsic, "t");
      save_correspondences(dir / "correspondences.csv", demo.pairs);
      std::cout << "wrote demo (" << count << "+" << count << " points, " << demo.pairs.size() << " pairs) to "
                << dir.string() << '\n';
    } else {
      TwoDomainTaskSpec spec;
      spec.classes = classes;
      spec.source_samples = spec.target_samples = count;
      spec.source_features = spec.target_features = features;
      spec.seed = seed;
      const TwoDomainTask task = make_two_domain_task(spec);
      stage("writing output");
      const fs::path dir = out;
      write_labeled(dir / "source.csv", task.source);
      write_labeled(dir / "target.csv", task.target);
      std::cout << "wrote task (" << count << "+" << count << " samples, " << features << " features) to "
                << dir.string() << '\n';
    }
  }
};

// benchmark -------------------------------------------------------------------------

struct BenchmarkCommand {
  AlignFlags align;
  std::string sizes = "1000", methods = "fma_instance,fma_feature,sma", sweep_parameter, values, out;
  Index features = 50, classes = 10;
  std::int64_t splits = 5;
  std::uint64_t seed = 0;

  void add(CLI::App& root) {
    CLI::App* app =
        root.add_subcommand("benchmark", "Time alignment methods on synthetic tasks, or sweep one parameter");
    flag(app, "sizes", sizes, "Comma-separated samples per domain, one task each");
    flag(app, "features", features, "Features per domain")->check(CLI::PositiveNumber);
    flag(app, "classes", classes, "Classes per task")->check(CLI::Range(Index{2}, Index{1000000}));
    flag(app, "methods", methods, "Comma-separated subset of fma_instance,fma_feature,sma");
    flag(app, "sweep", sweep_parameter, "Sweep dim, alpha or k instead of timing")
        ->check(CLI::IsMember({"dim", "alpha", "k"}));
    flag(app, "values", values, "Comma-separated sweep values");
    flag(app, "splits", splits, "Splits per sweep value")->check(CLI::PositiveNumber);
    flag(app, "seed", seed, "Task and split seed");
    flag(app, "out", out, "Output CSV")->required();
    align.add(app);
  }

  void run(Stage& stage) {
    stage("configuration");
    const AlignmentConfig cfg = align.resolve();
    std::vector<Index> task_sizes;
    for (const auto& s : split_list(sizes)) {
      const auto v = csv::parse_int(s);
      if (!v || *v < 2) throw ConfigError("--sizes entries must be integers >= 2, got '" + s + "'");
      task_sizes.push_back(static_cast<Index>(*v));
    }
    if (task_sizes.empty()) throw ConfigError("--sizes is empty");
    auto task_spec = [&](Index m) {
      TwoDomainTaskSpec t;
      t.classes = classes;
      t.source_samples = t.target_samples = m;
      t.source_features = t.target_features = features;
      t.seed = seed;
      return t;
    };
    const SplitSpec split{20, 3, seed, 0};

    if (!sweep_parameter.empty()) {
      std::vector<double> grid;
      for (const auto& s : split_list(values)) {
        const auto v = csv::parse_double(s);
        if (!v) throw ConfigError("--values entries must be numbers, got '" + s + "'");
        grid.push_back(*v);
      }
      if (grid.empty()) throw ConfigError("--sweep needs --values");
      stage("sweep");
      const TwoDomainTask task = make_two_domain_task(task_spec(task_sizes.front()));
      const auto rows = sweep(task.source, task.target, split, cfg, splits, parse_sweep_parameter(sweep_parameter),
                              grid);
      stage("writing output");
      auto o = open_output(out);
      write_sweep_csv(o, rows);
      write_sweep_csv(std::cout, rows);
      return;
    }

    std::vector<Method> method_list;
    for (const auto& m : split_list(methods)) method_list.push_back(parse_method(m));
    if (method_list.empty()) throw ConfigError("--methods is empty");
    stage("task generation");
    std::vector<BenchmarkTask> tasks;
    for (const Index m : task_sizes) tasks.push_back(make_benchmark_task(task_spec(m), split));
    stage("timing");
    const auto rows = benchmark_runtime(tasks, method_list, cfg);
    stage("writing output");
    auto o = open_output(out);
    write_timings_csv(o, rows);
    write_timings_csv(std::cout, rows);
  }
};

// embed -----------------------------------------------------------------------------

struct EmbedCommand {
  std::string model_dir, input, domain = "target", label_column, out;

  void add(CLI::App& root) {
    CLI::App* app = root.add_subcommand("embed", "Embed unseen samples with a saved model");
    flag(app, "model", model_dir, "Model directory written by 'align'")->required()->check(CLI::ExistingDirectory);
    flag(app, "input", input, "CSV of samples in the domain's raw feature space")
        ->required()
        ->check(CLI::ExistingFile);
    flag(app, "domain", domain, "Domain of the samples")->check(CLI::IsMember({"source", "target"}));
    flag(app, "label-column", label_column, "Column excluded from the features");
    flag(app, "out", out, "Output CSV (z_0..z_{n-1},row)")->required();
  }

  void run(Stage& stage) {
    stage("loading model");
    const AlignmentModel model = load_model(model_dir);
    stage("loading input");
    const DataMatrix x = load_csv(input, optional_string(label_column));
    stage("embedding");
    const Domain d = domain == "source" ? Domain::source : Domain::target;
    Matrix z(x.samples(), model.basis.modes());
    for (Index i = 0; i < x.samples(); ++i) z.row(i) = embed_new_instance(model, x.values.row(i).transpose(), d);
    stage("writing output");
    auto o = open_output(out);
    for (Index j = 0; j < z.cols(); ++j) o << "z_" << j << ',';
    o << "row\n";
    for (Index i = 0; i < z.rows(); ++i) {
      for (Index j = 0; j < z.cols(); ++j) o << csv::format_double(z(i, j)) << ',';
      o << i << '\n';
    }
    std::cout << "embedded " << z.rows() << " samples into " << z.cols() << " dimensions\n";
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Filtered manifold alignment: align, evaluate, synthesize, benchmark and embed.", "fma"};
  app.require_subcommand(1, 1);
  app.get_formatter()->column_width(36);

  AlignCommand align_cmd;
  EvaluateCommand evaluate_cmd;
  SynthCommand synth_cmd;
  BenchmarkCommand benchmark_cmd;
  EmbedCommand embed_cmd;
  align_cmd.add(app);
  evaluate_cmd.add(app);
  synth_cmd.add(app);
  benchmark_cmd.add(app);
  embed_cmd.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  Stage stage;
  try {
    if (command == "align") align_cmd.run(stage);
    else if (command == "evaluate") evaluate_cmd.run(stage);
    else if (command == "synth") synth_cmd.run(stage);
    else if (command == "benchmark") benchmark_cmd.run(stage);
    else embed_cmd.run(stage);
  } catch (const ConfigError& e) {
    std::cerr << "fma " << command << ": usage error during " << stage.name << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fma " << command << ": failed during " << stage.name << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
