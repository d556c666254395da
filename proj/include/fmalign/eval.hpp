#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fmalign/align.hpp"
#include "fmalign/dataset.hpp"

namespace fmalign {

// Classifier -------------------------------------------------------------------

struct ClassifierOptions {
  double l2 = 1e-4;
  int max_iterations = 500;
  /// Stop once the largest gradient component falls below this.
  double gradient_tol = 1e-6;
};

/// Multinomial logistic regression. Row j < dim of `weights` multiplies feature j; the
/// last row is the bias.
struct ClassifierModel {
  Matrix weights;
  /// Sorted class labels, one per column of `weights`.
  std::vector<Label> classes;
  /// Objective after every accepted step, starting with the initial point.
  std::vector<double> objective_trace;
  int iterations = 0;
};

/// Minimizes mean cross-entropy + (l2/2)|W|^2 (bias unpenalized) with L-BFGS and a
/// backtracking line search from W = 0.
ClassifierModel train_logistic(const Matrix& z, const std::vector<Label>& labels, const ClassifierOptions& options = {});

/// Mean cross-entropy plus penalty at `weights`, for the given sorted classes.
double logistic_objective(const Matrix& weights, const Matrix& z, const std::vector<Label>& labels,
                          const std::vector<Label>& classes, double l2);

/// Class scores (samples x classes) before the softmax.
Matrix decision_scores(const ClassifierModel& model, const Matrix& z);
std::vector<Label> predict(const ClassifierModel& model, const Matrix& z);

/// Fraction of positions where predicted equals truth.
double accuracy(const std::vector<Label>& predicted, const std::vector<Label>& truth);

/// Spearman rank correlation with average ranks for ties.
double spearman(const Vector& a, const Vector& b);

// Experiments --------------------------------------------------------------------

struct ExperimentTimes {
  double graph = 0.0;
  double eigensolve = 0.0;
  double update = 0.0;
  double classify = 0.0;
};

struct SplitOutcome {
  std::uint64_t split_index = 0;
  double accuracy = 0.0;
  std::vector<Label> predictions;
  ExperimentTimes times;
};

struct ExperimentResult {
  std::string task;
  std::string method;
  std::vector<SplitOutcome> splits;
  double accuracy_mean = 0.0;
  /// Population standard deviation over splits.
  double accuracy_std = 0.0;
};

/// One split on already-filtered domains: correspondences from the labeled subsets,
/// correspondence update, classifier on the labeled source rows, accuracy on every
/// target row. Target labels outside `split.target` only enter the accuracy count.
SplitOutcome run_split(const FilteredDomain& source, const FilteredDomain& target, const DataMatrix& source_data,
                       const DataMatrix& target_data, const Split& split, const AlignmentConfig& cfg,
                       const ClassifierOptions& classifier = {});

/// Splits split_index = spec.split_index .. spec.split_index + splits - 1.
ExperimentResult evaluate_task(const DataMatrix& source, const DataMatrix& target, const SplitSpec& spec,
                               const AlignmentConfig& cfg, std::int64_t splits,
                               const ClassifierOptions& classifier = {});

enum class SweepParameter : std::uint8_t { dim, alpha, k };

const char* to_string(SweepParameter p);
SweepParameter parse_sweep_parameter(const std::string& text);

struct SweepRow {
  SweepParameter parameter;
  double value;
  double accuracy_mean;
  double accuracy_std;
};

/// evaluate_task once per value with one parameter of `base` replaced.
std::vector<SweepRow> sweep(const DataMatrix& source, const DataMatrix& target, const SplitSpec& spec,
                            const AlignmentConfig& base, std::int64_t splits, SweepParameter parameter,
                            const std::vector<double>& values, const ClassifierOptions& classifier = {});

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

enum class Method : std::uint8_t { fma_instance, fma_feature, sma };

const char* to_string(Method m);
Method parse_method(const std::string& text);

struct BenchmarkTask {
  std::string name;
  DataMatrix source;
  DataMatrix target;
  std::vector<Correspondence> pairs;
};

struct TimingRow {
  std::string task;
  Method method;
  double seconds;
  PhaseTimes phases;
};

/// Wall-clock alignment time per (task, method), each from raw data, run sequentially.
std::vector<TimingRow> benchmark_runtime(const std::vector<BenchmarkTask>& tasks, const std::vector<Method>& methods,
                                         const AlignmentConfig& cfg);

/// Alignment with the dense one-step solve, standardization and graphs as in `cfg`.
SmaResult sma_align(const DataMatrix& source, const DataMatrix& target, const std::vector<Correspondence>& pairs,
                    const AlignmentConfig& cfg);

/// Labeled synthetic task with correspondences from one split, for timing runs.
BenchmarkTask make_benchmark_task(const TwoDomainTaskSpec& spec, const SplitSpec& split);

// Manifold pair demo ---------------------------------------------------------------

struct DemoSpec {
  Index count = 400;
  Index pairs = 40;
  Index k = 5;
  /// Alignment dimension; the demo reads the first joint coordinate.
  Index dim = 2;
  /// Noise standard deviation as a fraction of surface_scale.
  double noise = 0.05;
  std::uint64_t seed = 0;
};

/// Swiss roll (source) and S-curve (target) with correspondences between points of
/// matching normalized intrinsic position.
struct AlignmentDemo {
  ManifoldSample source;
  ManifoldSample target;
  std::vector<Correspondence> pairs;
};

AlignmentDemo make_alignment_demo(const DemoSpec& spec);

struct DemoReport {
  AlignmentModel model;
  /// |Spearman| of the first joint coordinate against the intrinsic parameter.
  double spearman_source = 0.0;
  double spearman_target = 0.0;
  /// Median first-coordinate distance over corresponding pairs and over all cross pairs.
  double median_pair_distance = 0.0;
  double median_cross_distance = 0.0;
};

/// Heat-kernel instance alignment of the demo without standardization.
DemoReport run_alignment_demo(const AlignmentDemo& demo, const DemoSpec& spec);

// Output ---------------------------------------------------------------------------

/// task,method,split,accuracy (deterministic).
void write_results_csv(std::ostream& out, const std::vector<ExperimentResult>& results);
/// task,method,split,graph_s,eigensolve_s,update_s,classify_s.
void write_experiment_timings_csv(std::ostream& out, const std::vector<ExperimentResult>& results);
/// task,method,seconds,graph_s,eigensolve_s,update_s.
void write_timings_csv(std::ostream& out, const std::vector<TimingRow>& rows);

// Suites ---------------------------------------------------------------------------

/// A dataset entry of a suite file. Per-domain overrides replace the suite-wide
/// labeled counts when this domain plays the corresponding role.
struct SuiteDomain {
  std::string name;
  std::filesystem::path path;
  std::optional<std::string> label_column;
  std::optional<std::filesystem::path> labels_path;
  std::optional<std::int64_t> labeled_per_class;
};

struct SuiteTask {
  std::string source;
  std::string target;
  std::optional<AlignmentMode> mode;
};

struct Suite {
  std::map<std::string, SuiteDomain> domains;
  std::vector<SuiteTask> tasks;
};

/// Plain-text suite definition, one entry per line ('#' starts a comment):
///   domain NAME PATH [label_column=COL] [labels=PATH] [labeled_per_class=N]
///   task SOURCE TARGET [mode=instance|feature]
/// Relative paths are resolved against the suite file's directory.
Suite parse_suite(const std::filesystem::path& path);

DataMatrix load_suite_domain(const SuiteDomain& d);

/// Evaluates every task of the suite. A domain's labeled_per_class override applies to
/// whichever role it plays.
std::vector<ExperimentResult> run_suite(const Suite& suite, const SplitSpec& spec, const AlignmentConfig& cfg,
                                        std::int64_t splits, const ClassifierOptions& classifier = {});

}  // namespace fmalign
