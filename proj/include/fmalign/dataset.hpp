#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fmalign/types.hpp"

namespace fmalign {

/// Samples (rows) by features (columns), optionally labeled.
struct DataMatrix {
  Matrix values;
  std::optional<std::vector<Label>> labels;
  std::string domain_id;

  [[nodiscard]] Index samples() const { return values.rows(); }
  [[nodiscard]] Index features() const { return values.cols(); }
  [[nodiscard]] bool labeled() const { return labels.has_value(); }

  /// Throws DataError when an entry is non-finite or the label count is wrong.
  void validate() const;
};

/// Reads a CSV dataset. When `label_column` is given, that column supplies the labels
/// (integers; empty or "unlabeled" cells are unlabeled) and is removed from the features.
DataMatrix load_csv(const std::filesystem::path& path,
                    const std::optional<std::string>& label_column = std::nullopt);

/// Reads a label sidecar: one integer per line.
std::vector<Label> load_labels(const std::filesystem::path& path);

/// Per-column affine transform x -> (x - mean) * inv_scale.
struct Standardizer {
  Vector mean;
  /// 1/stddev, or 0 for zero-variance columns.
  Vector inv_scale;

  [[nodiscard]] Matrix apply(const Matrix& x) const;
  [[nodiscard]] Vector apply_row(const Vector& x) const;
  [[nodiscard]] static Standardizer identity(Index features);
};

/// Population mean/variance statistics; zero-variance columns map to zero.
Standardizer fit_standardizer(const Matrix& x);

/// Zero mean, unit (population) variance per column. Requires at least two samples.
DataMatrix standardize(const DataMatrix& x);

struct SplitSpec {
  std::int64_t labeled_per_class_source = 20;
  std::int64_t labeled_per_class_target = 3;
  std::uint64_t seed = 0;
  std::uint64_t split_index = 0;
};

/// Sorted labeled indices grouped by class.
using ClassIndices = std::map<Label, std::vector<Index>>;

struct Split {
  ClassIndices source;
  ClassIndices target;

  [[nodiscard]] std::vector<Index> source_indices() const;
  [[nodiscard]] std::vector<Index> target_indices() const;
};

/// Draws `count` samples per class uniformly without replacement. Integer-only and
/// deterministic in (seed, split_index, domain, class).
ClassIndices sample_per_class(const std::vector<Label>& labels, std::int64_t count,
                              std::uint64_t seed, std::uint64_t split_index, Domain domain);

Split make_split(const DataMatrix& source, const DataMatrix& target, const SplitSpec& spec);

// Synthetic manifolds ------------------------------------------------------

struct ManifoldSample {
  DataMatrix points;
  /// Position along the intrinsic one-dimensional coordinate t.
  Vector intrinsic;
};

enum class Manifold : std::uint8_t { swiss_roll, s_curve };

/// (t cos t, h, t sin t) with t in [1.5 pi, 4.5 pi], h in [0, 21].
ManifoldSample make_swiss_roll(Index count, double noise, std::uint64_t seed);

/// (sin t, h, sign(t)(cos t - 1)) with t in [-1.5 pi, 1.5 pi], h in [0, 2].
ManifoldSample make_s_curve(Index count, double noise, std::uint64_t seed);

ManifoldSample make_manifold(Manifold kind, Index count, double noise, std::uint64_t seed);

/// RMS distance of the noiseless surface from its centroid; the unit for relative noise.
double surface_scale(Manifold kind);

/// Labeled two-domain classification task sharing a latent class structure.
struct TwoDomainTaskSpec {
  Index classes = 10;
  Index source_samples = 1000;
  Index target_samples = 1000;
  Index latent_dim = 8;
  Index source_features = 50;
  Index target_features = 50;
  /// Distance scale between latent class centers relative to within-class spread.
  double separation = 1.5;
  double feature_noise = 0.3;
  std::uint64_t seed = 0;
};

struct TwoDomainTask {
  DataMatrix source;
  DataMatrix target;
};

TwoDomainTask make_two_domain_task(const TwoDomainTaskSpec& spec);

/// Rows `rows` of `x` with their labels.
DataMatrix select_rows(const DataMatrix& x, const std::vector<Index>& rows);

}  // namespace fmalign
