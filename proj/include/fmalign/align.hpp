#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "fmalign/dataset.hpp"
#include "fmalign/graph.hpp"
#include "fmalign/spectral.hpp"
#include "fmalign/update.hpp"

namespace fmalign {

enum class AlignmentMode : std::uint8_t { instance, feature };

const char* to_string(AlignmentMode mode);
AlignmentMode parse_alignment_mode(const std::string& text);
const char* to_string(SimilarityKind kind);
SimilarityKind parse_similarity(const std::string& text);

struct AlignmentConfig {
  Index k = 12;
  double alpha = 0.2;
  /// Final joint dimension; each domain contributes dim / 2 filtered modes.
  Index dim = 40;
  double skip_tol = kSkipTol;
  AlignmentMode mode = AlignmentMode::instance;
  SimilarityKind similarity = SimilarityKind::cosine;
  /// Standardize each domain before building graphs; parameters are kept in the model.
  bool standardize = true;
  /// Keep each domain's zero modes in the basis through the correspondence update and
  /// drop zero modes only afterwards. When false they are dropped before the update.
  bool carry_trivial_modes = true;
  Index dense_limit = 1500;

  /// Throws ConfigError unless dim is even and >= 2, k >= 1, alpha > 0, skip_tol >= 0.
  void validate() const;
  [[nodiscard]] Index modes_per_domain() const { return dim / 2; }
  [[nodiscard]] GraphOptions graph_options() const { return {k, alpha, similarity}; }
  [[nodiscard]] EigenOptions eigen_options() const;
};

/// Wall-clock seconds per alignment stage.
struct PhaseTimes {
  double graph = 0.0;
  double eigensolve = 0.0;
  double update = 0.0;
};

/// One domain after graph construction and eigen-filtering.
struct FilteredDomain {
  SimilarityGraph graph;
  /// Filtered eigenpairs (trivial modes first when carried).
  SpectralBasis basis;
  /// Regularized degrees (instance mode).
  Vector degrees;
  /// (X^T D X)^{-1/2} with eigenvalue floor (feature mode); empty in instance mode.
  Matrix whitening;
  /// Features after standardization, as used to build the graph.
  Matrix features;
  Standardizer standardizer;
  PhaseTimes times;
};

struct AlignmentModel {
  AlignmentConfig config;
  std::array<Standardizer, 2> standardizers;
  /// Per-sample joint coordinates, source rows first.
  Embedding embedding;
  /// Retained post-update eigenpairs. Rows are samples (instance) or features (feature).
  SpectralBasis basis;
  /// Feature mode: maps standardized features of each domain into the joint space.
  std::array<Matrix, 2> feature_map;
  // Instance-mode state needed for inductive embedding.
  std::array<Matrix, 2> training;
  std::array<Vector, 2> degrees;
  /// Zero modes of the joint operator, one per connected component.
  Matrix trivial;
  std::array<double, 2> heat_sigma2{0.0, 0.0};
  /// Share of the correspondence update lying outside the filtered basis.
  double projection_defect = 0.0;
  PhaseTimes times;

  [[nodiscard]] Index rows(Domain d) const;
  [[nodiscard]] Index features(Domain d) const;
};

/// Graph and filtered eigenbasis for one domain. `modes` nontrivial modes are kept
/// (kAllModes keeps all of them).
FilteredDomain filter_domain(const DataMatrix& x, const AlignmentConfig& cfg, Index modes);

/// Same, on an explicit graph; `features` is only used in feature mode.
FilteredDomain filter_domain(const SimilarityGraph& graph, const Matrix& features, const AlignmentConfig& cfg,
                             Index modes);

/// Correspondence update of two filtered domains; keeps `output_dim` modes
/// (kAllModes keeps every mode above skip_tol).
AlignmentModel fuse(const FilteredDomain& source, const FilteredDomain& target,
                    const std::vector<Correspondence>& pairs, const AlignmentConfig& cfg, Index output_dim);

/// Instance-level filtered manifold alignment.
AlignmentModel fma_instance(const DataMatrix& source, const DataMatrix& target,
                            const std::vector<Correspondence>& pairs, const AlignmentConfig& cfg);

/// Feature-level (linear) filtered manifold alignment.
AlignmentModel fma_feature(const DataMatrix& source, const DataMatrix& target,
                           const std::vector<Correspondence>& pairs, const AlignmentConfig& cfg);

/// Dispatches on cfg.mode.
AlignmentModel align(const DataMatrix& source, const DataMatrix& target, const std::vector<Correspondence>& pairs,
                     const AlignmentConfig& cfg);

/// Edge from an out-of-sample point to a training sample of its domain.
struct NeighborEdge {
  Index index;
  double weight;
};

/// Joint coordinates of an unseen sample given in raw (unstandardized) features.
Vector embed_new_instance(const AlignmentModel& model, const Vector& x, Domain domain);

/// Instance mode: coordinates of a new node attached to training samples by `edges`.
/// The retained basis is extended by the new node's direction and updated with the
/// incidence matrix of the edges; the model is not modified.
Vector embed_new_node(const AlignmentModel& model, const std::vector<NeighborEdge>& edges, Domain domain);

/// Neighbour edges for a standardized query, weighted like training edges.
std::vector<NeighborEdge> neighbor_edges(const AlignmentModel& model, const Vector& standardized, Domain domain);

// Model directory -----------------------------------------------------------

void save_model(const AlignmentModel& model, const std::filesystem::path& dir);
AlignmentModel load_model(const std::filesystem::path& dir);

}  // namespace fmalign
