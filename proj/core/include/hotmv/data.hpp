#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hotmv/ot.hpp"

namespace hotmv {

/// S views of the same N objects. Each view is an N x D_s matrix with one
/// sample per row. aligned == false means row n of one view need not describe
/// the same object as row n of another.
struct MultiViewDataset {
  std::string name;
  std::vector<std::string> view_names;
  std::vector<Matrix> views;
  std::optional<std::vector<int>> labels;
  int num_classes = 0;
  bool aligned = true;
  std::string provenance;
  std::optional<std::vector<int>> planted_partition;  // view -> planted cluster

  size_t num_views() const { return views.size(); }
  Index num_samples() const { return views.empty() ? 0 : views.front().rows(); }
  Index view_dim(size_t s) const { return views[s].cols(); }

  /// Throws DataError if views disagree on N or labels are inconsistent.
  void validate() const;
};

/// Per-feature z-scoring of every view. Constant features are only centered.
void standardize(MultiViewDataset& dataset);

/// Reads a manifest {name, views: [{name, file, dim}], labels_file?,
/// num_classes?, planted_partition?}. Paths are relative to the manifest.
MultiViewDataset load_manifest(const std::filesystem::path& path, bool standardize_views = true);

/// Writes manifest.json, one CSV per view and labels.csv into dir.
void write_dataset(const MultiViewDataset& dataset, const std::filesystem::path& dir);

/// Comma-separated decimals, no header. Throws DataError with file:line on
/// ragged rows or non-numeric cells.
Matrix read_csv_matrix(const std::filesystem::path& path);
void write_csv_matrix(const std::filesystem::path& path, const Matrix& m);

struct SplitSpec {
  double train = 0.60;
  double valid = 0.20;
  double test = 0.20;
  double labeled_fraction = 0.05;  // of the training part
  std::uint64_t seed = 0;
  bool unalign = true;  // false keeps the unlabeled pool row-aligned
};

struct DataSplit {
  MultiViewDataset labeled;    // aligned, labeled
  MultiViewDataset unlabeled;  // each view row-permuted independently, no labels
  MultiViewDataset valid;
  MultiViewDataset test;

  // Original row indices. unlabeled_rows[s][i] is the source row of row i in
  // view s of the unlabeled pool.
  std::vector<Index> labeled_rows;
  std::vector<std::vector<Index>> unlabeled_rows;
  std::vector<Index> valid_rows;
  std::vector<Index> test_rows;
};

/// Stratified train/valid/test split; a labeled aligned subset of the
/// training part is kept and the rest is unaligned per view.
DataSplit split_and_unalign(const MultiViewDataset& dataset, const SplitSpec& spec);

/// Rows `rows` of every view, keeping labels and metadata.
MultiViewDataset select_rows(const MultiViewDataset& dataset, const std::vector<Index>& rows);
/// The dataset without view `view`.
MultiViewDataset drop_view(const MultiViewDataset& dataset, size_t view);

/// Planted-cluster generator. Planted cluster k owns a latent code per sample:
/// the mean of group (label mod m_k) plus isotropic noise. View s observes
/// A_s * code_{cluster(s)} + noise with its own fixed random A_s. Distinct
/// moduli give clusters distinct blob-weight profiles, which no per-view
/// encoder can map onto each other; modulus 1 makes a cluster pure noise.
struct SynthSpec {
  std::vector<int> assignment = {0, 0, 1, 1, 2, 2};  // view -> planted cluster
  std::vector<int> moduli;                            // empty: m_k = k + 2
  Index latent_dim = 4;
  Index samples = 2000;
  int classes = 6;
  std::vector<Index> view_dims;  // empty: every view gets default_view_dim
  Index default_view_dim = 20;
  double class_separation = 2.0;
  double latent_noise = 1.0;
  double noise = 0.1;
  std::uint64_t seed = 0;

  int num_clusters() const;
  int modulus(int cluster) const;
};

MultiViewDataset generate_synthetic(const SynthSpec& spec);

}  // namespace hotmv
