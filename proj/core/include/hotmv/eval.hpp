#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hotmv/config.hpp"
#include "hotmv/data.hpp"
#include "hotmv/ot.hpp"

namespace hotmv {

/// Fraction of positions where preds and truth agree.
double accuracy(std::span<const int> preds, std::span<const int> truth);

/// Adjusted Rand index between two labelings of the same items.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

/// Row argmax of the plan, ties to the lowest column.
std::vector<int> assign_views(const TransportPlan& plan);

/// ARI between the argmax view assignment and the planted partition.
double cluster_recovery(const TransportPlan& plan, std::span<const int> planted);

enum class AblationMode { kSemisupervised, kUnsupervised };

std::string_view ablation_mode_name(AblationMode mode);
AblationMode parse_ablation_mode(std::string_view name);

struct AblationOptions {
  int trials = 1;
  AblationMode mode = AblationMode::kSemisupervised;
  SplitSpec split;  // split.seed is replaced by the trial seed
};

struct AblationRow {
  std::string removed;  // "All" for the baseline row
  int view = -1;        // removed view index, -1 for "All"
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single trial
  std::vector<double> accuracies;
};

struct AblationReport {
  std::vector<AblationRow> rows;  // "All" first, then one row per view
  int trials = 0;
  AblationMode mode = AblationMode::kSemisupervised;

  /// Index of the view whose removal gives the lowest mean accuracy.
  int most_damaging() const;
};

/// Trial t uses seed config.seed + t for the split, the initialization and
/// the batching; every removal sees the same seeds.
AblationReport run_ablation(const MultiViewDataset& dataset, const TrainConfig& config,
                            const AblationOptions& options);

/// Test accuracy of one train/evaluate cycle on a fresh split.
double train_and_score(const MultiViewDataset& dataset, const TrainConfig& config, AblationMode mode,
                       SplitSpec split);

std::string ablation_to_json(const AblationReport& report);

struct PlanTable {
  Matrix weights;
  std::vector<std::string> row_names;
  std::vector<std::string> col_names;
};

/// Writes path (CSV with a header row and a label column) and path with a
/// .json extension (plan serialization plus row_names and col_names).
/// Empty col_names get defaults: the row names for square pairwise plans,
/// ref0..refK-1 otherwise.
void export_plan_heatmap(const TransportPlan& plan, const std::vector<std::string>& row_names,
                         const std::filesystem::path& path, std::vector<std::string> col_names = {});

PlanTable read_plan_heatmap(const std::filesystem::path& path);

}  // namespace hotmv
