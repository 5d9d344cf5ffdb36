#pragma once

// Alternating optimization: per step the transport plan is solved on the
// current encoder outputs, then held fixed while Adam updates every trainable
// tensor.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hotmv/checkpoint.hpp"
#include "hotmv/config.hpp"
#include "hotmv/data.hpp"
#include "hotmv/nn.hpp"
#include "hotmv/regularizers.hpp"

namespace hotmv {

struct Model {
  EncoderStack encoders;
  std::optional<ClassifierHead> classifier;
  std::optional<DecoderStack> decoders;
  std::optional<ReferenceSet> refs;

  size_t num_views() const { return encoders.num_views(); }
};

/// Fresh parameters for views of the given input dims. num_classes == 0
/// leaves out the classifier.
Model init_model(const std::vector<Index>& view_dims, int num_classes, const TrainConfig& config);

/// Parameter views in a fixed order; the same order for a model and its
/// gradient container.
std::vector<NamedTensor> model_tensors(Model& model);
/// A model of the same shape with every tensor zero.
Model zero_grads(const Model& model);

std::vector<NamedMatrix> model_to_named(const Model& model);
Model model_from_named(const std::vector<NamedMatrix>& tensors);

struct EpochRecord {
  int epoch = 0;
  int steps = 0;
  double task_loss = 0.0;   // cross-entropy on labeled batches
  double multi_view = 0.0;  // R_M including its alpha term
  double single_view = 0.0; // R_S (reconstruction)
  double objective = 0.0;   // task + gamma * R_M + tau * R_S (or R_M alone)
  std::optional<double> validation;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::optional<TransportPlan> initial_plan;
  std::optional<TransportPlan> final_plan;
  int selected_epoch = -1;  // -1 when no validation data was given
  double wall_seconds = 0.0;
  TrainConfig config;
};

/// One JSON object per epoch, newline-terminated. Wall-clock is left out so
/// that reruns are byte-identical.
std::string report_to_jsonl(const TrainReport& report);

/// Called after every epoch with the epoch record and the current model.
using EpochCallback = std::function<void(const EpochRecord&, const Model&)>;

struct TrainResult {
  Model model;
  TrainReport report;
};

/// Unsupervised training of encoders (and references) by the configured
/// multi-view regularizer. heldout, if given, picks the checkpoint with the
/// lowest R_M and supplies the batch for the final plan.
TrainResult train_unsupervised(const MultiViewDataset& train, const TrainConfig& config,
                               const MultiViewDataset* heldout = nullptr,
                               const EpochCallback& on_epoch = {});

/// Cross-entropy on the labeled aligned pool plus gamma * R_M on unlabeled
/// batches plus tau * R_S when the autoencoder is enabled. split.valid picks
/// the checkpoint with the lowest validation cross-entropy.
TrainResult train_semisupervised(const DataSplit& split, const TrainConfig& config,
                                 const EpochCallback& on_epoch = {});

/// Fits the classifier head by Adam on frozen encoders (config.head_epochs
/// full-batch steps).
void fit_classifier(Model& model, const MultiViewDataset& labeled, const TrainConfig& config);

/// Argmax of the classifier on concatenated encoder outputs. The dataset must
/// be aligned and have one view per encoder.
std::vector<int> predict(const Model& model, const MultiViewDataset& samples);

/// Labeled and unlabeled pools merged into one unaligned, unlabeled dataset.
MultiViewDataset unsupervised_pool(const DataSplit& split);

/// Projected latents U_s f_s(X_s) of every sample (d x N per view).
std::vector<Matrix> project_views(const Model& model, const MultiViewDataset& data);

}  // namespace hotmv
