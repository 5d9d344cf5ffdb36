#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "hotmv/regularizers.hpp"

namespace hotmv {

/// Every training hyperparameter. Defaults are the published settings.
struct TrainConfig {
  int epochs = 100;
  double lr = 0.001;
  Index batch_size = 400;
  Index hidden_width = 64;
  Index encoder_out = 20;
  Index shared_dim = 10;
  double tau = 0.01;
  double gamma = 0.1;
  double alpha = 0.01;
  int sinkhorn_iters = 20;
  double beta = 0.1;
  Index num_projections = 3;
  int num_clusters = 3;
  RegularizerKind regularizer = RegularizerKind::kHotReference;
  bool use_autoencoder = false;
  int head_epochs = 500;  // classifier fitting on frozen unsupervised encoders
  std::uint64_t seed = 0;

  /// Throws UsageError on non-positive sizes or negative weights.
  void validate() const;
};

/// Applies one key=value setting. Unknown keys and unparsable values throw
/// UsageError.
void set_config_value(TrainConfig& config, const std::string& key, const std::string& value);

/// Flat text file: one `key = value` per line, '#' starts a comment.
TrainConfig parse_config_text(const std::string& text, TrainConfig base = {});
TrainConfig load_config_file(const std::filesystem::path& path, TrainConfig base = {});

/// Every key with its resolved value, in a fixed order; parse_config_text
/// round-trips it.
std::string config_to_text(const TrainConfig& config);
std::map<std::string, std::string> config_to_map(const TrainConfig& config);

}  // namespace hotmv
