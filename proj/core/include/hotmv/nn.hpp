#pragma once

// Small differentiable building blocks with explicit forward and backward
// passes. Batches are column-major: a D x B matrix holds B samples.

#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hotmv/ot.hpp"

namespace hotmv {

inline constexpr double kLeakySlope = 0.01;

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

/// Affine layers with leaky-ReLU between them and a linear last layer.
struct Mlp {
  std::vector<DenseLayer> layers;

  Index input_dim() const { return layers.empty() ? 0 : layers.front().weight.cols(); }
  Index output_dim() const { return layers.empty() ? 0 : layers.back().weight.rows(); }
};

/// widths = {in, hidden..., out}. Weights uniform in +-sqrt(6 / (fan_in + fan_out)),
/// biases zero.
Mlp make_mlp(std::span<const Index> widths, std::mt19937_64& rng);
Matrix scaled_uniform(Index rows, Index cols, std::mt19937_64& rng);
Mlp zeros_like(const Mlp& mlp);

struct MlpCache {
  std::vector<Matrix> inputs;       // input of each layer
  std::vector<Matrix> preactivations;
};

struct MlpForward {
  Matrix output;
  MlpCache cache;
};

MlpForward mlp_forward(const Mlp& mlp, const Matrix& x);

struct MlpBackward {
  Mlp grads;
  Matrix grad_input;
};

/// Reverse pass for a cache produced by mlp_forward on the same network.
MlpBackward mlp_backward(const Mlp& mlp, const MlpCache& cache, const Matrix& grad_output);

/// Per view s: f_s (an Mlp) followed by the linear map U_s into the shared
/// d-dimensional space.
struct EncoderStack {
  std::vector<Mlp> mlps;
  std::vector<Matrix> projections;  // d x d_s

  size_t num_views() const { return mlps.size(); }
  Index shared_dim() const { return projections.empty() ? 0 : projections.front().rows(); }
  Index output_dim() const { return mlps.empty() ? 0 : mlps.front().output_dim(); }
};

/// Linear softmax classifier on the concatenated encoder outputs.
struct ClassifierHead {
  Matrix weight;  // classes x (S * d_s)
  Vector bias;

  Index num_classes() const { return weight.rows(); }
};

/// Per view decoder R^{d_s} -> R^{D_s} used for the reconstruction regularizer.
struct DecoderStack {
  std::vector<Mlp> mlps;
};

struct LossAndGrad {
  double loss = 0.0;
  Matrix grad;
};

/// Mean cross-entropy over the batch; grad = (softmax - onehot) / B.
LossAndGrad softmax_xent(const Matrix& logits, std::span<const int> labels);

struct ReconstructionResult {
  double loss = 0.0;
  std::vector<Mlp> grad_decoders;
  std::vector<Matrix> grad_latents;
};

/// Sum over views of the mean squared reconstruction error (mean over all
/// D_s x B entries).
ReconstructionResult reconstruction_loss(const DecoderStack& dec, const std::vector<Matrix>& latents,
                                         const std::vector<Matrix>& inputs);

/// A named view onto one parameter (or gradient) tensor. Vectors appear as
/// n x 1 matrices.
struct NamedTensor {
  std::string name;
  Eigen::Map<Matrix> data;
};

void append_tensors(Mlp& mlp, const std::string& prefix, std::vector<NamedTensor>& out);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamOptions options;
  long step = 0;
  std::map<std::string, std::pair<Matrix, Matrix>> moments;  // name -> (m, v)
};

/// One bias-corrected Adam update. params and grads are matched by position
/// and must agree in name and shape. Throws NumericalError naming the tensor
/// when a gradient is not finite; nothing is updated in that case.
void adam_step(AdamState& state, std::vector<NamedTensor>& params,
               const std::vector<NamedTensor>& grads);

}  // namespace hotmv
