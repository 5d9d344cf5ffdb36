#include "hotmv/nn.hpp"

#include <cmath>

#include "hotmv/error.hpp"

namespace hotmv {

namespace {

std::string shape_str(Index r, Index c) { return std::to_string(r) + "x" + std::to_string(c); }

Matrix leaky_relu(const Matrix& x) {
  return x.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
}

Matrix leaky_relu_grad(const Matrix& pre, const Matrix& grad) {
  return grad.binaryExpr(pre, [](double g, double v) { return v > 0.0 ? g : kLeakySlope * g; });
}

}  // namespace

Matrix scaled_uniform(Index rows, Index cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix out(rows, cols);
  // Fill column by column so the draw order is fixed.
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = dist(rng);
  return out;
}

Mlp make_mlp(std::span<const Index> widths, std::mt19937_64& rng) {
  if (widths.size() < 2) throw UsageError("make_mlp: need at least input and output widths");
  Mlp mlp;
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    if (widths[l] < 1 || widths[l + 1] < 1) throw UsageError("make_mlp: widths must be positive");
    mlp.layers.push_back({scaled_uniform(widths[l + 1], widths[l], rng), Vector::Zero(widths[l + 1])});
  }
  return mlp;
}

Mlp zeros_like(const Mlp& mlp) {
  Mlp out;
  for (const auto& layer : mlp.layers) {
    out.layers.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                          Vector::Zero(layer.bias.size())});
  }
  return out;
}

MlpForward mlp_forward(const Mlp& mlp, const Matrix& x) {
  if (mlp.layers.empty()) throw UsageError("mlp_forward: network has no layers");
  if (x.cols() < 1) throw UsageError("mlp_forward: empty batch");
  MlpForward out;
  Matrix h = x;
  for (size_t l = 0; l < mlp.layers.size(); ++l) {
    const auto& layer = mlp.layers[l];
    if (layer.weight.cols() != h.rows() || layer.bias.size() != layer.weight.rows()) {
      throw UsageError("mlp_forward: layer " + std::to_string(l) + " expects input " +
                       std::to_string(layer.weight.cols()) + " but got " + std::to_string(h.rows()));
    }
    out.cache.inputs.push_back(h);
    Matrix pre = layer.weight * h;
    pre.colwise() += layer.bias;
    const bool last = l + 1 == mlp.layers.size();
    h = last ? pre : leaky_relu(pre);
    out.cache.preactivations.push_back(std::move(pre));
  }
  out.output = std::move(h);
  return out;
}

MlpBackward mlp_backward(const Mlp& mlp, const MlpCache& cache, const Matrix& grad_output) {
  const size_t n = mlp.layers.size();
  if (cache.inputs.size() != n || cache.preactivations.size() != n || n == 0) {
    throw UsageError("mlp_backward: cache does not belong to this network");
  }
  for (size_t l = 0; l < n; ++l) {
    if (cache.inputs[l].rows() != mlp.layers[l].weight.cols() ||
        cache.preactivations[l].rows() != mlp.layers[l].weight.rows()) {
      throw UsageError("mlp_backward: stale cache at layer " + std::to_string(l));
    }
  }
  const auto& last = cache.preactivations.back();
  if (grad_output.rows() != last.rows() || grad_output.cols() != last.cols()) {
    throw UsageError("mlp_backward: grad_output is " + shape_str(grad_output.rows(), grad_output.cols()) +
                     ", expected " + shape_str(last.rows(), last.cols()));
  }

  MlpBackward out;
  out.grads.layers.resize(n);
  Matrix g = grad_output;
  for (size_t l = n; l-- > 0;) {
    if (l + 1 != n) g = leaky_relu_grad(cache.preactivations[l], g);
    out.grads.layers[l].weight = g * cache.inputs[l].transpose();
    out.grads.layers[l].bias = g.rowwise().sum();
    g = mlp.layers[l].weight.transpose() * g;
  }
  out.grad_input = std::move(g);
  return out;
}

LossAndGrad softmax_xent(const Matrix& logits, std::span<const int> labels) {
  const Index batch = logits.cols();
  if (batch < 1) throw UsageError("softmax_xent: empty batch");
  if (static_cast<Index>(labels.size()) != batch) {
    throw UsageError("softmax_xent: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(batch) + " columns");
  }
  LossAndGrad out;
  out.grad.resize(logits.rows(), batch);
  for (Index j = 0; j < batch; ++j) {
    const int y = labels[static_cast<size_t>(j)];
    if (y < 0 || y >= logits.rows()) {
      throw UsageError("softmax_xent: label " + std::to_string(y) + " outside [0, " +
                       std::to_string(logits.rows()) + ")");
    }
    const double mx = logits.col(j).maxCoeff();
    const Vector e = (logits.col(j).array() - mx).exp();
    const double z = e.sum();
    out.loss += std::log(z) + mx - logits(y, j);
    out.grad.col(j) = e / z;
    out.grad(y, j) -= 1.0;
  }
  const double inv_b = 1.0 / static_cast<double>(batch);
  out.loss *= inv_b;
  out.grad *= inv_b;
  return out;
}

ReconstructionResult reconstruction_loss(const DecoderStack& dec, const std::vector<Matrix>& latents,
                                         const std::vector<Matrix>& inputs) {
  if (dec.mlps.size() != latents.size() || latents.size() != inputs.size()) {
    throw UsageError("reconstruction_loss: view counts differ");
  }
  ReconstructionResult out;
  for (size_t s = 0; s < latents.size(); ++s) {
    if (dec.mlps[s].output_dim() != inputs[s].rows() || latents[s].cols() != inputs[s].cols()) {
      throw UsageError("reconstruction_loss: view " + std::to_string(s) +
                       " decoder/output shape mismatch");
    }
    const auto fwd = mlp_forward(dec.mlps[s], latents[s]);
    const Matrix diff = fwd.output - inputs[s];
    const double scale = 1.0 / static_cast<double>(diff.size());
    out.loss += scale * diff.squaredNorm();
    auto back = mlp_backward(dec.mlps[s], fwd.cache, 2.0 * scale * diff);
    out.grad_decoders.push_back(std::move(back.grads));
    out.grad_latents.push_back(std::move(back.grad_input));
  }
  return out;
}

void append_tensors(Mlp& mlp, const std::string& prefix, std::vector<NamedTensor>& out) {
  for (size_t l = 0; l < mlp.layers.size(); ++l) {
    auto& layer = mlp.layers[l];
    const std::string base = prefix + "/fc" + std::to_string(l);
    out.push_back({base + "/w", Eigen::Map<Matrix>(layer.weight.data(), layer.weight.rows(),
                                                   layer.weight.cols())});
    out.push_back({base + "/b", Eigen::Map<Matrix>(layer.bias.data(), layer.bias.size(), 1)});
  }
}

void adam_step(AdamState& state, std::vector<NamedTensor>& params,
               const std::vector<NamedTensor>& grads) {
  if (params.size() != grads.size()) throw UsageError("adam_step: parameter/gradient count mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    const auto& g = grads[i];
    if (p.name != g.name || p.data.rows() != g.data.rows() || p.data.cols() != g.data.cols()) {
      throw UsageError("adam_step: gradient '" + g.name + "' does not match parameter '" + p.name + "'");
    }
    if (!g.data.allFinite()) throw NumericalError("adam_step: non-finite gradient in '" + g.name + "'");
  }

  const auto& opt = state.options;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  for (size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    const auto& g = grads[i];
    auto [it, inserted] = state.moments.try_emplace(p.name);
    auto& [m, v] = it->second;
    if (inserted) {
      m = Matrix::Zero(p.data.rows(), p.data.cols());
      v = Matrix::Zero(p.data.rows(), p.data.cols());
    } else if (m.rows() != p.data.rows() || m.cols() != p.data.cols()) {
      throw UsageError("adam_step: shape of '" + p.name + "' changed between steps");
    }
    m = opt.beta1 * m + (1.0 - opt.beta1) * g.data;
    v = opt.beta2 * v + (1.0 - opt.beta2) * g.data.cwiseProduct(g.data);
    p.data.array() -= opt.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + opt.eps);
  }
}

}  // namespace hotmv
