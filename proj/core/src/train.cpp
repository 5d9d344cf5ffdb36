#include "hotmv/train.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "hotmv/error.hpp"

namespace hotmv {

namespace {

// Independent random streams derived from the run seed.
enum class Stream : std::uint32_t { kInit = 1, kBatch, kProjection, kLabeled, kHeldout, kHead };

std::mt19937_64 make_stream(std::uint64_t seed, Stream stream, std::uint32_t sub = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), sub};
  return std::mt19937_64(seq);
}

std::vector<Matrix> columns_view(const MultiViewDataset& data) {
  std::vector<Matrix> out;
  out.reserve(data.num_views());
  for (const auto& v : data.views) out.push_back(v.transpose());
  return out;
}

Matrix gather(const Matrix& x, const std::vector<Index>& idx, size_t begin, Index count) {
  Matrix out(x.rows(), count);
  for (Index j = 0; j < count; ++j) out.col(j) = x.col(idx[begin + static_cast<size_t>(j)]);
  return out;
}

/// Per-view index streams: one shared permutation for aligned data,
/// independent permutations otherwise.
class BatchSampler {
 public:
  BatchSampler(Index n, Index batch, size_t views, bool aligned, std::uint64_t seed)
      : n_(n), batch_(batch), aligned_(aligned) {
    const size_t streams = aligned ? 1 : views;
    for (size_t s = 0; s < streams; ++s) {
      rngs_.push_back(make_stream(seed, Stream::kBatch, static_cast<std::uint32_t>(s)));
      order_.emplace_back(static_cast<size_t>(n));
    }
    views_ = views;
  }

  Index steps_per_epoch() const { return n_ / batch_; }

  void shuffle() {
    for (size_t s = 0; s < order_.size(); ++s) {
      std::iota(order_[s].begin(), order_[s].end(), Index{0});
      std::shuffle(order_[s].begin(), order_[s].end(), rngs_[s]);
    }
  }

  std::vector<Matrix> batch(const std::vector<Matrix>& cols, Index step) const {
    std::vector<Matrix> out;
    for (size_t s = 0; s < views_; ++s) {
      const auto& order = order_[aligned_ ? 0 : s];
      out.push_back(gather(cols[s], order, static_cast<size_t>(step * batch_), batch_));
    }
    return out;
  }

 private:
  Index n_;
  Index batch_;
  bool aligned_;
  size_t views_ = 0;
  std::vector<std::mt19937_64> rngs_;
  std::vector<std::vector<Index>> order_;
};

struct EncoderPass {
  std::vector<MlpForward> forward;  // forward[s].output is f_s(X_s)
  std::vector<Matrix> latents;      // U_s f_s(X_s)
};

EncoderPass encode(const EncoderStack& enc, const std::vector<Matrix>& batches) {
  if (batches.size() != enc.num_views()) {
    throw UsageError("model has " + std::to_string(enc.num_views()) + " views but data has " +
                     std::to_string(batches.size()));
  }
  EncoderPass pass;
  for (size_t s = 0; s < batches.size(); ++s) {
    if (batches[s].rows() != enc.mlps[s].input_dim()) {
      throw DataError("view " + std::to_string(s) + " has dimension " + std::to_string(batches[s].rows()) +
                      " but its encoder expects " + std::to_string(enc.mlps[s].input_dim()));
    }
    pass.forward.push_back(mlp_forward(enc.mlps[s], batches[s]));
    pass.latents.push_back(enc.projections[s] * pass.forward.back().output);
  }
  return pass;
}

void accumulate(Mlp& into, const Mlp& add) {
  for (size_t l = 0; l < into.layers.size(); ++l) {
    into.layers[l].weight += add.layers[l].weight;
    into.layers[l].bias += add.layers[l].bias;
  }
}

/// Pushes gradients w.r.t. latents and/or encoder outputs back into grads.
void backprop_encoders(const EncoderStack& enc, const EncoderPass& pass,
                       const std::vector<Matrix>* grad_latents, const std::vector<Matrix>* grad_hidden,
                       EncoderStack& grads) {
  for (size_t s = 0; s < enc.num_views(); ++s) {
    const Matrix& hidden = pass.forward[s].output;
    Matrix gh = Matrix::Zero(hidden.rows(), hidden.cols());
    if (grad_latents != nullptr) {
      grads.projections[s] += (*grad_latents)[s] * hidden.transpose();
      gh += enc.projections[s].transpose() * (*grad_latents)[s];
    }
    if (grad_hidden != nullptr) gh += (*grad_hidden)[s];
    const auto back = mlp_backward(enc.mlps[s], pass.forward[s].cache, gh);
    accumulate(grads.mlps[s], back.grads);
  }
}

Matrix concat_rows(const std::vector<MlpForward>& forward) {
  Index rows = 0;
  for (const auto& f : forward) rows += f.output.rows();
  Matrix out(rows, forward.front().output.cols());
  Index r = 0;
  for (const auto& f : forward) {
    out.middleRows(r, f.output.rows()) = f.output;
    r += f.output.rows();
  }
  return out;
}

RegularizerParams regularizer_params(const TrainConfig& config, bool aligned) {
  return {config.alpha, {config.beta, config.sinkhorn_iters}, aligned};
}

struct LabeledBatch {
  std::vector<Matrix> views;
  std::vector<int> labels;
};

struct StepLosses {
  double task = 0.0;
  double multi_view = 0.0;
  double single_view = 0.0;
};

/// One alternating step. The plan (if any) is solved on pre-update encoder
/// outputs inside evaluate_regularizer and held fixed for the gradient.
StepLosses train_step(Model& model, AdamState& adam, const TrainConfig& config,
                      const LabeledBatch* labeled, const std::vector<Matrix>* unlabeled,
                      bool unlabeled_aligned, const ProjectionSet& proj, double gamma, double tau) {
  Model grads = zero_grads(model);
  StepLosses losses;

  if (labeled != nullptr) {
    const auto pass = encode(model.encoders, labeled->views);
    const Matrix features = concat_rows(pass.forward);
    const auto& head = *model.classifier;
    Matrix logits = head.weight * features;
    logits.colwise() += head.bias;
    const auto xent = softmax_xent(logits, labeled->labels);
    losses.task = xent.loss;
    grads.classifier->weight += xent.grad * features.transpose();
    grads.classifier->bias += xent.grad.rowwise().sum();
    const Matrix gfeat = head.weight.transpose() * xent.grad;
    std::vector<Matrix> gh;
    Index r = 0;
    for (const auto& f : pass.forward) {
      gh.push_back(gfeat.middleRows(r, f.output.rows()));
      r += f.output.rows();
    }
    backprop_encoders(model.encoders, pass, nullptr, &gh, grads.encoders);
  }

  const bool use_rm = gamma > 0.0 && config.regularizer != RegularizerKind::kNone;
  const bool use_rs = tau > 0.0 && model.decoders.has_value();
  if (unlabeled != nullptr && (use_rm || use_rs)) {
    const auto pass = encode(model.encoders, *unlabeled);
    std::vector<Matrix> gz;
    std::vector<Matrix> gh;
    if (use_rm) {
      auto out = evaluate_regularizer(config.regularizer, pass.latents, model.refs ? &*model.refs : nullptr,
                                      proj, regularizer_params(config, unlabeled_aligned));
      losses.multi_view = out.loss;
      for (auto& g : out.grad_latents) gz.push_back(gamma * g);
      for (size_t k = 0; k < out.grad_refs.size(); ++k) grads.refs->refs[k] += gamma * out.grad_refs[k];
    }
    if (use_rs) {
      std::vector<Matrix> hidden;
      for (const auto& f : pass.forward) hidden.push_back(f.output);
      auto rec = reconstruction_loss(*model.decoders, hidden, *unlabeled);
      losses.single_view = rec.loss;
      for (auto& g : rec.grad_latents) gh.push_back(tau * g);
      for (size_t s = 0; s < rec.grad_decoders.size(); ++s) {
        for (size_t l = 0; l < rec.grad_decoders[s].layers.size(); ++l) {
          grads.decoders->mlps[s].layers[l].weight += tau * rec.grad_decoders[s].layers[l].weight;
          grads.decoders->mlps[s].layers[l].bias += tau * rec.grad_decoders[s].layers[l].bias;
        }
      }
    }
    backprop_encoders(model.encoders, pass, use_rm ? &gz : nullptr, use_rs ? &gh : nullptr, grads.encoders);
  }

  auto params = model_tensors(model);
  const auto grad_views = model_tensors(grads);
  adam_step(adam, params, grad_views);
  return losses;
}

std::optional<TransportPlan> initial_plan(const TrainConfig& config, size_t views) {
  const auto s = static_cast<Index>(views);
  TransportPlan plan;
  plan.row_marginal = uniform_marginal(s);
  if (config.regularizer == RegularizerKind::kHotPairwise && s >= 2) {
    plan.weights = (Matrix::Ones(s, s) - Matrix::Identity(s, s)) / static_cast<double>(s * (s - 1));
    plan.col_marginal = uniform_marginal(s);
  } else if (config.regularizer == RegularizerKind::kHotReference) {
    const Index k = config.num_clusters;
    plan.weights = Matrix::Constant(s, k, 1.0 / static_cast<double>(s * k));
    plan.col_marginal = uniform_marginal(k);
  } else {
    return std::nullopt;
  }
  plan.beta = config.beta;
  return plan;
}

bool produces_plan(RegularizerKind kind) {
  return kind == RegularizerKind::kHotPairwise || kind == RegularizerKind::kHotReference;
}

/// A fixed evaluation batch: the first B rows of every view.
std::vector<Matrix> fixed_batch(const MultiViewDataset& data, Index batch) {
  std::vector<Matrix> out;
  for (const auto& v : data.views) out.push_back(v.topRows(batch).transpose());
  return out;
}

std::optional<TransportPlan> plan_on_batch(const Model& model, const TrainConfig& config,
                                           const std::vector<Matrix>& batch, const ProjectionSet& proj) {
  if (!produces_plan(config.regularizer)) return std::nullopt;
  const auto pass = encode(model.encoders, batch);
  auto out = evaluate_regularizer(config.regularizer, pass.latents, model.refs ? &*model.refs : nullptr, proj,
                                  regularizer_params(config, false));
  return out.plan;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<Index> dims_of(const MultiViewDataset& data) {
  std::vector<Index> dims;
  for (size_t s = 0; s < data.num_views(); ++s) dims.push_back(data.view_dim(s));
  return dims;
}

}  // namespace

Model init_model(const std::vector<Index>& view_dims, int num_classes, const TrainConfig& config) {
  config.validate();
  if (view_dims.empty()) throw UsageError("init_model: no views");
  auto rng = make_stream(config.seed, Stream::kInit);
  Model model;
  for (Index dim : view_dims) {
    const std::vector<Index> widths = {dim, config.hidden_width, config.encoder_out};
    model.encoders.mlps.push_back(make_mlp(widths, rng));
    model.encoders.projections.push_back(scaled_uniform(config.shared_dim, config.encoder_out, rng));
  }
  if (num_classes > 0) {
    const auto in = static_cast<Index>(view_dims.size()) * config.encoder_out;
    model.classifier = ClassifierHead{scaled_uniform(num_classes, in, rng), Vector::Zero(num_classes)};
  }
  if (config.use_autoencoder) {
    DecoderStack dec;
    for (Index dim : view_dims) {
      const std::vector<Index> widths = {config.encoder_out, config.hidden_width, dim};
      dec.mlps.push_back(make_mlp(widths, rng));
    }
    model.decoders = std::move(dec);
  }
  if (uses_references(config.regularizer)) {
    const size_t k = config.regularizer == RegularizerKind::kHotReference ? static_cast<size_t>(config.num_clusters) : 1;
    model.refs = make_references(k, config.shared_dim, config.batch_size, rng);
  }
  return model;
}

std::vector<NamedTensor> model_tensors(Model& model) {
  std::vector<NamedTensor> out;
  for (size_t s = 0; s < model.encoders.num_views(); ++s) {
    const std::string prefix = "enc/" + std::to_string(s);
    append_tensors(model.encoders.mlps[s], prefix, out);
    auto& u = model.encoders.projections[s];
    out.push_back({prefix + "/proj", Eigen::Map<Matrix>(u.data(), u.rows(), u.cols())});
  }
  if (model.classifier) {
    auto& w = model.classifier->weight;
    auto& b = model.classifier->bias;
    out.push_back({"cls/w", Eigen::Map<Matrix>(w.data(), w.rows(), w.cols())});
    out.push_back({"cls/b", Eigen::Map<Matrix>(b.data(), b.size(), 1)});
  }
  if (model.decoders) {
    for (size_t s = 0; s < model.decoders->mlps.size(); ++s) {
      append_tensors(model.decoders->mlps[s], "dec/" + std::to_string(s), out);
    }
  }
  if (model.refs) {
    for (size_t k = 0; k < model.refs->size(); ++k) {
      auto& g = model.refs->refs[k];
      out.push_back({"ref/" + std::to_string(k), Eigen::Map<Matrix>(g.data(), g.rows(), g.cols())});
    }
  }
  return out;
}

Model zero_grads(const Model& model) {
  Model out = model;
  for (auto& t : model_tensors(out)) t.data.setZero();
  return out;
}

std::vector<NamedMatrix> model_to_named(const Model& model) {
  Model copy = model;
  std::vector<NamedMatrix> out;
  for (const auto& t : model_tensors(copy)) out.push_back({t.name, t.data});
  return out;
}

namespace {

struct ParsedName {
  std::string group;
  size_t index = 0;
  std::string rest;
};

ParsedName split_name(const std::string& name) {
  ParsedName p;
  const auto a = name.find('/');
  if (a == std::string::npos) throw DataError("checkpoint: bad tensor name '" + name + "'");
  p.group = name.substr(0, a);
  if (p.group == "cls") {
    p.rest = name.substr(a + 1);
    return p;
  }
  const auto b = name.find('/', a + 1);
  try {
    p.index = std::stoul(name.substr(a + 1, b == std::string::npos ? std::string::npos : b - a - 1));
  } catch (const std::exception&) {
    throw DataError("checkpoint: bad tensor name '" + name + "'");
  }
  if (b != std::string::npos) p.rest = name.substr(b + 1);
  return p;
}

void place_layer(Mlp& mlp, const std::string& rest, const Matrix& value, const std::string& name) {
  // rest = "fc<l>/w" or "fc<l>/b"
  if (rest.size() < 5 || rest.rfind("fc", 0) != 0) throw DataError("checkpoint: bad tensor name '" + name + "'");
  const auto slash = rest.find('/');
  const size_t l = std::stoul(rest.substr(2, slash - 2));
  if (mlp.layers.size() <= l) mlp.layers.resize(l + 1);
  const std::string kind = rest.substr(slash + 1);
  if (kind == "w") {
    mlp.layers[l].weight = value;
  } else if (kind == "b") {
    mlp.layers[l].bias = value.col(0);
  } else {
    throw DataError("checkpoint: bad tensor name '" + name + "'");
  }
}

}  // namespace

Model model_from_named(const std::vector<NamedMatrix>& tensors) {
  Model model;
  DecoderStack dec;
  ReferenceSet refs;
  for (const auto& t : tensors) {
    const auto p = split_name(t.name);
    if (p.group == "enc") {
      if (model.encoders.mlps.size() <= p.index) {
        model.encoders.mlps.resize(p.index + 1);
        model.encoders.projections.resize(p.index + 1);
      }
      if (p.rest == "proj") {
        model.encoders.projections[p.index] = t.value;
      } else {
        place_layer(model.encoders.mlps[p.index], p.rest, t.value, t.name);
      }
    } else if (p.group == "cls") {
      if (!model.classifier) model.classifier = ClassifierHead{};
      if (p.rest == "w") {
        model.classifier->weight = t.value;
      } else if (p.rest == "b") {
        model.classifier->bias = t.value.col(0);
      } else {
        throw DataError("checkpoint: bad tensor name '" + t.name + "'");
      }
    } else if (p.group == "dec") {
      if (dec.mlps.size() <= p.index) dec.mlps.resize(p.index + 1);
      place_layer(dec.mlps[p.index], p.rest, t.value, t.name);
    } else if (p.group == "ref") {
      if (refs.refs.size() <= p.index) refs.refs.resize(p.index + 1);
      refs.refs[p.index] = t.value;
    } else {
      throw DataError("checkpoint: unknown tensor group in '" + t.name + "'");
    }
  }
  if (model.encoders.mlps.empty()) throw DataError("checkpoint: no encoder tensors");
  for (size_t s = 0; s < model.encoders.num_views(); ++s) {
    const auto& mlp = model.encoders.mlps[s];
    if (mlp.layers.empty() || model.encoders.projections[s].size() == 0) {
      throw DataError("checkpoint: encoder " + std::to_string(s) + " is incomplete");
    }
    for (size_t l = 0; l + 1 < mlp.layers.size(); ++l) {
      if (mlp.layers[l].weight.rows() != mlp.layers[l + 1].weight.cols()) {
        throw DataError("checkpoint: encoder " + std::to_string(s) + " layer shapes do not chain");
      }
    }
  }
  if (!dec.mlps.empty()) model.decoders = std::move(dec);
  if (!refs.refs.empty()) model.refs = std::move(refs);
  return model;
}

std::string report_to_jsonl(const TrainReport& report) {
  std::string out;
  for (const auto& e : report.epochs) {
    nlohmann::json j;
    j["epoch"] = e.epoch;
    j["steps"] = e.steps;
    j["task_loss"] = e.task_loss;
    j["multi_view"] = e.multi_view;
    j["single_view"] = e.single_view;
    j["objective"] = e.objective;
    j["validation"] = e.validation ? nlohmann::json(*e.validation) : nlohmann::json(nullptr);
    out += j.dump() + "\n";
  }
  return out;
}

TrainResult train_unsupervised(const MultiViewDataset& train, const TrainConfig& config,
                               const MultiViewDataset* heldout, const EpochCallback& on_epoch) {
  config.validate();
  train.validate();
  const auto start = std::chrono::steady_clock::now();
  TrainResult result{init_model(dims_of(train), 0, config), {}};
  result.report.config = config;
  result.report.initial_plan = initial_plan(config, train.num_views());
  result.report.final_plan = result.report.initial_plan;
  if (config.regularizer == RegularizerKind::kNone) {
    result.report.wall_seconds = seconds_since(start);
    return result;
  }
  const Index n = train.num_samples();
  if (config.batch_size > n) {
    throw UsageError("batch_size " + std::to_string(config.batch_size) + " exceeds the " +
                     std::to_string(n) + " training samples");
  }
  if (requires_alignment(config.regularizer) && !train.aligned) {
    throw UsageError(std::string(regularizer_name(config.regularizer)) + " needs aligned training data");
  }

  const auto cols = columns_view(train);
  BatchSampler sampler(n, config.batch_size, train.num_views(), train.aligned, config.seed);
  auto proj_rng = make_stream(config.seed, Stream::kProjection);
  AdamState adam;
  adam.options.lr = config.lr;

  const bool validate = heldout != nullptr && heldout->num_samples() >= config.batch_size;
  if (validate && heldout->num_views() != train.num_views()) {
    throw DataError("held-out data has a different number of views");
  }
  auto heldout_rng = make_stream(config.seed, Stream::kHeldout);
  const auto eval_proj = sample_projections(config.num_projections, config.shared_dim, heldout_rng());
  const auto eval_batch = validate ? fixed_batch(*heldout, config.batch_size) : fixed_batch(train, config.batch_size);
  const bool eval_aligned = validate ? heldout->aligned : train.aligned;

  Model best = result.model;
  double best_score = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    sampler.shuffle();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.steps = static_cast<int>(sampler.steps_per_epoch());
    for (Index step = 0; step < sampler.steps_per_epoch(); ++step) {
      const auto batch = sampler.batch(cols, step);
      const auto proj = sample_projections(config.num_projections, config.shared_dim, proj_rng());
      const auto losses = train_step(result.model, adam, config, nullptr, &batch, train.aligned, proj, 1.0, 0.0);
      rec.multi_view += losses.multi_view;
    }
    rec.multi_view /= static_cast<double>(rec.steps);
    rec.objective = rec.multi_view;
    if (validate) {
      const auto pass = encode(result.model.encoders, eval_batch);
      const auto out = evaluate_regularizer(config.regularizer, pass.latents,
                                            result.model.refs ? &*result.model.refs : nullptr, eval_proj,
                                            regularizer_params(config, eval_aligned));
      rec.validation = out.loss;
      if (out.loss < best_score) {
        best_score = out.loss;
        best = result.model;
        result.report.selected_epoch = epoch;
      }
    }
    if (on_epoch) on_epoch(rec, result.model);
    result.report.epochs.push_back(rec);
  }
  if (validate && result.report.selected_epoch >= 0) result.model = std::move(best);
  if (config.epochs > 0) result.report.final_plan = plan_on_batch(result.model, config, eval_batch, eval_proj);
  result.report.wall_seconds = seconds_since(start);
  return result;
}

TrainResult train_semisupervised(const DataSplit& split, const TrainConfig& config,
                                 const EpochCallback& on_epoch) {
  config.validate();
  const auto& labeled = split.labeled;
  const auto& unlabeled = split.unlabeled;
  if (!labeled.labels || labeled.num_samples() == 0 || labeled.views.empty()) {
    throw DataError("semi-supervised training needs a labeled aligned subset");
  }
  labeled.validate();
  const auto start = std::chrono::steady_clock::now();
  TrainResult result{init_model(dims_of(labeled), labeled.num_classes, config), {}};
  result.report.config = config;
  result.report.initial_plan = initial_plan(config, labeled.num_views());
  result.report.final_plan = result.report.initial_plan;

  const Index b = config.batch_size;
  const bool have_unlabeled = !unlabeled.views.empty() && unlabeled.num_samples() >= b;
  // R_M runs on the unlabeled pool when it can fill a batch, otherwise on the
  // labeled batch itself.
  const bool rm_aligned = have_unlabeled ? unlabeled.aligned : true;
  if (requires_alignment(config.regularizer) && config.gamma > 0.0 && !rm_aligned) {
    throw UsageError(std::string(regularizer_name(config.regularizer)) + " needs an aligned unlabeled pool");
  }
  const auto labeled_cols = columns_view(labeled);
  const std::vector<Matrix> unlabeled_cols = have_unlabeled ? columns_view(unlabeled) : std::vector<Matrix>{};
  std::optional<BatchSampler> sampler;
  if (have_unlabeled) {
    sampler.emplace(unlabeled.num_samples(), b, unlabeled.num_views(), unlabeled.aligned, config.seed);
  }
  const Index steps = have_unlabeled ? sampler->steps_per_epoch() : std::max<Index>(1, labeled.num_samples() / b);

  auto proj_rng = make_stream(config.seed, Stream::kProjection);
  auto labeled_rng = make_stream(config.seed, Stream::kLabeled);
  const Index nl = labeled.num_samples();
  std::vector<Index> labeled_order(static_cast<size_t>(nl));
  std::iota(labeled_order.begin(), labeled_order.end(), Index{0});
  size_t labeled_cursor = labeled_order.size();
  auto next_labeled = [&]() {
    LabeledBatch lb;
    std::vector<Index> idx;
    if (nl >= b) {
      for (Index j = 0; j < b; ++j) {
        if (labeled_cursor == labeled_order.size()) {
          std::shuffle(labeled_order.begin(), labeled_order.end(), labeled_rng);
          labeled_cursor = 0;
        }
        idx.push_back(labeled_order[labeled_cursor++]);
      }
    } else {
      std::uniform_int_distribution<Index> pick(0, nl - 1);
      for (Index j = 0; j < b; ++j) idx.push_back(pick(labeled_rng));
    }
    for (const auto& v : labeled_cols) lb.views.push_back(gather(v, idx, 0, b));
    for (Index i : idx) lb.labels.push_back((*labeled.labels)[static_cast<size_t>(i)]);
    return lb;
  };

  const bool validate = split.valid.labels.has_value() && split.valid.num_samples() > 0;
  std::vector<Matrix> valid_cols;
  if (validate) valid_cols = columns_view(split.valid);

  AdamState adam;
  adam.options.lr = config.lr;
  Model best = result.model;
  double best_score = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (sampler) sampler->shuffle();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.steps = static_cast<int>(steps);
    for (Index step = 0; step < steps; ++step) {
      const auto lb = next_labeled();
      const std::vector<Matrix> ub = have_unlabeled ? sampler->batch(unlabeled_cols, step) : lb.views;
      const auto proj = sample_projections(config.num_projections, config.shared_dim, proj_rng());
      const auto losses =
          train_step(result.model, adam, config, &lb, &ub, rm_aligned, proj, config.gamma, config.tau);
      rec.task_loss += losses.task;
      rec.multi_view += losses.multi_view;
      rec.single_view += losses.single_view;
    }
    const double inv = 1.0 / static_cast<double>(steps);
    rec.task_loss *= inv;
    rec.multi_view *= inv;
    rec.single_view *= inv;
    rec.objective = rec.task_loss + config.gamma * rec.multi_view + config.tau * rec.single_view;
    if (validate) {
      const auto pass = encode(result.model.encoders, valid_cols);
      const Matrix features = concat_rows(pass.forward);
      Matrix logits = result.model.classifier->weight * features;
      logits.colwise() += result.model.classifier->bias;
      const double score = softmax_xent(logits, *split.valid.labels).loss;
      rec.validation = score;
      if (score < best_score) {
        best_score = score;
        best = result.model;
        result.report.selected_epoch = epoch;
      }
    }
    if (on_epoch) on_epoch(rec, result.model);
    result.report.epochs.push_back(rec);
  }
  if (validate && result.report.selected_epoch >= 0) result.model = std::move(best);

  if (config.epochs > 0 && produces_plan(config.regularizer)) {
    auto heldout_rng = make_stream(config.seed, Stream::kHeldout);
    const auto eval_proj = sample_projections(config.num_projections, config.shared_dim, heldout_rng());
    std::vector<Matrix> batch;
    if (validate && split.valid.num_samples() >= b) {
      batch = fixed_batch(split.valid, b);
    } else if (have_unlabeled) {
      batch = fixed_batch(unlabeled, b);
    } else if (nl >= b) {
      batch = fixed_batch(labeled, b);
    }
    if (!batch.empty()) result.report.final_plan = plan_on_batch(result.model, config, batch, eval_proj);
  }
  result.report.wall_seconds = seconds_since(start);
  return result;
}

void fit_classifier(Model& model, const MultiViewDataset& labeled, const TrainConfig& config) {
  if (!labeled.labels || labeled.num_samples() == 0) throw DataError("fit_classifier: no labeled samples");
  const auto pass = encode(model.encoders, columns_view(labeled));
  const Matrix features = concat_rows(pass.forward);
  auto rng = make_stream(config.seed, Stream::kHead);
  if (!model.classifier || model.classifier->weight.cols() != features.rows() ||
      model.classifier->num_classes() != labeled.num_classes) {
    model.classifier = ClassifierHead{scaled_uniform(labeled.num_classes, features.rows(), rng),
                                      Vector::Zero(labeled.num_classes)};
  }
  AdamState adam;
  adam.options.lr = config.lr;
  auto& head = *model.classifier;
  for (int it = 0; it < config.head_epochs; ++it) {
    Matrix logits = head.weight * features;
    logits.colwise() += head.bias;
    const auto xent = softmax_xent(logits, *labeled.labels);
    Matrix gw = xent.grad * features.transpose();
    Vector gb = xent.grad.rowwise().sum();
    std::vector<NamedTensor> params = {{"cls/w", Eigen::Map<Matrix>(head.weight.data(), head.weight.rows(), head.weight.cols())},
                                       {"cls/b", Eigen::Map<Matrix>(head.bias.data(), head.bias.size(), 1)}};
    const std::vector<NamedTensor> grads = {{"cls/w", Eigen::Map<Matrix>(gw.data(), gw.rows(), gw.cols())},
                                            {"cls/b", Eigen::Map<Matrix>(gb.data(), gb.size(), 1)}};
    adam_step(adam, params, grads);
  }
}

std::vector<int> predict(const Model& model, const MultiViewDataset& samples) {
  if (!model.classifier) throw UsageError("predict: model has no classifier");
  if (samples.num_views() != model.num_views()) {
    throw DataError("predict: model has " + std::to_string(model.num_views()) + " views, data has " +
                    std::to_string(samples.num_views()));
  }
  if (!samples.aligned) throw UsageError("predict: samples must be aligned across views");
  const auto pass = encode(model.encoders, columns_view(samples));
  const Matrix features = concat_rows(pass.forward);
  Matrix logits = model.classifier->weight * features;
  logits.colwise() += model.classifier->bias;
  std::vector<int> out;
  out.reserve(static_cast<size_t>(logits.cols()));
  for (Index j = 0; j < logits.cols(); ++j) {
    Index best = 0;
    logits.col(j).maxCoeff(&best);
    out.push_back(static_cast<int>(best));
  }
  return out;
}

MultiViewDataset unsupervised_pool(const DataSplit& split) {
  MultiViewDataset out = split.labeled;
  out.name = split.labeled.name + "+unlabeled";
  out.labels.reset();
  if (!split.unlabeled.views.empty() && split.unlabeled.num_samples() > 0) {
    for (size_t s = 0; s < out.num_views(); ++s) {
      Matrix merged(out.views[s].rows() + split.unlabeled.views[s].rows(), out.views[s].cols());
      merged << out.views[s], split.unlabeled.views[s];
      out.views[s] = std::move(merged);
    }
    out.aligned = split.unlabeled.aligned;
  }
  return out;
}

std::vector<Matrix> project_views(const Model& model, const MultiViewDataset& data) {
  return encode(model.encoders, columns_view(data)).latents;
}

}  // namespace hotmv
