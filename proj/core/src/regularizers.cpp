#include "hotmv/regularizers.hpp"

#include <array>
#include <utility>

#include "hotmv/error.hpp"

namespace hotmv {

namespace {

constexpr std::array<std::pair<RegularizerKind, std::string_view>, 7> kNames = {{
    {RegularizerKind::kNone, "none"},
    {RegularizerKind::kLscca, "lscca"},
    {RegularizerKind::kGdcca, "gdcca"},
    {RegularizerKind::kSwPairwise, "sw_pairwise"},
    {RegularizerKind::kSwReference, "sw_reference"},
    {RegularizerKind::kHotPairwise, "hot_pairwise"},
    {RegularizerKind::kHotReference, "hot_reference"},
}};

void check_latents(const std::vector<Matrix>& latents, size_t min_views, const char* who) {
  if (latents.size() < min_views) {
    throw UsageError(std::string(who) + ": needs at least " + std::to_string(min_views) + " views");
  }
  for (size_t s = 1; s < latents.size(); ++s) {
    if (latents[s].rows() != latents[0].rows() || latents[s].cols() != latents[0].cols()) {
      throw UsageError(std::string(who) + ": view " + std::to_string(s) +
                       " latent shape differs from view 0");
    }
  }
}

void check_refs(const std::vector<Matrix>& latents, const ReferenceSet& refs, const char* who) {
  if (refs.size() < 1) throw UsageError(std::string(who) + ": empty reference set");
  for (const auto& g : refs.refs) {
    if (g.rows() != latents[0].rows() || g.cols() != latents[0].cols()) {
      throw UsageError(std::string(who) + ": reference shape differs from the latents");
    }
  }
}

std::vector<Matrix> zeros_like(const std::vector<Matrix>& mats) {
  std::vector<Matrix> out;
  out.reserve(mats.size());
  for (const auto& m : mats) out.push_back(Matrix::Zero(m.rows(), m.cols()));
  return out;
}

void add_penalty(RegularizerOutput& out, const PenaltyResult& pen, double alpha,
                 std::vector<Matrix>& target) {
  out.penalty = pen.value;
  out.loss = out.coupling + alpha * pen.value;
  for (size_t i = 0; i < target.size(); ++i) target[i] += alpha * pen.grads[i];
}

double pairwise_coefficient(size_t views) {
  return 2.0 / (static_cast<double>(views) * static_cast<double>(views - 1));
}

}  // namespace

std::string_view regularizer_name(RegularizerKind kind) {
  for (const auto& [k, name] : kNames)
    if (k == kind) return name;
  return "unknown";
}

RegularizerKind parse_regularizer(std::string_view name) {
  for (const auto& [k, n] : kNames)
    if (n == name) return k;
  throw UsageError("unknown regularizer '" + std::string(name) +
                   "' (expected none|lscca|gdcca|sw_pairwise|sw_reference|hot_pairwise|hot_reference)");
}

bool uses_references(RegularizerKind kind) {
  return kind == RegularizerKind::kGdcca || kind == RegularizerKind::kSwReference ||
         kind == RegularizerKind::kHotReference;
}

bool requires_alignment(RegularizerKind kind) {
  return kind == RegularizerKind::kLscca || kind == RegularizerKind::kGdcca;
}

ReferenceSet make_references(size_t k, Index d, Index batch, std::mt19937_64& rng) {
  if (k < 1 || d < 1 || batch < 1) throw UsageError("make_references: K, d and batch must be positive");
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
  ReferenceSet out;
  for (size_t i = 0; i < k; ++i) {
    Matrix g(d, batch);
    for (Index c = 0; c < batch; ++c)
      for (Index r = 0; r < d; ++r) g(r, c) = normal(rng);
    out.refs.push_back(std::move(g));
  }
  return out;
}

PenaltyResult ortho_penalty(const std::vector<Matrix>& mats) {
  if (mats.empty()) throw UsageError("ortho_penalty: no inputs");
  const Index d = mats[0].rows();
  Matrix gram = Matrix::Zero(d, d);
  for (const auto& z : mats) {
    if (z.rows() != d) throw UsageError("ortho_penalty: latent dimensions differ");
    if (z.cols() < 1) throw UsageError("ortho_penalty: empty batch");
    gram.noalias() += (z * z.transpose()) / static_cast<double>(z.cols());
  }
  const Matrix resid = gram - Matrix::Identity(d, d);
  PenaltyResult out;
  out.value = resid.squaredNorm();
  for (const auto& z : mats) out.grads.push_back((4.0 / static_cast<double>(z.cols())) * resid * z);
  return out;
}

RegularizerOutput lscca_loss(const std::vector<Matrix>& latents, double alpha, bool aligned) {
  if (!aligned) throw UsageError("lscca requires row-aligned views");
  check_latents(latents, 2, "lscca_loss");
  RegularizerOutput out;
  out.grad_latents = zeros_like(latents);
  const double coef = pairwise_coefficient(latents.size());
  for (size_t s = 0; s < latents.size(); ++s) {
    for (size_t t = s + 1; t < latents.size(); ++t) {
      const Matrix diff = latents[s] - latents[t];
      out.coupling += coef * diff.squaredNorm();
      out.grad_latents[s] += 2.0 * coef * diff;
      out.grad_latents[t] -= 2.0 * coef * diff;
    }
  }
  add_penalty(out, ortho_penalty(latents), alpha, out.grad_latents);
  return out;
}

RegularizerOutput gdcca_loss(const std::vector<Matrix>& latents, const ReferenceSet& refs,
                             double alpha, bool aligned) {
  if (!aligned) throw UsageError("gdcca requires row-aligned views");
  check_latents(latents, 1, "gdcca_loss");
  check_refs(latents, refs, "gdcca_loss");
  if (refs.size() != 1) throw UsageError("gdcca_loss: expects exactly one reference");
  RegularizerOutput out;
  out.grad_latents = zeros_like(latents);
  out.grad_refs = zeros_like(refs.refs);
  const double coef = 1.0 / static_cast<double>(latents.size());
  for (size_t s = 0; s < latents.size(); ++s) {
    const Matrix diff = latents[s] - refs.refs[0];
    out.coupling += coef * diff.squaredNorm();
    out.grad_latents[s] += 2.0 * coef * diff;
    out.grad_refs[0] -= 2.0 * coef * diff;
  }
  add_penalty(out, ortho_penalty(refs.refs), alpha, out.grad_refs);
  return out;
}

RegularizerOutput sw_pairwise_loss(const std::vector<Matrix>& latents, const ProjectionSet& proj,
                                   double alpha) {
  check_latents(latents, 2, "sw_pairwise_loss");
  RegularizerOutput out;
  out.grad_latents = zeros_like(latents);
  const double coef = pairwise_coefficient(latents.size());
  for (size_t s = 0; s < latents.size(); ++s) {
    for (size_t t = s + 1; t < latents.size(); ++t) {
      const auto sw = sliced_wasserstein(latents[s], latents[t], proj);
      out.coupling += coef * sw.value;
      out.grad_latents[s] += coef * sw.grad_first;
      out.grad_latents[t] += coef * sw.grad_second;
    }
  }
  add_penalty(out, ortho_penalty(latents), alpha, out.grad_latents);
  return out;
}

RegularizerOutput sw_reference_loss(const std::vector<Matrix>& latents, const ReferenceSet& refs,
                                    const ProjectionSet& proj, double alpha) {
  check_latents(latents, 1, "sw_reference_loss");
  check_refs(latents, refs, "sw_reference_loss");
  if (refs.size() != 1) throw UsageError("sw_reference_loss: expects exactly one reference");
  RegularizerOutput out;
  out.grad_latents = zeros_like(latents);
  out.grad_refs = zeros_like(refs.refs);
  const double coef = 1.0 / static_cast<double>(latents.size());
  for (size_t s = 0; s < latents.size(); ++s) {
    const auto sw = sliced_wasserstein(latents[s], refs.refs[0], proj);
    out.coupling += coef * sw.value;
    out.grad_latents[s] += coef * sw.grad_first;
    out.grad_refs[0] += coef * sw.grad_second;
  }
  add_penalty(out, ortho_penalty(refs.refs), alpha, out.grad_refs);
  return out;
}

Matrix pairwise_sw_costs(const std::vector<Matrix>& latents, const ProjectionSet& proj) {
  check_latents(latents, 1, "pairwise_sw_costs");
  const auto n = static_cast<Index>(latents.size());
  Matrix c = Matrix::Zero(n, n);
  for (Index s = 0; s < n; ++s) {
    for (Index t = s + 1; t < n; ++t) {
      c(s, t) = sliced_wasserstein_value(latents[s], latents[t], proj);
      c(t, s) = c(s, t);
    }
  }
  return c;
}

Matrix reference_sw_costs(const std::vector<Matrix>& latents, const ReferenceSet& refs,
                          const ProjectionSet& proj) {
  check_latents(latents, 1, "reference_sw_costs");
  check_refs(latents, refs, "reference_sw_costs");
  Matrix c(static_cast<Index>(latents.size()), static_cast<Index>(refs.size()));
  for (size_t s = 0; s < latents.size(); ++s)
    for (size_t k = 0; k < refs.size(); ++k)
      c(static_cast<Index>(s), static_cast<Index>(k)) = sliced_wasserstein_value(latents[s], refs.refs[k], proj);
  return c;
}

RegularizerOutput hot_pairwise_objective(const std::vector<Matrix>& latents,
                                         const ProjectionSet& proj, double alpha,
                                         const Matrix& weights) {
  check_latents(latents, 2, "hot_pairwise_loss");
  const auto n = static_cast<Index>(latents.size());
  if (weights.rows() != n || weights.cols() != n) {
    throw UsageError("hot_pairwise_objective: plan must be S x S");
  }
  RegularizerOutput out;
  out.grad_latents = zeros_like(latents);
  for (Index s = 0; s < n; ++s) {
    for (Index t = s + 1; t < n; ++t) {
      const double w = weights(s, t) + weights(t, s);
      const auto sw = sliced_wasserstein(latents[s], latents[t], proj);
      out.coupling += w * sw.value;
      out.grad_latents[s] += w * sw.grad_first;
      out.grad_latents[t] += w * sw.grad_second;
    }
  }
  add_penalty(out, ortho_penalty(latents), alpha, out.grad_latents);
  return out;
}

RegularizerOutput hot_pairwise_loss(const std::vector<Matrix>& latents, const ProjectionSet& proj,
                                    double alpha, const SinkhornSettings& solver) {
  check_latents(latents, 2, "hot_pairwise_loss");
  const Matrix raw = pairwise_sw_costs(latents, proj);
  const auto shifted = pairwise_cost_with_diag_shift(raw);
  const Vector p = uniform_marginal(raw.rows());
  auto plan = sinkhorn(shifted, p, p, solver.beta, solver.iterations);
  auto out = hot_pairwise_objective(latents, proj, alpha, plan.weights);
  out.plan = std::move(plan);
  out.cost = CostMatrix{raw, shifted.diag_shift};
  return out;
}

RegularizerOutput hot_reference_objective(const std::vector<Matrix>& latents,
                                          const ReferenceSet& refs, const ProjectionSet& proj,
                                          double alpha, const Matrix& weights) {
  check_latents(latents, 1, "hot_reference_loss");
  check_refs(latents, refs, "hot_reference_loss");
  if (weights.rows() != static_cast<Index>(latents.size()) ||
      weights.cols() != static_cast<Index>(refs.size())) {
    throw UsageError("hot_reference_objective: plan must be S x K");
  }
  RegularizerOutput out;
  out.grad_latents = zeros_like(latents);
  out.grad_refs = zeros_like(refs.refs);
  for (size_t s = 0; s < latents.size(); ++s) {
    for (size_t k = 0; k < refs.size(); ++k) {
      const double w = weights(static_cast<Index>(s), static_cast<Index>(k));
      const auto sw = sliced_wasserstein(latents[s], refs.refs[k], proj);
      out.coupling += w * sw.value;
      out.grad_latents[s] += w * sw.grad_first;
      out.grad_refs[k] += w * sw.grad_second;
    }
  }
  add_penalty(out, ortho_penalty(refs.refs), alpha, out.grad_refs);
  return out;
}

RegularizerOutput hot_reference_loss(const std::vector<Matrix>& latents, const ReferenceSet& refs,
                                     const ProjectionSet& proj, double alpha,
                                     const SinkhornSettings& solver) {
  const Matrix raw = reference_sw_costs(latents, refs, proj);
  const CostMatrix cost{raw, 0.0};
  auto plan = sinkhorn(cost, uniform_marginal(raw.rows()), uniform_marginal(raw.cols()),
                       solver.beta, solver.iterations);
  auto out = hot_reference_objective(latents, refs, proj, alpha, plan.weights);
  out.plan = std::move(plan);
  out.cost = cost;
  return out;
}

RegularizerOutput evaluate_regularizer(RegularizerKind kind, const std::vector<Matrix>& latents,
                                       const ReferenceSet* refs, const ProjectionSet& proj,
                                       const RegularizerParams& params) {
  if (uses_references(kind) && refs == nullptr) {
    throw UsageError(std::string(regularizer_name(kind)) + " needs a reference set");
  }
  switch (kind) {
    case RegularizerKind::kLscca:
      return lscca_loss(latents, params.alpha, params.aligned);
    case RegularizerKind::kGdcca:
      return gdcca_loss(latents, *refs, params.alpha, params.aligned);
    case RegularizerKind::kSwPairwise:
      return sw_pairwise_loss(latents, proj, params.alpha);
    case RegularizerKind::kSwReference:
      return sw_reference_loss(latents, *refs, proj, params.alpha);
    case RegularizerKind::kHotPairwise:
      return hot_pairwise_loss(latents, proj, params.alpha, params.solver);
    case RegularizerKind::kHotReference:
      return hot_reference_loss(latents, *refs, proj, params.alpha, params.solver);
    case RegularizerKind::kNone:
      break;
  }
  RegularizerOutput out;
  out.grad_latents = zeros_like(latents);
  if (refs != nullptr) out.grad_refs = zeros_like(refs->refs);
  return out;
}

}  // namespace hotmv
