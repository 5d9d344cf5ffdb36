#pragma once

// Multi-view coupling objectives. Every function takes the projected latents
// Z_s = U_s f_s(X_s) (d x B each) and returns the loss together with its
// gradient with respect to the latents and, where used, the references.

#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "hotmv/ot.hpp"

namespace hotmv {

enum class RegularizerKind {
  kNone,
  kLscca,
  kGdcca,
  kSwPairwise,
  kSwReference,
  kHotPairwise,
  kHotReference,
};

std::string_view regularizer_name(RegularizerKind kind);
RegularizerKind parse_regularizer(std::string_view name);

/// True for objectives that carry learnable global references G_k.
bool uses_references(RegularizerKind kind);
/// True for the CCA baselines, which need row-aligned batches.
bool requires_alignment(RegularizerKind kind);

/// K learnable global latent matrices, each d x B.
struct ReferenceSet {
  std::vector<Matrix> refs;

  size_t size() const { return refs.size(); }
};

/// Entries i.i.d. N(0, 1/d).
ReferenceSet make_references(size_t k, Index d, Index batch, std::mt19937_64& rng);

struct RegularizerOutput {
  double loss = 0.0;
  double coupling = 0.0;  // loss without the alpha-weighted penalty
  double penalty = 0.0;   // unweighted orthogonality penalty
  std::vector<Matrix> grad_latents;
  std::vector<Matrix> grad_refs;
  std::optional<TransportPlan> plan;
  std::optional<CostMatrix> cost;
};

struct PenaltyResult {
  double value = 0.0;
  std::vector<Matrix> grads;
};

/// ||sum_s (1/B) Z_s Z_s^T - I_d||_F^2.
PenaltyResult ortho_penalty(const std::vector<Matrix>& mats);

struct SinkhornSettings {
  double beta = 0.1;
  int iterations = 20;
};

RegularizerOutput lscca_loss(const std::vector<Matrix>& latents, double alpha, bool aligned);
RegularizerOutput gdcca_loss(const std::vector<Matrix>& latents, const ReferenceSet& refs,
                             double alpha, bool aligned);
RegularizerOutput sw_pairwise_loss(const std::vector<Matrix>& latents, const ProjectionSet& proj,
                                   double alpha);
RegularizerOutput sw_reference_loss(const std::vector<Matrix>& latents, const ReferenceSet& refs,
                                    const ProjectionSet& proj, double alpha);

/// Solves for W on C + cI, then returns <W, C> + alpha * penalty(latents)
/// with W held fixed.
RegularizerOutput hot_pairwise_loss(const std::vector<Matrix>& latents, const ProjectionSet& proj,
                                    double alpha, const SinkhornSettings& solver);
/// Solves for W on the S x K view-to-reference cost, then returns
/// <W, C> + alpha * penalty(refs) with W held fixed.
RegularizerOutput hot_reference_loss(const std::vector<Matrix>& latents, const ReferenceSet& refs,
                                     const ProjectionSet& proj, double alpha,
                                     const SinkhornSettings& solver);

// The fixed-plan halves of the two objectives above.
RegularizerOutput hot_pairwise_objective(const std::vector<Matrix>& latents,
                                         const ProjectionSet& proj, double alpha,
                                         const Matrix& weights);
RegularizerOutput hot_reference_objective(const std::vector<Matrix>& latents,
                                          const ReferenceSet& refs, const ProjectionSet& proj,
                                          double alpha, const Matrix& weights);

/// Raw S x S sliced-Wasserstein costs between views (zero diagonal).
Matrix pairwise_sw_costs(const std::vector<Matrix>& latents, const ProjectionSet& proj);
/// S x K sliced-Wasserstein costs between views and references.
Matrix reference_sw_costs(const std::vector<Matrix>& latents, const ReferenceSet& refs,
                          const ProjectionSet& proj);

struct RegularizerParams {
  double alpha = 0.01;
  SinkhornSettings solver;
  bool aligned = false;
};

/// Dispatch on kind. refs may be null for kinds that do not use references.
RegularizerOutput evaluate_regularizer(RegularizerKind kind, const std::vector<Matrix>& latents,
                                       const ReferenceSet* refs, const ProjectionSet& proj,
                                       const RegularizerParams& params);

}  // namespace hotmv
