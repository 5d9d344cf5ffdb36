#pragma once

// Optimal-transport kernels: sorted 1-D matching, empirical sliced
// Wasserstein distance with analytic gradients, log-domain Sinkhorn scaling,
// and a factorial-scale matching oracle.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hotmv {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// M random directions on the unit sphere of R^d, stored as the columns of a
/// d x M matrix.
struct ProjectionSet {
  Matrix thetas;
  std::uint64_t seed = 0;

  Index dim() const { return thetas.rows(); }
  Index count() const { return thetas.cols(); }
};

/// Draws m directions uniformly on S^{d-1} (normalized standard normals).
/// Deterministic in (m, d, seed).
ProjectionSet sample_projections(Index m, Index d, std::uint64_t seed);

/// Squared Euclidean distance between the ascending sorts of u and v. Not
/// divided by the length.
double wasserstein_1d_sq(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v);

struct SlicedWassersteinResult {
  double value = 0.0;
  Matrix grad_first;
  Matrix grad_second;
};

/// (1/M) sum_m ||sort(theta_m^T z1) - sort(theta_m^T z2)||^2 for d x N inputs
/// (columns are samples). Gradients hold each per-projection sorting fixed;
/// ties go to the earlier sample.
SlicedWassersteinResult sliced_wasserstein(const Matrix& z1, const Matrix& z2,
                                           const ProjectionSet& proj);

/// Value only; same arithmetic as sliced_wasserstein().value.
double sliced_wasserstein_value(const Matrix& z1, const Matrix& z2, const ProjectionSet& proj);

/// Ground cost for the outer transport problem. diag_shift is the constant c
/// added to the diagonal (0 when unused).
struct CostMatrix {
  Matrix costs;
  double diag_shift = 0.0;
};

/// Returns raw + c * I with c = 1^T raw 1. raw must be square, symmetric
/// within 1e-8 and have a zero diagonal.
CostMatrix pairwise_cost_with_diag_shift(const Matrix& raw);

/// Entropic transport plan W = diag(a) exp(-C / beta) diag(b). The scaling
/// vectors are kept in log form because they leave the double range at small
/// beta.
struct TransportPlan {
  Matrix weights;
  Vector row_marginal;
  Vector col_marginal;
  Vector log_scaling_left;
  Vector log_scaling_right;
  double beta = 0.0;
  int iterations = 0;
  double marginal_residual = 0.0;

  Index rows() const { return weights.rows(); }
  Index cols() const { return weights.cols(); }
  Vector scaling_left() const { return log_scaling_left.array().exp(); }
  Vector scaling_right() const { return log_scaling_right.array().exp(); }
};

/// Runs `iterations` rounds of b <- q / (Phi^T a), a <- p / (Phi b) in the log
/// domain, starting from a = p. Rows of the result match p to rounding; the
/// achieved column residual is recorded in marginal_residual.
TransportPlan sinkhorn(const CostMatrix& cost, const Vector& p, const Vector& q, double beta,
                       int iterations);

Vector uniform_marginal(Index n);

/// Exhaustive min over permutations of ||z1 P - z2||_F^2. perm[j] is the
/// column of z1 paired with column j of z2. Limited to N <= 8.
struct Matching {
  double cost = 0.0;
  std::vector<Index> perm;
};
Matching brute_force_matching(const Matrix& z1, const Matrix& z2);

// Serialization: {rows, cols, weights (row-major), p, q, beta, iterations,
// marginal_residual}. CSV has one line per matrix row, 17 significant digits.
std::string plan_to_json(const TransportPlan& plan);
TransportPlan plan_from_json(const std::string& text);
void write_plan_csv(std::ostream& out, const TransportPlan& plan);

}  // namespace hotmv
