#include "hotmv/ot.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hotmv/error.hpp"

namespace hotmv {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<Index> argsort(const Vector& x) {
  std::vector<Index> idx(static_cast<size_t>(x.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&x](Index a, Index b) { return x(a) < x(b); });
  return idx;
}

// log(sum(exp(v))) tolerant of -inf entries.
double log_sum_exp(const Vector& v) {
  const double mx = v.maxCoeff();
  if (mx == kNegInf) return kNegInf;
  return mx + std::log((v.array() - mx).exp().sum());
}

Vector safe_log(const Vector& x) {
  Vector out(x.size());
  for (Index i = 0; i < x.size(); ++i) out(i) = x(i) > 0.0 ? std::log(x(i)) : kNegInf;
  return out;
}

void check_same_shape(const Matrix& z1, const Matrix& z2, const ProjectionSet& proj) {
  if (z1.rows() != z2.rows() || z1.cols() != z2.cols()) {
    throw UsageError("sliced_wasserstein: shape mismatch " + std::to_string(z1.rows()) + "x" +
                     std::to_string(z1.cols()) + " vs " + std::to_string(z2.rows()) + "x" +
                     std::to_string(z2.cols()));
  }
  if (proj.dim() != z1.rows()) {
    throw UsageError("sliced_wasserstein: projection dimension " + std::to_string(proj.dim()) +
                     " does not match latent dimension " + std::to_string(z1.rows()));
  }
  if (proj.count() < 1) throw UsageError("sliced_wasserstein: empty projection set");
}

}  // namespace

ProjectionSet sample_projections(Index m, Index d, std::uint64_t seed) {
  if (m < 1 || d < 1) throw UsageError("sample_projections: need m >= 1 and d >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  ProjectionSet out{Matrix(d, m), seed};
  for (Index j = 0; j < m; ++j) {
    double norm = 0.0;
    do {
      for (Index i = 0; i < d; ++i) out.thetas(i, j) = normal(rng);
      norm = out.thetas.col(j).norm();
    } while (norm == 0.0);
    out.thetas.col(j) /= norm;
  }
  return out;
}

double wasserstein_1d_sq(const Eigen::Ref<const Vector>& u, const Eigen::Ref<const Vector>& v) {
  if (u.size() != v.size()) {
    throw UsageError("wasserstein_1d_sq: length mismatch " + std::to_string(u.size()) + " vs " +
                     std::to_string(v.size()));
  }
  if (u.size() == 0) throw UsageError("wasserstein_1d_sq: empty input");
  std::vector<double> su(u.data(), u.data() + u.size());
  std::vector<double> sv(v.data(), v.data() + v.size());
  std::sort(su.begin(), su.end());
  std::sort(sv.begin(), sv.end());
  double total = 0.0;
  for (size_t i = 0; i < su.size(); ++i) {
    const double diff = su[i] - sv[i];
    total += diff * diff;
  }
  return total;
}

SlicedWassersteinResult sliced_wasserstein(const Matrix& z1, const Matrix& z2,
                                           const ProjectionSet& proj) {
  check_same_shape(z1, z2, proj);
  const Index n = z1.cols();
  const double inv_m = 1.0 / static_cast<double>(proj.count());

  // Rows of the projected matrices are theta_m^T Z.
  const Matrix p1 = proj.thetas.transpose() * z1;
  const Matrix p2 = proj.thetas.transpose() * z2;
  Matrix g1 = Matrix::Zero(proj.count(), n);
  Matrix g2 = Matrix::Zero(proj.count(), n);

  SlicedWassersteinResult out;
  for (Index m = 0; m < proj.count(); ++m) {
    const Vector u = p1.row(m).transpose();
    const Vector v = p2.row(m).transpose();
    const auto su = argsort(u);
    const auto sv = argsort(v);
    for (Index i = 0; i < n; ++i) {
      const double diff = u(su[i]) - v(sv[i]);
      out.value += inv_m * diff * diff;
      g1(m, su[i]) = 2.0 * inv_m * diff;
      g2(m, sv[i]) = -2.0 * inv_m * diff;
    }
  }
  out.grad_first = proj.thetas * g1;
  out.grad_second = proj.thetas * g2;
  return out;
}

double sliced_wasserstein_value(const Matrix& z1, const Matrix& z2, const ProjectionSet& proj) {
  check_same_shape(z1, z2, proj);
  const Matrix p1 = proj.thetas.transpose() * z1;
  const Matrix p2 = proj.thetas.transpose() * z2;
  double total = 0.0;
  for (Index m = 0; m < proj.count(); ++m) {
    total += wasserstein_1d_sq(p1.row(m).transpose(), p2.row(m).transpose());
  }
  return total / static_cast<double>(proj.count());
}

CostMatrix pairwise_cost_with_diag_shift(const Matrix& raw) {
  if (raw.rows() != raw.cols()) throw UsageError("pairwise cost must be square");
  if (!raw.allFinite()) throw NumericalError("pairwise cost has non-finite entries");
  const double asym = (raw - raw.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8) {
    throw UsageError("pairwise cost is not symmetric (max asymmetry " + std::to_string(asym) + ")");
  }
  if (raw.diagonal().cwiseAbs().maxCoeff() > 1e-8) {
    throw UsageError("pairwise cost must have a zero diagonal");
  }
  CostMatrix out;
  out.diag_shift = raw.sum();
  out.costs = raw;
  out.costs.diagonal().array() += out.diag_shift;
  return out;
}

Vector uniform_marginal(Index n) { return Vector::Constant(n, 1.0 / static_cast<double>(n)); }

TransportPlan sinkhorn(const CostMatrix& cost, const Vector& p, const Vector& q, double beta,
                       int iterations) {
  const Matrix& c = cost.costs;
  if (c.rows() != p.size() || c.cols() != q.size()) {
    throw UsageError("sinkhorn: marginal sizes do not match the cost matrix");
  }
  if (c.size() == 0) throw UsageError("sinkhorn: empty cost matrix");
  if (!(beta > 0.0)) throw UsageError("sinkhorn: beta must be positive");
  if (iterations < 1) throw UsageError("sinkhorn: need at least one iteration");
  if (!c.allFinite()) throw NumericalError("sinkhorn: non-finite cost entries");
  if (!p.allFinite() || !q.allFinite() || p.minCoeff() < 0.0 || q.minCoeff() < 0.0) {
    throw UsageError("sinkhorn: marginals must be finite and nonnegative");
  }
  if (std::abs(p.sum() - q.sum()) > 1e-9) {
    throw UsageError("sinkhorn: marginal totals differ (" + std::to_string(p.sum()) + " vs " +
                     std::to_string(q.sum()) + ")");
  }

  const Matrix log_phi = -c / beta;
  const Vector log_p = safe_log(p);
  const Vector log_q = safe_log(q);
  Vector la = log_p;
  Vector lb = Vector::Zero(q.size());

  for (int it = 0; it < iterations; ++it) {
    for (Index k = 0; k < q.size(); ++k) {
      lb(k) = log_q(k) == kNegInf ? kNegInf : log_q(k) - log_sum_exp(la + log_phi.col(k));
    }
    for (Index i = 0; i < p.size(); ++i) {
      la(i) = log_p(i) == kNegInf ? kNegInf
                                  : log_p(i) - log_sum_exp(log_phi.row(i).transpose() + lb);
    }
  }
  if (la.array().isNaN().any() || lb.array().isNaN().any()) {
    throw NumericalError("sinkhorn: scaling vectors became NaN");
  }

  TransportPlan plan;
  plan.weights.resize(c.rows(), c.cols());
  for (Index i = 0; i < c.rows(); ++i) {
    for (Index k = 0; k < c.cols(); ++k) {
      plan.weights(i, k) = std::exp(la(i) + log_phi(i, k) + lb(k));
    }
  }
  plan.row_marginal = p;
  plan.col_marginal = q;
  plan.log_scaling_left = la;
  plan.log_scaling_right = lb;
  plan.beta = beta;
  plan.iterations = iterations;
  const double row_res = (plan.weights.rowwise().sum() - p).cwiseAbs().maxCoeff();
  const double col_res = (plan.weights.colwise().sum().transpose() - q).cwiseAbs().maxCoeff();
  plan.marginal_residual = std::max(row_res, col_res);
  return plan;
}

Matching brute_force_matching(const Matrix& z1, const Matrix& z2) {
  if (z1.rows() != z2.rows() || z1.cols() != z2.cols()) {
    throw UsageError("brute_force_matching: shape mismatch");
  }
  const Index n = z1.cols();
  if (n > 8) throw UsageError("brute_force_matching: N > 8 is outside the oracle's range");

  // pair(i, j) = ||z1_i - z2_j||^2
  Matrix pair(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) pair(i, j) = (z1.col(i) - z2.col(j)).squaredNorm();

  std::vector<Index> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Matching best{std::numeric_limits<double>::infinity(), perm};
  do {
    double total = 0.0;
    for (Index j = 0; j < n; ++j) total += pair(perm[j], j);
    if (total < best.cost) {
      best.cost = total;
      best.perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

std::string plan_to_json(const TransportPlan& plan) {
  nlohmann::json j;
  j["rows"] = plan.rows();
  j["cols"] = plan.cols();
  std::vector<double> flat;
  flat.reserve(static_cast<size_t>(plan.weights.size()));
  for (Index i = 0; i < plan.rows(); ++i)
    for (Index k = 0; k < plan.cols(); ++k) flat.push_back(plan.weights(i, k));
  j["weights"] = flat;
  j["p"] = to_std(plan.row_marginal);
  j["q"] = to_std(plan.col_marginal);
  j["beta"] = plan.beta;
  j["iterations"] = plan.iterations;
  j["marginal_residual"] = plan.marginal_residual;
  return j.dump(2);
}

TransportPlan plan_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("transport plan JSON: ") + e.what());
  }
  TransportPlan plan;
  try {
    const auto rows = j.at("rows").get<Index>();
    const auto cols = j.at("cols").get<Index>();
    const auto flat = j.at("weights").get<std::vector<double>>();
    if (static_cast<Index>(flat.size()) != rows * cols) {
      throw DataError("transport plan JSON: weights length does not match rows*cols");
    }
    plan.weights.resize(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index k = 0; k < cols; ++k) plan.weights(i, k) = flat[static_cast<size_t>(i * cols + k)];
    plan.row_marginal = from_std(j.at("p").get<std::vector<double>>());
    plan.col_marginal = from_std(j.at("q").get<std::vector<double>>());
    plan.beta = j.at("beta").get<double>();
    plan.iterations = j.at("iterations").get<int>();
    plan.marginal_residual = j.at("marginal_residual").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("transport plan JSON: ") + e.what());
  }
  return plan;
}

void write_plan_csv(std::ostream& out, const TransportPlan& plan) {
  out << std::setprecision(17);
  for (Index i = 0; i < plan.rows(); ++i) {
    for (Index k = 0; k < plan.cols(); ++k) {
      if (k) out << ',';
      out << plan.weights(i, k);
    }
    out << '\n';
  }
}

}  // namespace hotmv
