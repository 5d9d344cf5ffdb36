#pragma once

// Reference implementations used only by the tests. They favour the most
// direct formula over speed and share no code with the library.

#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace hotmv::testing {

using Mat = Eigen::MatrixXd;

Mat random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0);

/// min over all permutations pi of sum_i (u_i - v_pi(i))^2.
double permutation_min_1d(const std::vector<double>& u, const std::vector<double>& v);

/// min over all column permutations P of ||z1 P - z2||_F^2.
double permutation_min(const Mat& z1, const Mat& z2);

/// Sliced Wasserstein with per-projection permutation enumeration instead of
/// sorting. Needs N <= 8.
double sliced_by_enumeration(const Mat& z1, const Mat& z2, const Mat& thetas);

/// Textbook Sinkhorn in the plain domain. Only safe when exp(-C / beta) does
/// not underflow.
Mat plain_sinkhorn(const Mat& cost, const Eigen::VectorXd& p, const Eigen::VectorXd& q, double beta,
                   int iterations);

/// ARI from pair counts over all unordered item pairs (Hubert and Arabie).
double ari_by_pairs(const std::vector<int>& a, const std::vector<int>& b);

/// Central differences of f around x, one entry at a time.
Mat numeric_gradient(const std::function<double(const Mat&)>& f, const Mat& x, double h = 1e-5);

/// ||a - b|| / max(||a||, ||b||, floor); Frobenius norms.
double relative_error(const Mat& a, const Mat& b, double floor = 1e-8);

}  // namespace hotmv::testing
