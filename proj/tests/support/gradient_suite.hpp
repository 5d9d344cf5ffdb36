#pragma once

// Finite-difference checks of every analytic gradient in the library. Shared
// by the unit tests (few instances) and the acceptance run (many).

#include <cstdint>
#include <string>
#include <vector>

namespace hotmv::testing {

struct GradientCheck {
  std::string name;
  int instances = 0;
  double worst = 0.0;  // largest relative error over all instances and tensors
};

inline constexpr double kFiniteDifferenceStep = 1e-5;
inline constexpr double kGradientTolerance = 1e-4;

GradientCheck check_sliced_wasserstein(int instances, std::uint64_t seed);
GradientCheck check_ortho_penalty(int instances, std::uint64_t seed);
GradientCheck check_lscca(int instances, std::uint64_t seed);
GradientCheck check_gdcca(int instances, std::uint64_t seed);
GradientCheck check_sw_pairwise(int instances, std::uint64_t seed);
GradientCheck check_sw_reference(int instances, std::uint64_t seed);
GradientCheck check_hot_pairwise(int instances, std::uint64_t seed);
GradientCheck check_hot_reference(int instances, std::uint64_t seed);
GradientCheck check_mlp(int instances, std::uint64_t seed);
GradientCheck check_softmax_xent(int instances, std::uint64_t seed);
GradientCheck check_reconstruction(int instances, std::uint64_t seed);

std::vector<GradientCheck> run_gradient_suite(int instances, std::uint64_t seed);

}  // namespace hotmv::testing
