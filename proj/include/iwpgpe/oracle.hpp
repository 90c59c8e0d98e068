#ifndef IWPGPE_ORACLE_HPP_
#define IWPGPE_ORACLE_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "iwpgpe/envs.hpp"
#include "iwpgpe/policy.hpp"

namespace iwpgpe {

// Monte-Carlo gradient checks on the scalar toy, where the expected return
// and its gradient are known in closed form.

// Draw n samples from `sampler`, roll the toy out once per sample, and
// return the importance-weighted estimate of grad J at `target` with a zero
// baseline. With sampler == target every weight is 1 and this is plain PGPE.
GradientVec toy_gradient_estimate(const HyperParams& target,
                                  const HyperParams& sampler, std::size_t n,
                                  std::uint64_t seed,
                                  const ToyConfig& cfg = {});

// max over components of |estimate - truth| / |truth|
double max_relative_error(const GradientVec& estimate,
                          const std::array<double, 2>& truth);

// median relative error of toy_gradient_estimate over `seeds` independent
// estimates of size n
double median_relative_error(const HyperParams& target,
                             const HyperParams& sampler, std::size_t n,
                             int seeds, std::uint64_t seed,
                             const ToyConfig& cfg = {});

struct BaselineStudy {
  // trace of the across-repetition covariance of the gradient estimate
  double var_zero = 0.0;     // b = 0
  double var_optimal = 0.0;  // b* recomputed for every buffer
  // b* over all pooled samples, and the grid point with least variance
  double b_star = 0.0;
  double b_grid = 0.0;
  double grid_step = 0.0;
};

// `reps` independent buffers of `nprime` toy samples drawn from `sampler`,
// gradients taken at `target`. The grid spans [min R, max R] over all
// pooled returns with `grid_points` evenly spaced values.
BaselineStudy toy_baseline_study(const HyperParams& target,
                                 const HyperParams& sampler, int reps,
                                 std::size_t nprime, int grid_points,
                                 std::uint64_t seed,
                                 const ToyConfig& cfg = {});

struct OracleCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

// The estimator verification suite: on-policy accuracy, off-policy
// consistency, and the optimal baseline, at the given sample size.
std::vector<OracleCheck> run_toy_oracles(std::size_t samples,
                                         std::uint64_t seed);

}  // namespace iwpgpe

#endif  // IWPGPE_ORACLE_HPP_
