#ifndef IWPGPE_ESTIMATORS_HPP_
#define IWPGPE_ESTIMATORS_HPP_

#include <optional>
#include <span>

#include "iwpgpe/policy.hpp"

namespace iwpgpe {

// on-policy sample: parameters and the return of the trial they produced
struct Sample {
  PolicyParams theta;
  double ret = 0.0;
};

// A reusable sample. `sampler_rho` is the hyper-parameter snapshot theta was
// drawn under, so every sample carries its own importance weight.
struct BufferSample {
  PolicyParams theta;
  double ret = 0.0;
  HyperParams sampler_rho;
};

struct ImportanceOptions {
  // symmetric clamp on log w; disabled when empty
  std::optional<double> log_weight_clamp;
};

// (1/N) sum_n grad log p(theta_n | rho) R_n
GradientVec pgpe_gradient(std::span<const Sample> samples,
                          const HyperParams& rho);

// p(theta|rho) / p(theta|sampler_rho), evaluated in log space
double importance_weight(const PolicyParams& theta, const HyperParams& rho,
                         const HyperParams& sampler_rho,
                         const ImportanceOptions& opts = {});

// Variance-minimizing constant baseline
//   b* = sum R w^2 |g|^2 / sum w^2 |g|^2,  g = grad log p(theta|rho).
// Throws "degenerate baseline denominator" if the denominator vanishes.
double optimal_baseline(std::span<const BufferSample> buffer,
                        const HyperParams& rho,
                        const ImportanceOptions& opts = {});

// (1/N') sum_n (R_n - b) w_n grad log p(theta_n | rho)
GradientVec iwpgpe_gradient(std::span<const BufferSample> buffer,
                            const HyperParams& rho, double baseline,
                            const ImportanceOptions& opts = {});

}  // namespace iwpgpe

#endif  // IWPGPE_ESTIMATORS_HPP_
