#include "iwpgpe/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace iwpgpe {

GradientVec pgpe_gradient(std::span<const Sample> samples,
                          const HyperParams& rho) {
  if (samples.empty()) throw std::invalid_argument("empty sample list");
  GradientVec total(rho.size());
  for (const auto& s : samples) {
    total.add_scaled(log_density_grad(s.theta, rho), s.ret);
  }
  total.scale(1.0 / static_cast<double>(samples.size()));
  return total;
}

double importance_weight(const PolicyParams& theta, const HyperParams& rho,
                         const HyperParams& sampler_rho,
                         const ImportanceOptions& opts) {
  if (rho.size() != sampler_rho.size()) {
    throw std::invalid_argument("importance_weight: dimension mismatch");
  }
  double log_w = log_density(theta, rho) - log_density(theta, sampler_rho);
  if (opts.log_weight_clamp) {
    const double c = *opts.log_weight_clamp;
    log_w = std::clamp(log_w, -c, c);
  }
  return std::exp(log_w);
}

double optimal_baseline(std::span<const BufferSample> buffer,
                        const HyperParams& rho,
                        const ImportanceOptions& opts) {
  if (buffer.empty()) throw std::invalid_argument("empty buffer");
  double num = 0.0;
  double den = 0.0;
  for (const auto& s : buffer) {
    const double w = importance_weight(s.theta, rho, s.sampler_rho, opts);
    const double c = w * w * log_density_grad(s.theta, rho).squared_norm();
    num += s.ret * c;
    den += c;
  }
  if (!(den > std::numeric_limits<double>::min())) {
    throw std::domain_error("degenerate baseline denominator");
  }
  return num / den;
}

GradientVec iwpgpe_gradient(std::span<const BufferSample> buffer,
                            const HyperParams& rho, double baseline,
                            const ImportanceOptions& opts) {
  if (buffer.empty()) throw std::invalid_argument("empty buffer");
  GradientVec total(rho.size());
  for (const auto& s : buffer) {
    const double w = importance_weight(s.theta, rho, s.sampler_rho, opts);
    total.add_scaled(log_density_grad(s.theta, rho), (s.ret - baseline) * w);
  }
  total.scale(1.0 / static_cast<double>(buffer.size()));
  return total;
}

}  // namespace iwpgpe
