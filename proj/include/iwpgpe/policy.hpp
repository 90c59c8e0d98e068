#ifndef IWPGPE_POLICY_HPP_
#define IWPGPE_POLICY_HPP_

#include <cstddef>
#include <vector>

#include "iwpgpe/core.hpp"

namespace iwpgpe {

enum class EnvKind { Reaching, CartPole };

inline constexpr std::size_t kNumJoints = 5;
inline constexpr std::size_t kReachingFeatures = 11;
inline constexpr std::size_t kCartPoleFeatures = 15;

std::size_t feature_dim(EnvKind kind);

// basis vector phi(x); the last entry is the constant 1
struct FeatureVec {
  std::vector<double> values;
};

// Linear controller theta, shape rows x cols, flattened row-major. Row i
// produces the desired velocity of joint i.
struct PolicyParams {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> theta;

  PolicyParams() = default;
  PolicyParams(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), theta(r * c, fill) {}
  PolicyParams(std::size_t r, std::size_t c, std::vector<double> values);

  std::size_t size() const { return theta.size(); }
  double& at(std::size_t row, std::size_t col) { return theta[row * cols + col]; }
  double at(std::size_t row, std::size_t col) const {
    return theta[row * cols + col];
  }
};

// Independent Gaussian over every component of theta.
struct HyperParams {
  std::vector<double> eta;
  std::vector<double> tau;

  HyperParams() = default;
  HyperParams(std::vector<double> means, std::vector<double> stds);
  static HyperParams uniform(std::size_t dim, double mean, double std);

  std::size_t size() const { return eta.size(); }
  double mean_tau() const;
  // throws std::invalid_argument unless every tau_i >= tau_min > 0
  void validate(double tau_min) const;
};

// stacked (d/d eta, d/d tau), same shape as HyperParams
struct GradientVec {
  std::vector<double> d_eta;
  std::vector<double> d_tau;

  GradientVec() = default;
  explicit GradientVec(std::size_t dim) : d_eta(dim, 0.0), d_tau(dim, 0.0) {}

  std::size_t size() const { return d_eta.size(); }
  double squared_norm() const;
  double norm() const;
  bool is_finite() const;
  // this += scale * other
  void add_scaled(const GradientVec& other, double scale);
  void scale(double s);
};

FeatureVec featurize(const State& x, EnvKind kind);

Action act(const PolicyParams& theta, const FeatureVec& phi);

PolicyParams sample_params(const HyperParams& rho, std::size_t rows,
                           std::size_t cols, RngStream& rng);

double log_density(const PolicyParams& theta, const HyperParams& rho);

GradientVec log_density_grad(const PolicyParams& theta,
                             const HyperParams& rho);

// theta = eta, used for deterministic evaluation
PolicyParams mean_policy(const HyperParams& rho, std::size_t rows,
                         std::size_t cols);

}  // namespace iwpgpe

#endif  // IWPGPE_POLICY_HPP_
