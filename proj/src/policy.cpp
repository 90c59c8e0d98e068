#include "iwpgpe/policy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace iwpgpe {

namespace {

void check_shapes(const PolicyParams& theta, const HyperParams& rho) {
  if (theta.size() != rho.size() || rho.eta.size() != rho.tau.size()) {
    throw std::invalid_argument("shape mismatch: theta has " +
                                std::to_string(theta.size()) +
                                " entries, hyper-parameters " +
                                std::to_string(rho.size()));
  }
}

}  // namespace

std::size_t feature_dim(EnvKind kind) {
  return kind == EnvKind::Reaching ? kReachingFeatures : kCartPoleFeatures;
}

PolicyParams::PolicyParams(std::size_t r, std::size_t c,
                           std::vector<double> values)
    : rows(r), cols(c), theta(std::move(values)) {
  if (theta.size() != rows * cols) {
    throw std::invalid_argument("policy params: size does not match shape");
  }
}

HyperParams::HyperParams(std::vector<double> means, std::vector<double> stds)
    : eta(std::move(means)), tau(std::move(stds)) {
  if (eta.size() != tau.size()) {
    throw std::invalid_argument("hyper-params: eta and tau differ in length");
  }
}

HyperParams HyperParams::uniform(std::size_t dim, double mean, double std) {
  return HyperParams(std::vector<double>(dim, mean),
                     std::vector<double>(dim, std));
}

double HyperParams::mean_tau() const {
  if (tau.empty()) return 0.0;
  double s = 0.0;
  for (double t : tau) s += t;
  return s / static_cast<double>(tau.size());
}

void HyperParams::validate(double tau_min) const {
  if (!(tau_min > 0.0)) throw std::invalid_argument("tau_min must be > 0");
  if (eta.size() != tau.size()) {
    throw std::invalid_argument("hyper-params: eta and tau differ in length");
  }
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (!std::isfinite(eta[i]) || !std::isfinite(tau[i]) || tau[i] < tau_min) {
      throw std::invalid_argument("hyper-params: component " +
                                  std::to_string(i) + " invalid");
    }
  }
}

double GradientVec::squared_norm() const {
  double s = 0.0;
  for (double g : d_eta) s += g * g;
  for (double g : d_tau) s += g * g;
  return s;
}

double GradientVec::norm() const { return std::sqrt(squared_norm()); }

bool GradientVec::is_finite() const {
  for (double g : d_eta)
    if (!std::isfinite(g)) return false;
  for (double g : d_tau)
    if (!std::isfinite(g)) return false;
  return true;
}

void GradientVec::add_scaled(const GradientVec& other, double scale) {
  if (other.size() != size()) {
    throw std::invalid_argument("gradient: size mismatch");
  }
  for (std::size_t i = 0; i < d_eta.size(); ++i) {
    d_eta[i] += scale * other.d_eta[i];
    d_tau[i] += scale * other.d_tau[i];
  }
}

void GradientVec::scale(double s) {
  for (double& g : d_eta) g *= s;
  for (double& g : d_tau) g *= s;
}

FeatureVec featurize(const State& x, EnvKind kind) {
  if (x.joints.size() != kNumJoints || x.joint_vels.size() != kNumJoints) {
    throw std::invalid_argument("featurize: expected 5 joints");
  }
  FeatureVec phi;
  auto& v = phi.values;
  if (kind == EnvKind::Reaching) {
    if (!x.extras.empty()) {
      throw std::invalid_argument("featurize: reaching state has extras");
    }
    v.reserve(kReachingFeatures);
    v.insert(v.end(), x.joints.begin(), x.joints.end());
    v.insert(v.end(), x.joint_vels.begin(), x.joint_vels.end());
  } else {
    // extras = (z, z_dot, pole angle, pole rate); s = [psi, z, angle]
    if (x.extras.size() != 4) {
      throw std::invalid_argument("featurize: cart-pole state needs 4 extras");
    }
    v.reserve(kCartPoleFeatures);
    v.insert(v.end(), x.joints.begin(), x.joints.end());
    v.push_back(x.extras[0]);
    v.push_back(x.extras[2]);
    v.insert(v.end(), x.joint_vels.begin(), x.joint_vels.end());
    v.push_back(x.extras[1]);
    v.push_back(x.extras[3]);
  }
  v.push_back(1.0);
  return phi;
}

Action act(const PolicyParams& theta, const FeatureVec& phi) {
  if (theta.cols != phi.values.size() ||
      theta.theta.size() != theta.rows * theta.cols) {
    throw std::invalid_argument("act: parameter shape does not match features");
  }
  Action u;
  u.desired_joint_vels.assign(theta.rows, 0.0);
  for (std::size_t i = 0; i < theta.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < theta.cols; ++j) {
      s += theta.at(i, j) * phi.values[j];
    }
    u.desired_joint_vels[i] = s;
  }
  return u;
}

PolicyParams sample_params(const HyperParams& rho, std::size_t rows,
                           std::size_t cols, RngStream& rng) {
  if (rows * cols != rho.size()) {
    throw std::invalid_argument("sample_params: shape does not match rho");
  }
  PolicyParams p(rows, cols);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    p.theta[i] = gaussian_draw(rng, rho.eta[i], rho.tau[i]);
  }
  return p;
}

double log_density(const PolicyParams& theta, const HyperParams& rho) {
  check_shapes(theta, rho);
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  double s = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double z = (theta.theta[i] - rho.eta[i]) / rho.tau[i];
    s += -kHalfLog2Pi - std::log(rho.tau[i]) - 0.5 * z * z;
  }
  return s;
}

GradientVec log_density_grad(const PolicyParams& theta,
                             const HyperParams& rho) {
  check_shapes(theta, rho);
  GradientVec g(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double d = theta.theta[i] - rho.eta[i];
    const double t = rho.tau[i];
    g.d_eta[i] = d / (t * t);
    g.d_tau[i] = (d * d - t * t) / (t * t * t);
  }
  return g;
}

PolicyParams mean_policy(const HyperParams& rho, std::size_t rows,
                         std::size_t cols) {
  return PolicyParams(rows, cols, rho.eta);
}

}  // namespace iwpgpe
