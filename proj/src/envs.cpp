#include "iwpgpe/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace iwpgpe {

namespace {

using Vec = std::vector<double>;

template <typename Deriv>
Vec rk4(const Deriv& f, const Vec& x, double t, double dt) {
  const std::size_t n = x.size();
  Vec tmp(n);
  const Vec k1 = f(t, x);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
  const Vec k2 = f(t + 0.5 * dt, tmp);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
  const Vec k3 = f(t + 0.5 * dt, tmp);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + dt * k3[i];
  const Vec k4 = f(t + dt, tmp);
  Vec out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

// writes joint accelerations of the PD-driven arm into dx[5..9] and joint
// velocities into dx[0..4]
void arm_derivative(const Vec& x, double t, std::span<const double> start,
                    std::span<const double> rate, const PdGains& gains,
                    Vec& dx) {
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    const double psi = x[i];
    const double psi_dot = x[kNumJoints + i];
    const double des = start[i] + rate[i] * t;
    dx[i] = psi_dot;
    dx[kNumJoints + i] =
        -gains.kp * (psi - des) - gains.kd * (psi_dot - rate[i]);
  }
}

void check_finite(const State& x, const Action& u) {
  x.validate();
  if (x.joints.size() != kNumJoints) {
    throw std::invalid_argument("step: expected 5 joints");
  }
  u.validate(kNumJoints);
}

Vec saturated_rates(const Action& u, double limit) {
  Vec rate(kNumJoints);
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    rate[i] = std::clamp(u.desired_joint_vels[i], -limit, limit);
  }
  return rate;
}

Vec desired_positions(const State& x, std::span<const double> rate, double dt) {
  Vec des(kNumJoints);
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    des[i] = x.joints[i] + rate[i] * dt;
  }
  return des;
}

// joint limits: clamp the angle and drop velocity pointing further out
void clamp_joints(Vec& x, double limit) {
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    double& psi = x[i];
    double& psi_dot = x[kNumJoints + i];
    if (psi > limit) {
      psi = limit;
      if (psi_dot > 0.0) psi_dot = 0.0;
    } else if (psi < -limit) {
      psi = -limit;
      if (psi_dot < 0.0) psi_dot = 0.0;
    }
  }
}

double tracking_cost(std::span<const double> psi, std::span<const double> des,
                     double beta) {
  double c = 0.0;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    const double e = psi[i] - des[i];
    c += e * e;
  }
  return beta * c;
}

Vec3 rot_x(const Vec3& v, double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {v[0], c * v[1] - s * v[2], s * v[1] + c * v[2]};
}

Vec3 rot_y(const Vec3& v, double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {c * v[0] + s * v[2], v[1], -s * v[0] + c * v[2]};
}

Vec3 rot_z(const Vec3& v, double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]};
}

Vec3 add(const Vec3& a, const Vec3& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

}  // namespace

void EnvConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument(what);
  };
  if (!(dt > 0.0)) fail("dt must be > 0");
  if (horizon < 1) fail("horizon must be >= 1");
  if (!(gains.kp > 0.0)) fail("kp must be > 0");
  if (!(gains.kd > 0.0)) fail("kd must be > 0");
  if (!(reward_alpha > 0.0)) fail("reward_alpha must be > 0");
  if (!(cost_beta >= 0.0)) fail("cost_beta must be >= 0");
  if (!(joint_limit > 0.0)) fail("joint_limit must be > 0");
  if (!(max_joint_velocity > 0.0)) fail("max_joint_velocity must be > 0");
  if (!(arm.upper_arm > 0.0) || !(arm.forearm > 0.0)) {
    fail("arm link lengths must be > 0");
  }
  if (kind == EnvKind::CartPole) {
    const auto& p = cartpole;
    if (!(p.cart_mass > 0.0)) fail("cart_mass must be > 0");
    if (!(p.pole_mass > 0.0)) fail("pole_mass must be > 0");
    if (!(p.pole_half_length > 0.0)) fail("pole_half_length must be > 0");
    if (!(p.gravity >= 0.0)) fail("gravity must be >= 0");
    if (!(p.force_gain >= 0.0)) fail("force_gain must be >= 0");
  }
}

Vec3 default_reaching_target(const ArmGeometry& arm) {
  Vec3 rel{kNominalTarget[0] - arm.shoulder_offset[0],
           kNominalTarget[1] - arm.shoulder_offset[1],
           kNominalTarget[2] - arm.shoulder_offset[2]};
  const double d2 = rel[0] * rel[0] + rel[1] * rel[1] + rel[2] * rel[2];
  return d2 <= arm.reach() * arm.reach() ? kNominalTarget : kFallbackTarget;
}

EnvConfig reaching_config() {
  EnvConfig cfg;
  cfg.kind = EnvKind::Reaching;
  cfg.reward_alpha = 10.0;
  cfg.cost_beta = 0.0005;
  cfg.target = default_reaching_target(cfg.arm);
  return cfg;
}

EnvConfig cartpole_config() {
  EnvConfig cfg;
  cfg.kind = EnvKind::CartPole;
  cfg.reward_alpha = 1.0;
  cfg.cost_beta = 0.0005;
  cfg.target = default_reaching_target(cfg.arm);
  return cfg;
}

std::vector<double> pd_torque(std::span<const double> psi,
                              std::span<const double> psi_dot,
                              std::span<const double> psi_des,
                              std::span<const double> psi_des_dot,
                              const PdGains& gains) {
  const std::size_t n = psi.size();
  if (psi_dot.size() != n || psi_des.size() != n || psi_des_dot.size() != n) {
    throw std::invalid_argument("pd_torque: length mismatch");
  }
  std::vector<double> tau(n);
  for (std::size_t i = 0; i < n; ++i) {
    tau[i] = -gains.kp * (psi[i] - psi_des[i]) -
             gains.kd * (psi_dot[i] - psi_des_dot[i]);
  }
  return tau;
}

Vec3 forward_kinematics(std::span<const double> psi, const ArmGeometry& arm) {
  if (psi.size() != kNumJoints) {
    throw std::invalid_argument("forward_kinematics: expected 5 angles");
  }
  // hand in the upper-arm frame, then back through shoulder and torso
  Vec3 p = rot_y({0.0, 0.0, -arm.forearm}, psi[kElbow]);
  p = add({0.0, 0.0, -arm.upper_arm}, p);
  p = rot_z(p, psi[kShoulderYaw]);
  p = rot_x(p, psi[kShoulderRoll]);
  p = rot_y(p, psi[kShoulderPitch]);
  p = add(arm.shoulder_offset, p);
  return rot_z(p, psi[kTorsoYaw]);
}

double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

double reaching_reward(const State& x, std::span<const double> psi_des,
                       const EnvConfig& cfg) {
  const Vec3 hand = forward_kinematics(x.joints, cfg.arm);
  const double q =
      std::exp(-cfg.reward_alpha * squared_distance(hand, cfg.target));
  return q - tracking_cost(x.joints, psi_des, cfg.cost_beta);
}

StepResult reaching_step(const State& x, const Action& u,
                         const EnvConfig& cfg) {
  check_finite(x, u);
  const Vec rate = saturated_rates(u, cfg.max_joint_velocity);
  const Vec des = desired_positions(x, rate, cfg.dt);

  Vec s(2 * kNumJoints);
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    s[i] = x.joints[i];
    s[kNumJoints + i] = x.joint_vels[i];
  }
  s = arm_plant_rk4_step(s, 0.0, cfg.dt, x.joints, rate, cfg.gains);
  clamp_joints(s, cfg.joint_limit);

  StepResult out;
  out.state.joints.assign(s.begin(), s.begin() + kNumJoints);
  out.state.joint_vels.assign(s.begin() + kNumJoints, s.end());
  out.reward = reaching_reward(out.state, des, cfg);
  if (!std::isfinite(out.reward)) {
    throw std::runtime_error("reaching_step: non-finite reward");
  }
  return out;
}

double wand_angular_velocity(const State& x) {
  if (x.joint_vels.size() != kNumJoints) {
    throw std::invalid_argument("wand_angular_velocity: expected 5 joints");
  }
  return x.joint_vels[kShoulderPitch] + x.joint_vels[kElbow];
}

double cart_force(double z_dot, double omega, const CartPoleParams& params) {
  return -params.force_gain * (z_dot - params.wand_gain * omega);
}

double cartpole_reward(const State& x, std::span<const double> psi_des,
                       const EnvConfig& cfg) {
  const double z = x.extras.at(0);
  const double angle = x.extras.at(2);
  const double q = std::exp(-cfg.reward_alpha * (z * z + angle * angle));
  return q - tracking_cost(x.joints, psi_des, cfg.cost_beta);
}

StepResult cartpole_step(const State& x, const Action& u,
                         const EnvConfig& cfg) {
  check_finite(x, u);
  if (x.extras.size() != 4) {
    throw std::invalid_argument("cartpole_step: state needs 4 extras");
  }
  const Vec rate = saturated_rates(u, cfg.max_joint_velocity);
  const Vec des = desired_positions(x, rate, cfg.dt);
  const auto& params = cfg.cartpole;
  const std::span<const double> start = x.joints;

  // [psi(5), psi_dot(5), z, z_dot, angle, angle_rate]
  constexpr std::size_t kZ = 2 * kNumJoints;
  auto f = [&](double t, const Vec& s) {
    Vec ds(s.size());
    arm_derivative(s, t, start, rate, cfg.gains, ds);
    const double omega = s[kNumJoints + kShoulderPitch] + s[kNumJoints + kElbow];
    const double force = cart_force(s[kZ + 1], omega, params);
    const CartPoleCoords c{s[kZ], s[kZ + 1], s[kZ + 2], s[kZ + 3]};
    const auto acc = cartpole_accelerations(c, force, params);
    ds[kZ] = c.z_dot;
    ds[kZ + 1] = acc[0];
    ds[kZ + 2] = c.angle_rate;
    ds[kZ + 3] = acc[1];
    return ds;
  };

  Vec s(kZ + 4);
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    s[i] = x.joints[i];
    s[kNumJoints + i] = x.joint_vels[i];
  }
  for (std::size_t i = 0; i < 4; ++i) s[kZ + i] = x.extras[i];
  s = rk4(f, s, 0.0, cfg.dt);
  clamp_joints(s, cfg.joint_limit);
  s[kZ + 2] = wrap_angle(s[kZ + 2]);

  StepResult out;
  out.state.joints.assign(s.begin(), s.begin() + kNumJoints);
  out.state.joint_vels.assign(s.begin() + kNumJoints, s.begin() + kZ);
  out.state.extras.assign(s.begin() + kZ, s.end());
  out.reward = cartpole_reward(out.state, des, cfg);
  if (!std::isfinite(out.reward) || !std::isfinite(s[kZ]) ||
      !std::isfinite(s[kZ + 1]) || !std::isfinite(s[kZ + 3])) {
    throw std::runtime_error("cartpole_step: non-finite state");
  }
  return out;
}

double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * std::numbers::pi);
  if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
  return w;
}

std::vector<double> arm_plant_rk4_step(std::span<const double> x, double t,
                                       double dt,
                                       std::span<const double> ramp_start,
                                       std::span<const double> ramp_rate,
                                       const PdGains& gains) {
  if (x.size() != 2 * kNumJoints || ramp_start.size() != kNumJoints ||
      ramp_rate.size() != kNumJoints) {
    throw std::invalid_argument("arm_plant_rk4_step: bad dimensions");
  }
  auto f = [&](double tt, const Vec& s) {
    Vec ds(s.size());
    arm_derivative(s, tt, ramp_start, ramp_rate, gains, ds);
    return ds;
  };
  return rk4(f, Vec(x.begin(), x.end()), t, dt);
}

std::array<double, 2> cartpole_accelerations(const CartPoleCoords& c,
                                             double force,
                                             const CartPoleParams& params) {
  // Lagrangian of a cart with a uniform rod pinned at its top face:
  //   [M+m        m l cos][z_dd]   [F + m l sin w^2]
  //   [m l cos  4/3 m l^2][a_dd] = [m g l sin      ]
  const double m = params.pole_mass;
  const double l = params.pole_half_length;
  const double total = params.cart_mass + m;
  const double s = std::sin(c.angle);
  const double co = std::cos(c.angle);
  const double a11 = total;
  const double a12 = m * l * co;
  const double a22 = 4.0 / 3.0 * m * l * l;
  const double b1 = force + m * l * s * c.angle_rate * c.angle_rate;
  const double b2 = m * params.gravity * l * s;
  const double det = a11 * a22 - a12 * a12;
  return {(b1 * a22 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det};
}

CartPoleCoords cartpole_plant_rk4_step(const CartPoleCoords& c, double force,
                                       double dt,
                                       const CartPoleParams& params) {
  auto f = [&](double, const Vec& s) {
    const CartPoleCoords cc{s[0], s[1], s[2], s[3]};
    const auto acc = cartpole_accelerations(cc, force, params);
    return Vec{cc.z_dot, acc[0], cc.angle_rate, acc[1]};
  };
  const Vec out = rk4(f, Vec{c.z, c.z_dot, c.angle, c.angle_rate}, 0.0, dt);
  return {out[0], out[1], out[2], out[3]};
}

double cartpole_energy(const CartPoleCoords& c, const CartPoleParams& params) {
  const double m = params.pole_mass;
  const double l = params.pole_half_length;
  const double kinetic =
      0.5 * (params.cart_mass + m) * c.z_dot * c.z_dot +
      m * l * std::cos(c.angle) * c.z_dot * c.angle_rate +
      0.5 * (4.0 / 3.0) * m * l * l * c.angle_rate * c.angle_rate;
  const double potential = m * params.gravity * l * std::cos(c.angle);
  return kinetic + potential;
}

ReachingEnv::ReachingEnv(EnvConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.kind != EnvKind::Reaching) {
    throw std::invalid_argument("ReachingEnv: config kind is not reaching");
  }
  cfg_.validate();
}

State ReachingEnv::initial_state() const {
  State x;
  x.joints.assign(kNumJoints, 0.0);
  x.joint_vels.assign(kNumJoints, 0.0);
  return x;
}

StepResult ReachingEnv::step(const State& x, const Action& u) const {
  return reaching_step(x, u, cfg_);
}

CartPoleEnv::CartPoleEnv(EnvConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.kind != EnvKind::CartPole) {
    throw std::invalid_argument("CartPoleEnv: config kind is not cart-pole");
  }
  cfg_.validate();
}

State CartPoleEnv::initial_state() const {
  State x;
  x.joints.assign(kNumJoints, 0.0);
  x.joint_vels.assign(kNumJoints, 0.0);
  // hanging at rest
  x.extras = {0.0, 0.0, std::numbers::pi, 0.0};
  return x;
}

StepResult CartPoleEnv::step(const State& x, const Action& u) const {
  return cartpole_step(x, u, cfg_);
}

double toy_rollout(double theta, RngStream& rng, const ToyConfig& cfg) {
  const double d = theta - cfg.optimum;
  double r = -d * d;
  if (cfg.noise_std > 0.0) r += cfg.noise_std * rng.normal();
  return r;
}

double toy_expected_return(double eta, double tau, const ToyConfig& cfg) {
  const double d = eta - cfg.optimum;
  return -d * d - tau * tau;
}

std::array<double, 2> toy_gradient(double eta, double tau,
                                   const ToyConfig& cfg) {
  return {-2.0 * (eta - cfg.optimum), -2.0 * tau};
}

}  // namespace iwpgpe
