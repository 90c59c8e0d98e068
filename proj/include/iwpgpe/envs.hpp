#ifndef IWPGPE_ENVS_HPP_
#define IWPGPE_ENVS_HPP_

#include <array>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "iwpgpe/core.hpp"
#include "iwpgpe/policy.hpp"

namespace iwpgpe {

using Vec3 = std::array<double, 3>;

// joint order: torso yaw, shoulder pitch, shoulder roll, shoulder yaw, elbow
inline constexpr std::size_t kTorsoYaw = 0;
inline constexpr std::size_t kShoulderPitch = 1;
inline constexpr std::size_t kShoulderRoll = 2;
inline constexpr std::size_t kShoulderYaw = 3;
inline constexpr std::size_t kElbow = 4;

// Target named for the original robot, and the substitute used when it lies
// outside the reach sphere of the shoulder.
inline constexpr Vec3 kNominalTarget{0.5, 0.7, 0.0};
inline constexpr Vec3 kFallbackTarget{0.35, 0.55, 0.0};

struct PdGains {
  double kp = 100.0;
  double kd = 20.0;
};

// Arm chain. x forward, y to the arm's side, z up; origin at the torso
// joints. At rest the arm hangs straight down.
struct ArmGeometry {
  Vec3 shoulder_offset{0.0, 0.25, 0.0};
  double upper_arm = 0.30;
  double forearm = 0.35;

  double reach() const { return upper_arm + forearm; }
};

struct CartPoleParams {
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double pole_half_length = 0.5;
  double gravity = 9.81;
  // F = -k (z_dot - wand_gain * omega)
  double force_gain = 100.0;
  double wand_gain = 5.0;
};

struct EnvConfig {
  EnvKind kind = EnvKind::Reaching;
  double dt = 0.02;
  int horizon = 50;
  PdGains gains;
  double reward_alpha = 10.0;
  double cost_beta = 0.0005;
  double joint_limit = std::numbers::pi;
  // servo saturation on commanded joint velocity (rad/s)
  double max_joint_velocity = 3.0;
  ArmGeometry arm;
  Vec3 target = kFallbackTarget;
  CartPoleParams cartpole;

  // throws std::invalid_argument naming the offending field
  void validate() const;
};

// nominal target when it is inside the shoulder reach sphere, else the
// fallback target
Vec3 default_reaching_target(const ArmGeometry& arm);

EnvConfig reaching_config();
EnvConfig cartpole_config();

struct StepResult {
  State state;
  double reward = 0.0;
};

// tau_i = -kp (psi_i - psi_des_i) - kd (psi_dot_i - psi_des_dot_i)
std::vector<double> pd_torque(std::span<const double> psi,
                              std::span<const double> psi_dot,
                              std::span<const double> psi_des,
                              std::span<const double> psi_des_dot,
                              const PdGains& gains);

Vec3 forward_kinematics(std::span<const double> psi,
                        const ArmGeometry& arm = {});

double squared_distance(const Vec3& a, const Vec3& b);

double reaching_reward(const State& x, std::span<const double> psi_des,
                       const EnvConfig& cfg);

StepResult reaching_step(const State& x, const Action& u, const EnvConfig& cfg);

// sagittal wand rate: shoulder pitch + elbow
double wand_angular_velocity(const State& x);

double cart_force(double z_dot, double omega, const CartPoleParams& params);

double cartpole_reward(const State& x, std::span<const double> psi_des,
                       const EnvConfig& cfg);

StepResult cartpole_step(const State& x, const Action& u, const EnvConfig& cfg);

// wrap to (-pi, pi]
double wrap_angle(double a);

// -- plant-level pieces, exposed for verification -- //

// Unit-inertia arm under PD tracking of the ramp psi_des(t) = start + rate t.
// x = [psi(5), psi_dot(5)]; t is measured from the start of the ramp.
std::vector<double> arm_plant_rk4_step(std::span<const double> x, double t,
                                       double dt,
                                       std::span<const double> ramp_start,
                                       std::span<const double> ramp_rate,
                                       const PdGains& gains);

// cart-pole coordinates without the arm
struct CartPoleCoords {
  double z = 0.0;
  double z_dot = 0.0;
  double angle = 0.0;
  double angle_rate = 0.0;
};

// accelerations (z_ddot, angle_ddot) for a horizontal force on the cart
std::array<double, 2> cartpole_accelerations(const CartPoleCoords& c,
                                             double force,
                                             const CartPoleParams& params);

// one RK4 step under a constant cart force (angle not wrapped)
CartPoleCoords cartpole_plant_rk4_step(const CartPoleCoords& c, double force,
                                       double dt,
                                       const CartPoleParams& params);

// kinetic + potential energy, potential zero at the pivot height
double cartpole_energy(const CartPoleCoords& c, const CartPoleParams& params);

// -- episodic environments -- //

class EpisodicEnv {
 public:
  virtual ~EpisodicEnv() = default;

  virtual EnvKind kind() const = 0;
  virtual const EnvConfig& config() const = 0;
  virtual State initial_state() const = 0;
  virtual StepResult step(const State& x, const Action& u) const = 0;

  int horizon() const { return config().horizon; }
};

class ReachingEnv final : public EpisodicEnv {
 public:
  explicit ReachingEnv(EnvConfig cfg);

  EnvKind kind() const override { return EnvKind::Reaching; }
  const EnvConfig& config() const override { return cfg_; }
  State initial_state() const override;
  StepResult step(const State& x, const Action& u) const override;

 private:
  EnvConfig cfg_;
};

class CartPoleEnv final : public EpisodicEnv {
 public:
  explicit CartPoleEnv(EnvConfig cfg);

  EnvKind kind() const override { return EnvKind::CartPole; }
  const EnvConfig& config() const override { return cfg_; }
  State initial_state() const override;
  StepResult step(const State& x, const Action& u) const override;

 private:
  EnvConfig cfg_;
};

// -- 1-D analytic toy -- //

struct ToyConfig {
  double optimum = 1.0;
  double noise_std = 0.1;
};

// one-step episode, R = -(theta - c*)^2 + noise_std * xi
double toy_rollout(double theta, RngStream& rng, const ToyConfig& cfg = {});

// closed forms under theta ~ N(eta, tau^2)
double toy_expected_return(double eta, double tau, const ToyConfig& cfg = {});
std::array<double, 2> toy_gradient(double eta, double tau,
                                   const ToyConfig& cfg = {});

}  // namespace iwpgpe

#endif  // IWPGPE_ENVS_HPP_
