#ifndef IWPGPE_CORE_HPP_
#define IWPGPE_CORE_HPP_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace iwpgpe {

// Observation of one environment at one control step. `extras` carries the
// cart-pole coordinates (z, z_dot, pole angle, pole rate) and is empty for
// the reaching arm.
struct State {
  std::vector<double> joints;
  std::vector<double> joint_vels;
  std::vector<double> extras;

  // throws std::invalid_argument if the joint vectors disagree in length or
  // any entry is non-finite
  void validate() const;
};

// desired joint velocities produced by the policy
struct Action {
  std::vector<double> desired_joint_vels;

  void validate(std::size_t num_joints) const;
};

struct Step {
  State state;
  Action action;
  double reward = 0.0;
};

// One fixed-horizon trial. `steps.size() == horizon` once the trial is
// complete.
struct Trajectory {
  std::size_t horizon = 0;
  std::vector<Step> steps;

  std::vector<double> rewards() const;
};

// Counter-based SplitMix64 stream. Output i is a pure function of
// (seed, i), so a stream can be cloned, replayed, or split into independent
// substreams without any shared state.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed = 0) : seed_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()();

  // uniform on [0, 1)
  double uniform();
  // standard normal
  double normal();

  // derive an independent stream keyed by (seed, a, b)
  RngStream substream(std::uint64_t a, std::uint64_t b = 0) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// SplitMix64 finalizer
std::uint64_t mix64(std::uint64_t x);

// R(h) = sum_t gamma^(t-1) r_t with the first reward undiscounted.
double compute_return(std::span<const double> rewards, double gamma);
double compute_return(const Trajectory& h, double gamma);

// sample from N(mean, std^2); throws on std <= 0
double gaussian_draw(RngStream& rng, double mean, double std);

}  // namespace iwpgpe

#endif  // IWPGPE_CORE_HPP_
