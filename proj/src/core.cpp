#include "iwpgpe/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace iwpgpe {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

}  // namespace

void State::validate() const {
  if (joints.size() != joint_vels.size()) {
    throw std::invalid_argument("state: joints and joint_vels differ in length");
  }
  if (!all_finite(joints) || !all_finite(joint_vels) || !all_finite(extras)) {
    throw std::invalid_argument("state: non-finite entry");
  }
}

void Action::validate(std::size_t num_joints) const {
  if (desired_joint_vels.size() != num_joints) {
    throw std::invalid_argument("action: length does not match joint count");
  }
  if (!all_finite(desired_joint_vels)) {
    throw std::invalid_argument("action: non-finite entry");
  }
}

std::vector<double> Trajectory::rewards() const {
  std::vector<double> r;
  r.reserve(steps.size());
  for (const auto& s : steps) r.push_back(s.reward);
  return r;
}

std::uint64_t mix64(std::uint64_t x) {
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RngStream::result_type RngStream::operator()() {
  ++counter_;
  return mix64(seed_ + counter_ * kGolden);
}

double RngStream::uniform() {
  // 53 high bits -> [0, 1)
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double RngStream::normal() { return normal_(*this); }

RngStream RngStream::substream(std::uint64_t a, std::uint64_t b) const {
  std::uint64_t key = mix64(seed_ ^ 0x5851f42d4c957f2dULL);
  key = mix64(key + (a + 1) * kGolden);
  key = mix64(key ^ ((b + 1) * 0xd1342543de82ef95ULL));
  return RngStream(key);
}

double compute_return(std::span<const double> rewards, double gamma) {
  if (rewards.empty()) throw std::invalid_argument("empty trajectory");
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("gamma must be in [0, 1)");
  }
  double total = 0.0;
  double discount = 1.0;
  for (double r : rewards) {
    total += discount * r;
    discount *= gamma;
  }
  return total;
}

double compute_return(const Trajectory& h, double gamma) {
  if (h.steps.empty()) throw std::invalid_argument("empty trajectory");
  const auto r = h.rewards();
  return compute_return(r, gamma);
}

double gaussian_draw(RngStream& rng, double mean, double std) {
  if (!(std > 0.0)) {
    throw std::invalid_argument("non-positive standard deviation");
  }
  return mean + std * rng.normal();
}

}  // namespace iwpgpe
