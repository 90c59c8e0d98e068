#include "iwpgpe/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "iwpgpe/estimators.hpp"

namespace iwpgpe {
namespace {

std::vector<BufferSample> draw_toy_buffer(const HyperParams& sampler,
                                          std::size_t n, RngStream& rng,
                                          const ToyConfig& cfg) {
  std::vector<BufferSample> out(n);
  for (auto& s : out) {
    s.theta = sample_params(sampler, 1, 1, rng);
    s.ret = toy_rollout(s.theta.theta[0], rng, cfg);
    s.sampler_rho = sampler;
  }
  return out;
}

std::string format(const char* fmt, double a, double b, double c = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, fmt, a, b, c);
  return buf;
}

}  // namespace

GradientVec toy_gradient_estimate(const HyperParams& target,
                                  const HyperParams& sampler, std::size_t n,
                                  std::uint64_t seed, const ToyConfig& cfg) {
  if (target.size() != 1 || sampler.size() != 1) {
    throw std::invalid_argument("toy oracle: hyper-parameters must be scalar");
  }
  if (n == 0) throw std::invalid_argument("toy oracle: zero samples");
  RngStream rng(seed);
  const auto buffer = draw_toy_buffer(sampler, n, rng, cfg);
  return iwpgpe_gradient(buffer, target, 0.0);
}

double max_relative_error(const GradientVec& estimate,
                          const std::array<double, 2>& truth) {
  const double e_eta = std::abs(estimate.d_eta.at(0) - truth[0]) /
                       std::abs(truth[0]);
  const double e_tau = std::abs(estimate.d_tau.at(0) - truth[1]) /
                       std::abs(truth[1]);
  return std::max(e_eta, e_tau);
}

double median_relative_error(const HyperParams& target,
                             const HyperParams& sampler, std::size_t n,
                             int seeds, std::uint64_t seed,
                             const ToyConfig& cfg) {
  if (seeds < 1) throw std::invalid_argument("toy oracle: no seeds");
  const auto truth = toy_gradient(target.eta[0], target.tau[0], cfg);
  const RngStream root(seed);
  std::vector<double> errs;
  for (int k = 0; k < seeds; ++k) {
    const std::uint64_t s = root.substream(n, static_cast<std::uint64_t>(k)).seed();
    errs.push_back(
        max_relative_error(toy_gradient_estimate(target, sampler, n, s, cfg),
                           truth));
  }
  std::sort(errs.begin(), errs.end());
  const std::size_t m = errs.size() / 2;
  return errs.size() % 2 ? errs[m] : 0.5 * (errs[m - 1] + errs[m]);
}

BaselineStudy toy_baseline_study(const HyperParams& target,
                                 const HyperParams& sampler, int reps,
                                 std::size_t nprime, int grid_points,
                                 std::uint64_t seed, const ToyConfig& cfg) {
  if (reps < 2 || nprime == 0 || grid_points < 2) {
    throw std::invalid_argument("baseline study: degenerate sizes");
  }
  const RngStream root(seed);
  const auto r_count = static_cast<std::size_t>(reps);
  const double inv_n = 1.0 / static_cast<double>(nprime);

  // Per repetition the estimate at baseline b is A - b B, with
  // A = mean(R w g) and B = mean(w g).
  std::vector<std::array<double, 2>> a(r_count), bvec(r_count), opt(r_count);
  double num = 0.0;
  double den = 0.0;
  double r_min = std::numeric_limits<double>::infinity();
  double r_max = -r_min;
  for (std::size_t r = 0; r < r_count; ++r) {
    RngStream rng = root.substream(r);
    const auto buffer = draw_toy_buffer(sampler, nprime, rng, cfg);
    std::array<double, 2> sa{}, sb{};
    for (const auto& s : buffer) {
      const double w = importance_weight(s.theta, target, s.sampler_rho);
      const GradientVec g = log_density_grad(s.theta, target);
      sa[0] += s.ret * w * g.d_eta[0];
      sa[1] += s.ret * w * g.d_tau[0];
      sb[0] += w * g.d_eta[0];
      sb[1] += w * g.d_tau[0];
      const double c = w * w * g.squared_norm();
      num += s.ret * c;
      den += c;
      r_min = std::min(r_min, s.ret);
      r_max = std::max(r_max, s.ret);
    }
    for (int j = 0; j < 2; ++j) {
      a[r][j] = sa[j] * inv_n;
      bvec[r][j] = sb[j] * inv_n;
    }
    const GradientVec own =
        iwpgpe_gradient(buffer, target, optimal_baseline(buffer, target));
    opt[r] = {own.d_eta[0], own.d_tau[0]};
  }

  auto trace_var = [&](auto&& est) {
    double total = 0.0;
    for (int j = 0; j < 2; ++j) {
      double mean = 0.0;
      for (std::size_t r = 0; r < r_count; ++r) mean += est(r, j);
      mean /= static_cast<double>(r_count);
      double var = 0.0;
      for (std::size_t r = 0; r < r_count; ++r) {
        const double d = est(r, j) - mean;
        var += d * d;
      }
      total += var / static_cast<double>(r_count);
    }
    return total;
  };

  BaselineStudy out;
  out.var_zero = trace_var([&](std::size_t r, int j) { return a[r][j]; });
  out.var_optimal = trace_var([&](std::size_t r, int j) { return opt[r][j]; });
  out.b_star = num / den;
  out.grid_step = (r_max - r_min) / static_cast<double>(grid_points - 1);
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < grid_points; ++k) {
    const double b = r_min + out.grid_step * k;
    const double v = trace_var(
        [&](std::size_t r, int j) { return a[r][j] - b * bvec[r][j]; });
    if (v < best) {
      best = v;
      out.b_grid = b;
    }
  }
  return out;
}

std::vector<OracleCheck> run_toy_oracles(std::size_t samples,
                                         std::uint64_t seed) {
  if (samples < 100) throw std::invalid_argument("samples must be >= 100");
  const HyperParams target({0.0}, {0.3});
  const HyperParams shifted({0.2}, {0.3});
  const auto truth = toy_gradient(0.0, 0.3);
  std::vector<OracleCheck> out;

  const double e_on = max_relative_error(
      toy_gradient_estimate(target, target, samples, seed), truth);
  out.push_back({"pgpe_on_policy", e_on <= 0.05,
                 format("max relative error %.4g (limit %.2g)", e_on, 0.05)});

  const double e_iw = max_relative_error(
      toy_gradient_estimate(target, shifted, samples, seed), truth);
  out.push_back({"iw_off_policy", e_iw <= 0.05,
                 format("max relative error %.4g (limit %.2g)", e_iw, 0.05)});

  std::array<double, 3> med{};
  for (int k = 0; k < 3; ++k) {
    const std::size_t n = samples / static_cast<std::size_t>(k == 0   ? 100
                                                              : k == 1 ? 10
                                                                       : 1);
    med[k] = median_relative_error(target, shifted, n, 20, seed);
  }
  out.push_back({"iw_error_decreasing", med[0] > med[1] && med[1] > med[2],
                 format("median relative error %.4g, %.4g, %.4g", med[0],
                        med[1], med[2])});

  const BaselineStudy b = toy_baseline_study(target, shifted, 1000, 10, 201,
                                             seed);
  out.push_back({"baseline_variance", b.var_optimal < b.var_zero,
                 format("variance with b* %.4g, with b=0 %.4g", b.var_optimal,
                        b.var_zero)});
  out.push_back({"baseline_grid",
                 std::abs(b.b_star - b.b_grid) <= b.grid_step * (1.0 + 1e-9),
                 format("b* %.4g, grid minimizer %.4g, step %.4g", b.b_star,
                        b.b_grid, b.grid_step)});
  return out;
}

}  // namespace iwpgpe
