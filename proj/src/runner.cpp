#include "iwpgpe/runner.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>

namespace iwpgpe {

void RunConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument(what);
  };
  if (batch_n < 1) fail("batch must be >= 1");
  if (buffer_nprime < batch_n) fail("buffer must be >= batch");
  if (!(gamma >= 0.0)) fail("gamma must be >= 0");
  if (!(gamma < 1.0)) fail("gamma must be < 1");
  if (!(lr_eta > 0.0)) fail("lr must be > 0");
  if (!(lr_tau > 0.0)) fail("lr_tau must be > 0");
  if (iterations < 1) fail("iters must be >= 1");
  if (seeds.empty()) fail("seed: at least one seed is required");
  if (!(tau_min > 0.0)) fail("tau_min must be > 0");
  if (!(tau_init >= tau_min)) fail("tau_init must be >= tau_min");
  if (!std::isfinite(eta_init)) fail("eta_init must be finite");
  if (eval_every < 1) fail("eval_every must be >= 1");
  if (threads < 1) fail("threads must be >= 1");
  if (log_weight_clamp && !(*log_weight_clamp > 0.0)) {
    fail("log_weight_clamp must be > 0");
  }
  if (!(max_grad_norm > 0.0)) fail("max_grad_norm must be > 0");
}

TrialResult run_trial(const EpisodicEnv& env, const PolicyParams& theta,
                      double gamma) {
  TrialResult out;
  auto& h = out.trajectory;
  h.horizon = static_cast<std::size_t>(env.horizon());
  h.steps.reserve(h.horizon);
  State x = env.initial_state();
  for (std::size_t t = 0; t < h.horizon; ++t) {
    Action u = act(theta, featurize(x, env.kind()));
    StepResult next = env.step(x, u);
    h.steps.push_back(Step{std::move(x), std::move(u), next.reward});
    x = std::move(next.state);
  }
  out.final_state = std::move(x);
  out.ret = compute_return(h, gamma);
  return out;
}

EpisodicTask::EpisodicTask(std::shared_ptr<const EpisodicEnv> env,
                           double gamma)
    : env_(std::move(env)), gamma_(gamma) {
  if (!env_) throw std::invalid_argument("EpisodicTask: null environment");
}

double EpisodicTask::rollout(const PolicyParams& theta, RngStream&) const {
  return run_trial(*env_, theta, gamma_).ret;
}

double EpisodicTask::evaluate(const PolicyParams& theta) const {
  return run_trial(*env_, theta, gamma_).ret;
}

double ToyTask::rollout(const PolicyParams& theta, RngStream& rng) const {
  return toy_rollout(theta.theta.at(0), rng, cfg_);
}

double ToyTask::evaluate(const PolicyParams& theta) const {
  ToyConfig quiet = cfg_;
  quiet.noise_std = 0.0;
  RngStream unused;
  return toy_rollout(theta.theta.at(0), unused, quiet);
}

std::shared_ptr<const EpisodicEnv> make_env(const EnvConfig& cfg) {
  if (cfg.kind == EnvKind::Reaching) {
    return std::make_shared<ReachingEnv>(cfg);
  }
  return std::make_shared<CartPoleEnv>(cfg);
}

ReuseBuffer::ReuseBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("buffer capacity is zero");
}

void ReuseBuffer::push(BufferSample s) {
  if (samples_.size() == capacity_) samples_.pop_front();
  samples_.push_back(std::move(s));
}

std::vector<BufferSample> ReuseBuffer::all() const {
  return {samples_.begin(), samples_.end()};
}

std::vector<BufferSample> ReuseBuffer::newest(std::size_t count) const {
  count = std::min(count, samples_.size());
  return {samples_.end() - static_cast<std::ptrdiff_t>(count), samples_.end()};
}

Trainer::Trainer(RunConfig cfg, const RolloutTask& task, std::uint64_t seed)
    : cfg_(std::move(cfg)),
      task_(task),
      rng_(seed),
      buffer_(static_cast<std::size_t>(std::max(cfg_.buffer_nprime, 1))) {
  cfg_.validate();
  rho_ = HyperParams::uniform(task_.param_rows() * task_.param_cols(),
                              cfg_.eta_init, cfg_.tau_init);
}

std::vector<BufferSample> Trainer::draw_batch(int iteration) {
  const auto n = static_cast<std::size_t>(cfg_.batch_n);
  std::vector<BufferSample> batch(n);
  const std::size_t rows = task_.param_rows();
  const std::size_t cols = task_.param_cols();

  // each trial owns the substream (seed, iteration, trial)
  auto work = [&](std::size_t i) {
    RngStream trial_rng = rng_.substream(static_cast<std::uint64_t>(iteration), i);
    BufferSample& s = batch[i];
    s.theta = sample_params(rho_, rows, cols, trial_rng);
    s.ret = task_.rollout(s.theta, trial_rng);
    s.sampler_rho = rho_;
  };

  const std::size_t workers =
      std::min(n, static_cast<std::size_t>(cfg_.threads));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
    return batch;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers) work(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return batch;
}

const CurveRow& Trainer::iterate() {
  const int k = static_cast<int>(curve_.rows.size());
  CurveRow row;
  row.iteration = k;
  row.mean_tau = rho_.mean_tau();
  if (k % cfg_.eval_every == 0) {
    last_eval_ = task_.evaluate(
        mean_policy(rho_, task_.param_rows(), task_.param_cols()));
  }
  row.eval_return = last_eval_;

  std::vector<BufferSample> batch = draw_batch(k);
  double mean = 0.0;
  for (const auto& s : batch) mean += s.ret;
  mean /= static_cast<double>(batch.size());
  double var = 0.0;
  for (const auto& s : batch) var += (s.ret - mean) * (s.ret - mean);
  row.mean_return = mean;
  row.std_return = std::sqrt(var / static_cast<double>(batch.size()));
  for (auto& s : batch) buffer_.push(std::move(s));

  const std::vector<BufferSample> samples =
      cfg_.estimator == Estimator::Pgpe
          ? buffer_.newest(static_cast<std::size_t>(cfg_.batch_n))
          : buffer_.all();
  const ImportanceOptions opts{cfg_.log_weight_clamp};
  const double b =
      cfg_.use_baseline ? optimal_baseline(samples, rho_, opts) : 0.0;
  row.baseline_b = b;

  GradientVec grad;
  if (hook_) {
    grad = hook_(samples, rho_, b);
  } else if (cfg_.estimator == Estimator::Pgpe) {
    std::vector<Sample> on_policy;
    on_policy.reserve(samples.size());
    for (const auto& s : samples) on_policy.push_back({s.theta, s.ret - b});
    grad = pgpe_gradient(on_policy, rho_);
  } else {
    grad = iwpgpe_gradient(samples, rho_, b, opts);
  }

  if (grad.size() != rho_.size() || !grad.is_finite()) {
    throw std::runtime_error("non-finite gradient at iteration " +
                             std::to_string(k) + " (baseline " +
                             std::to_string(b) + ")");
  }
  const double norm = grad.norm();
  if (norm > cfg_.max_grad_norm) {
    ++skipped_;
    if (warn_) {
      warn_("iteration " + std::to_string(k) + ": gradient norm " +
            std::to_string(norm) + " exceeds limit, update skipped");
    }
  } else {
    for (std::size_t i = 0; i < rho_.size(); ++i) {
      rho_.eta[i] += cfg_.lr_eta * grad.d_eta[i];
      rho_.tau[i] =
          std::max(rho_.tau[i] + cfg_.lr_tau * grad.d_tau[i], cfg_.tau_min);
    }
  }

  curve_.rows.push_back(row);
  return curve_.rows.back();
}

const LearningCurve& Trainer::run() {
  while (static_cast<int>(curve_.rows.size()) < cfg_.iterations) iterate();
  return curve_;
}

TrainResult train(const RunConfig& run_cfg, const RolloutTask& task,
                  std::uint64_t seed) {
  Trainer trainer(run_cfg, task, seed);
  trainer.run();
  return {trainer.curve(), trainer.rho(), trainer.skipped_updates()};
}

LearningCurve train(const RunConfig& run_cfg, const EnvConfig& env_cfg) {
  run_cfg.validate();
  EpisodicTask task(make_env(env_cfg), run_cfg.gamma);
  return train(run_cfg, task, run_cfg.seeds.front()).curve;
}

std::vector<SummaryRow> summarize(std::span<const LearningCurve> curves) {
  std::vector<SummaryRow> rows;
  if (curves.empty()) return rows;
  std::size_t len = curves.front().rows.size();
  for (const auto& c : curves) len = std::min(len, c.rows.size());
  const auto n = static_cast<double>(curves.size());
  for (std::size_t i = 0; i < len; ++i) {
    SummaryRow r;
    r.iteration = curves.front().rows[i].iteration;
    for (const auto& c : curves) r.mean += c.rows[i].mean_return;
    r.mean /= n;
    double var = 0.0;
    for (const auto& c : curves) {
      const double d = c.rows[i].mean_return - r.mean;
      var += d * d;
    }
    r.std = std::sqrt(var / n);
    rows.push_back(r);
  }
  return rows;
}

SeedSummary multi_seed_summary(const RunConfig& run_cfg,
                               const RolloutTask& task) {
  run_cfg.validate();
  SeedSummary out;
  for (auto seed : run_cfg.seeds) {
    out.per_seed.push_back(train(run_cfg, task, seed).curve);
  }
  out.rows = summarize(out.per_seed);
  return out;
}

SeedSummary multi_seed_summary(const RunConfig& run_cfg,
                               const EnvConfig& env_cfg) {
  run_cfg.validate();
  EpisodicTask task(make_env(env_cfg), run_cfg.gamma);
  return multi_seed_summary(run_cfg, task);
}

}  // namespace iwpgpe
