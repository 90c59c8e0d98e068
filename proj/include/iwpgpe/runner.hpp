#ifndef IWPGPE_RUNNER_HPP_
#define IWPGPE_RUNNER_HPP_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "iwpgpe/envs.hpp"
#include "iwpgpe/estimators.hpp"
#include "iwpgpe/policy.hpp"

namespace iwpgpe {

enum class Estimator { Pgpe, IwPgpe };

struct RunConfig {
  int batch_n = 5;
  int buffer_nprime = 10;
  double gamma = 0.999;
  double lr_eta = 0.1;
  double lr_tau = 0.1;
  int iterations = 120;
  std::vector<std::uint64_t> seeds{1};
  Estimator estimator = Estimator::IwPgpe;
  bool use_baseline = true;
  double eta_init = 0.0;
  double tau_init = 0.1;
  double tau_min = 1e-3;
  int eval_every = 1;
  // rollout worker threads per iteration; results do not depend on it
  int threads = 1;
  std::optional<double> log_weight_clamp;
  // updates whose gradient norm exceeds this are skipped
  double max_grad_norm = 1e6;

  // throws std::invalid_argument naming the offending field
  void validate() const;
};

struct CurveRow {
  int iteration = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  double eval_return = 0.0;
  double baseline_b = 0.0;
  double mean_tau = 0.0;

  bool operator==(const CurveRow&) const = default;
};

struct LearningCurve {
  std::vector<CurveRow> rows;
};

struct TrialResult {
  Trajectory trajectory;
  // state reached after the last step
  State final_state;
  double ret = 0.0;
};

// Roll out the deterministic controller theta for one full horizon from the
// environment's initial state.
TrialResult run_trial(const EpisodicEnv& env, const PolicyParams& theta,
                      double gamma);

// What the trainer optimizes: a parameter shape, a stochastic rollout, and a
// deterministic evaluation of a fixed parameter vector.
class RolloutTask {
 public:
  virtual ~RolloutTask() = default;

  virtual std::size_t param_rows() const = 0;
  virtual std::size_t param_cols() const = 0;
  // must be safe to call concurrently
  virtual double rollout(const PolicyParams& theta, RngStream& rng) const = 0;
  virtual double evaluate(const PolicyParams& theta) const = 0;
};

// linear controller on an episodic environment
class EpisodicTask final : public RolloutTask {
 public:
  EpisodicTask(std::shared_ptr<const EpisodicEnv> env, double gamma);

  std::size_t param_rows() const override { return kNumJoints; }
  std::size_t param_cols() const override { return feature_dim(env_->kind()); }
  double rollout(const PolicyParams& theta, RngStream& rng) const override;
  double evaluate(const PolicyParams& theta) const override;

  const EpisodicEnv& env() const { return *env_; }

 private:
  std::shared_ptr<const EpisodicEnv> env_;
  double gamma_;
};

// scalar toy; evaluation is the noise-free return
class ToyTask final : public RolloutTask {
 public:
  explicit ToyTask(ToyConfig cfg = {}) : cfg_(cfg) {}

  std::size_t param_rows() const override { return 1; }
  std::size_t param_cols() const override { return 1; }
  double rollout(const PolicyParams& theta, RngStream& rng) const override;
  double evaluate(const PolicyParams& theta) const override;

 private:
  ToyConfig cfg_;
};

std::shared_ptr<const EpisodicEnv> make_env(const EnvConfig& cfg);

// FIFO store of the most recent samples
class ReuseBuffer {
 public:
  explicit ReuseBuffer(std::size_t capacity);

  void push(BufferSample s);
  std::size_t size() const { return samples_.size(); }
  std::size_t capacity() const { return capacity_; }
  // oldest first
  std::vector<BufferSample> all() const;
  // the `count` most recent samples, oldest first
  std::vector<BufferSample> newest(std::size_t count) const;

 private:
  std::size_t capacity_;
  std::deque<BufferSample> samples_;
};

// (samples, rho, baseline) -> gradient; replaces the configured estimator
using GradientHook = std::function<GradientVec(
    std::span<const BufferSample>, const HyperParams&, double)>;

class Trainer {
 public:
  Trainer(RunConfig cfg, const RolloutTask& task, std::uint64_t seed);

  // sample, roll out, estimate, update; returns the recorded row
  const CurveRow& iterate();
  // run the remaining configured iterations
  const LearningCurve& run();

  const HyperParams& rho() const { return rho_; }
  const LearningCurve& curve() const { return curve_; }
  const ReuseBuffer& buffer() const { return buffer_; }
  int skipped_updates() const { return skipped_; }

  void set_gradient_hook(GradientHook hook) { hook_ = std::move(hook); }
  void set_warning_sink(std::function<void(std::string_view)> sink) {
    warn_ = std::move(sink);
  }

 private:
  std::vector<BufferSample> draw_batch(int iteration);

  RunConfig cfg_;
  const RolloutTask& task_;
  RngStream rng_;
  HyperParams rho_;
  ReuseBuffer buffer_;
  LearningCurve curve_;
  double last_eval_ = 0.0;
  int skipped_ = 0;
  GradientHook hook_;
  std::function<void(std::string_view)> warn_;
};

struct TrainResult {
  LearningCurve curve;
  HyperParams final_rho;
  int skipped_updates = 0;
};

TrainResult train(const RunConfig& run_cfg, const RolloutTask& task,
                  std::uint64_t seed);

// first configured seed on the environment described by env_cfg
LearningCurve train(const RunConfig& run_cfg, const EnvConfig& env_cfg);

struct SummaryRow {
  int iteration = 0;
  double mean = 0.0;
  double std = 0.0;
};

struct SeedSummary {
  std::vector<LearningCurve> per_seed;
  std::vector<SummaryRow> rows;
};

// mean and population std of mean_return across seeds, per iteration
std::vector<SummaryRow> summarize(std::span<const LearningCurve> curves);

SeedSummary multi_seed_summary(const RunConfig& run_cfg,
                               const RolloutTask& task);
SeedSummary multi_seed_summary(const RunConfig& run_cfg,
                               const EnvConfig& env_cfg);

}  // namespace iwpgpe

#endif  // IWPGPE_RUNNER_HPP_
