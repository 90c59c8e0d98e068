#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "iwpgpe/runner.hpp"

using namespace iwpgpe;

namespace {

class ZeroRewardTask final : public RolloutTask {
 public:
  std::size_t param_rows() const override { return 2; }
  std::size_t param_cols() const override { return 3; }
  double rollout(const PolicyParams&, RngStream&) const override { return 0.0; }
  double evaluate(const PolicyParams&) const override { return 0.0; }
};

// counts evaluations so the eval schedule can be observed
class CountingToy final : public RolloutTask {
 public:
  std::size_t param_rows() const override { return 1; }
  std::size_t param_cols() const override { return 1; }
  double rollout(const PolicyParams& theta, RngStream& rng) const override {
    return inner_.rollout(theta, rng);
  }
  double evaluate(const PolicyParams& theta) const override {
    ++evals;
    return inner_.evaluate(theta);
  }
  mutable std::atomic<int> evals{0};

 private:
  ToyTask inner_;
};

RunConfig toy_config(Estimator est, int n, int nprime, double lr) {
  RunConfig c;
  c.estimator = est;
  c.batch_n = n;
  c.buffer_nprime = nprime;
  c.lr_eta = lr;
  c.lr_tau = lr;
  return c;
}

double toy_j(const HyperParams& rho) {
  return toy_expected_return(rho.eta[0], rho.tau[0]);
}

// iterations until the expected return has closed 95% of the initial gap
// to the optimum J = 0; limit + 1 when never reached
int iterations_to_95(const RunConfig& cfg, std::uint64_t seed, int limit) {
  ToyTask task;
  Trainer trainer(cfg, task, seed);
  const double j0 = toy_j(trainer.rho());
  for (int k = 1; k <= limit; ++k) {
    trainer.iterate();
    if (toy_j(trainer.rho()) >= 0.05 * j0) return k;
  }
  return limit + 1;
}

double median(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

bool same_curve(const LearningCurve& a, const LearningCurve& b) {
  return a.rows == b.rows;
}

}  // namespace

TEST_CASE("run_trial: zero controller keeps the arm at rest") {
  const EnvConfig cfg = reaching_config();
  const ReachingEnv env(cfg);
  const PolicyParams theta(kNumJoints, feature_dim(EnvKind::Reaching));
  const double gamma = 0.999;
  const auto trial = run_trial(env, theta, gamma);

  REQUIRE(trial.trajectory.steps.size() == static_cast<std::size_t>(cfg.horizon));
  const Vec3 rest{0.0, 0.25, -0.65};
  const double d2 = squared_distance(rest, cfg.target);
  const double q = std::exp(-cfg.reward_alpha * d2);
  double want = 0.0;
  for (int t = cfg.horizon - 1; t >= 0; --t) want = q + gamma * want;
  CHECK(trial.ret == doctest::Approx(want).epsilon(1e-12));
  for (const auto& s : trial.trajectory.steps) {
    CHECK(s.reward == doctest::Approx(q).epsilon(1e-12));
    for (double p : s.state.joints) CHECK(p == 0.0);
  }
  for (double p : trial.final_state.joints) CHECK(p == 0.0);
}

TEST_CASE("run_trial: deterministic repeat and fixed length") {
  for (const EnvConfig& cfg : {reaching_config(), cartpole_config()}) {
    const auto env = make_env(cfg);
    RngStream rng(31);
    const auto rho = HyperParams::uniform(kNumJoints * feature_dim(cfg.kind), 0.0, 0.3);
    const auto theta = sample_params(rho, kNumJoints, feature_dim(cfg.kind), rng);
    const auto a = run_trial(*env, theta, 0.999);
    const auto b = run_trial(*env, theta, 0.999);
    CHECK(a.trajectory.steps.size() == static_cast<std::size_t>(cfg.horizon));
    CHECK(a.trajectory.horizon == static_cast<std::size_t>(cfg.horizon));
    CHECK(a.ret == b.ret);
    for (std::size_t t = 0; t < a.trajectory.steps.size(); ++t) {
      const auto& sa = a.trajectory.steps[t];
      const auto& sb = b.trajectory.steps[t];
      CHECK(sa.reward == sb.reward);
      CHECK(sa.state.joints == sb.state.joints);
      CHECK(sa.state.joint_vels == sb.state.joint_vels);
      CHECK(sa.state.extras == sb.state.extras);
      CHECK(sa.action.desired_joint_vels == sb.action.desired_joint_vels);
    }
  }
}

TEST_CASE("train: zero-reward task leaves rho unchanged") {
  ZeroRewardTask task;
  RunConfig cfg;
  cfg.iterations = 15;
  for (Estimator est : {Estimator::Pgpe, Estimator::IwPgpe}) {
    cfg.estimator = est;
    Trainer trainer(cfg, task, 4);
    const HyperParams before = trainer.rho();
    trainer.run();
    CHECK(trainer.rho().eta == before.eta);
    CHECK(trainer.rho().tau == before.tau);
    REQUIRE(trainer.curve().rows.size() == 15);
    for (const auto& row : trainer.curve().rows) {
      CHECK(row.mean_return == 0.0);
      CHECK(row.std_return == 0.0);
      CHECK(row.eval_return == 0.0);
      CHECK(row.baseline_b == 0.0);
      CHECK(row.mean_tau == doctest::Approx(cfg.tau_init));
    }
  }
}

TEST_CASE("train: toy PGPE with N = N' = 100 converges to the optimum" *
          doctest::may_fail()) {
  const RunConfig cfg = [] {
    RunConfig c = toy_config(Estimator::Pgpe, 100, 100, 0.05);
    c.iterations = 200;
    return c;
  }();
  ToyTask task;
  int converged = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = train(cfg, task, seed);
    if (std::abs(r.final_rho.eta[0] - 1.0) < 0.05) ++converged;
  }
  MESSAGE("converged seeds: " << converged << " / 20");
  CHECK(converged >= 18);
}

TEST_CASE("train: toy PGPE converges when exploration is floored") {
  RunConfig cfg = toy_config(Estimator::Pgpe, 100, 100, 0.05);
  cfg.iterations = 200;
  cfg.tau_min = 0.05;
  ToyTask task;
  int converged = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = train(cfg, task, seed);
    if (std::abs(r.final_rho.eta[0] - 1.0) < 0.05) ++converged;
  }
  CHECK(converged >= 18);
}

TEST_CASE("train: sample reuse reaches 95% of the optimum sooner on the toy") {
  const RunConfig iw = toy_config(Estimator::IwPgpe, 5, 10, 0.1);
  const RunConfig pg = toy_config(Estimator::Pgpe, 5, 5, 0.1);
  std::vector<int> t_iw, t_pg;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    t_iw.push_back(iterations_to_95(iw, seed, 2000));
    t_pg.push_back(iterations_to_95(pg, seed, 2000));
  }
  MESSAGE("median iterations: iw " << median(t_iw) << ", pgpe " << median(t_pg));
  CHECK(median(t_iw) < median(t_pg));
}

TEST_CASE("buffer: FIFO fill and eviction") {
  ToyTask task;
  for (Estimator est : {Estimator::Pgpe, Estimator::IwPgpe}) {
    RunConfig cfg = toy_config(est, 3, 7, 0.05);
    Trainer trainer(cfg, task, 17);
    std::vector<HyperParams> history;
    for (int k = 1; k <= 6; ++k) {
      history.push_back(trainer.rho());
      trainer.iterate();
      const std::size_t want = std::min<std::size_t>(3 * k, 7);
      REQUIRE(trainer.buffer().size() == want);
      // oldest first: walk back from the newest batch
      const auto all = trainer.buffer().all();
      for (std::size_t i = 0; i < all.size(); ++i) {
        const std::size_t age = (all.size() - 1 - i) / 3;
        const HyperParams& drawn_under = history[history.size() - 1 - age];
        CHECK(all[i].sampler_rho.eta == drawn_under.eta);
        CHECK(all[i].sampler_rho.tau == drawn_under.tau);
      }
    }
  }

  ReuseBuffer buf(3);
  for (int i = 0; i < 5; ++i) {
    BufferSample s;
    s.ret = i;
    buf.push(s);
  }
  const auto all = buf.all();
  REQUIRE(all.size() == 3);
  CHECK(all[0].ret == 2.0);
  CHECK(all[2].ret == 4.0);
  const auto two = buf.newest(2);
  CHECK(two[0].ret == 3.0);
  CHECK(two[1].ret == 4.0);
  CHECK(buf.newest(10).size() == 3);
  CHECK_THROWS_AS(ReuseBuffer(0), std::invalid_argument);
}

TEST_CASE("buffer: PGPE sees only the current batch, IW-PGPE the whole buffer") {
  ToyTask task;
  for (Estimator est : {Estimator::Pgpe, Estimator::IwPgpe}) {
    RunConfig cfg = toy_config(est, 5, 10, 0.1);
    Trainer trainer(cfg, task, 2);
    std::vector<std::size_t> seen;
    bool all_current = true;
    trainer.set_gradient_hook([&](std::span<const BufferSample> s, const HyperParams& rho,
                                  double b) {
      seen.push_back(s.size());
      for (const auto& x : s) all_current = all_current && x.sampler_rho.eta == rho.eta;
      std::vector<BufferSample> copy(s.begin(), s.end());
      return iwpgpe_gradient(copy, rho, b);
    });
    for (int k = 0; k < 4; ++k) trainer.iterate();
    if (est == Estimator::Pgpe) {
      CHECK(seen == std::vector<std::size_t>{5, 5, 5, 5});
      CHECK(all_current);
    } else {
      CHECK(seen == std::vector<std::size_t>{5, 10, 10, 10});
      CHECK_FALSE(all_current);
    }
  }
}

TEST_CASE("update: tau never drops below tau_min") {
  ToyTask task;
  RunConfig cfg = toy_config(Estimator::IwPgpe, 5, 10, 0.5);
  cfg.tau_min = 0.02;
  cfg.tau_init = 0.3;
  Trainer trainer(cfg, task, 8);
  bool clamped = false;
  for (int k = 0; k < 60; ++k) {
    trainer.iterate();
    CHECK(trainer.rho().tau[0] >= cfg.tau_min);
    clamped = clamped || trainer.rho().tau[0] == cfg.tau_min;
  }
  CHECK(clamped);
}

TEST_CASE("update: stubbed gradient moves rho by exactly lr times g") {
  ToyTask task;
  RunConfig cfg = toy_config(Estimator::IwPgpe, 2, 4, 0.1);
  cfg.lr_tau = 0.25;
  Trainer trainer(cfg, task, 6);
  GradientVec g(1);
  g.d_eta = {0.37};
  g.d_tau = {-0.11};
  trainer.set_gradient_hook(
      [&](std::span<const BufferSample>, const HyperParams&, double) { return g; });

  const HyperParams before = trainer.rho();
  trainer.iterate();
  CHECK(trainer.rho().eta[0] == before.eta[0] + 0.1 * 0.37);
  CHECK(trainer.rho().tau[0] == before.tau[0] + 0.25 * -0.11);

  g.d_tau = {-100.0};
  trainer.iterate();
  CHECK(trainer.rho().tau[0] == cfg.tau_min);
}

TEST_CASE("update: oversized gradient is skipped and reported") {
  ToyTask task;
  RunConfig cfg = toy_config(Estimator::IwPgpe, 2, 4, 0.1);
  cfg.max_grad_norm = 5.0;
  Trainer trainer(cfg, task, 6);
  GradientVec g(1);
  g.d_eta = {3.0};
  g.d_tau = {4.5};
  trainer.set_gradient_hook(
      [&](std::span<const BufferSample>, const HyperParams&, double) { return g; });
  std::vector<std::string> warnings;
  trainer.set_warning_sink([&](std::string_view w) { warnings.emplace_back(w); });
  const HyperParams before = trainer.rho();
  trainer.iterate();
  CHECK(trainer.rho().eta == before.eta);
  CHECK(trainer.rho().tau == before.tau);
  CHECK(trainer.skipped_updates() == 1);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("update skipped") != std::string::npos);

  g.d_tau = {3.9};
  trainer.iterate();
  CHECK(trainer.skipped_updates() == 1);
  CHECK(trainer.rho().eta[0] == before.eta[0] + 0.1 * 3.0);
}

TEST_CASE("update: non-finite gradient aborts with a diagnostic") {
  ToyTask task;
  Trainer trainer(toy_config(Estimator::IwPgpe, 2, 4, 0.1), task, 6);
  trainer.set_gradient_hook([](std::span<const BufferSample>, const HyperParams&, double) {
    GradientVec g(1);
    g.d_eta = {NAN};
    return g;
  });
  try {
    trainer.iterate();
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("non-finite gradient at iteration 0") !=
          std::string::npos);
  }
}

TEST_CASE("train: curve rows and evaluation schedule") {
  CountingToy task;
  RunConfig cfg = toy_config(Estimator::IwPgpe, 5, 10, 0.1);
  cfg.iterations = 10;
  cfg.eval_every = 3;
  Trainer trainer(cfg, task, 12);
  trainer.run();
  CHECK(task.evals == 4);
  const auto& rows = trainer.curve().rows;
  REQUIRE(rows.size() == 10);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].iteration == static_cast<int>(i));
    CHECK(std::isfinite(rows[i].mean_return));
    CHECK(rows[i].std_return >= 0.0);
    if (i % 3 != 0) CHECK(rows[i].eval_return == rows[i - 1].eval_return);
  }
  CHECK(rows[0].eval_return == doctest::Approx(-1.0));
  CHECK(rows[0].mean_tau == doctest::Approx(0.1));
}

TEST_CASE("train: identical curves for any number of rollout threads") {
  SUBCASE("toy") {
    ToyTask task;
    RunConfig cfg = toy_config(Estimator::IwPgpe, 7, 14, 0.1);
    cfg.iterations = 30;
    const auto one = train(cfg, task, 99).curve;
    cfg.threads = 3;
    const auto three = train(cfg, task, 99).curve;
    cfg.threads = 16;
    const auto many = train(cfg, task, 99).curve;
    CHECK(same_curve(one, three));
    CHECK(same_curve(one, many));
  }
  SUBCASE("cart-pole") {
    RunConfig cfg;
    cfg.iterations = 4;
    cfg.seeds = {5};
    const auto one = train(cfg, cartpole_config());
    cfg.threads = 4;
    CHECK(same_curve(one, train(cfg, cartpole_config())));
  }
}

TEST_CASE("train: env overload uses the first seed") {
  RunConfig cfg;
  cfg.iterations = 3;
  cfg.seeds = {7, 8};
  const auto a = train(cfg, reaching_config());
  EpisodicTask task(make_env(reaching_config()), cfg.gamma);
  CHECK(same_curve(a, train(cfg, task, 7).curve));
}

TEST_CASE("multi_seed_summary: single seed") {
  ToyTask task;
  RunConfig cfg = toy_config(Estimator::IwPgpe, 5, 10, 0.1);
  cfg.iterations = 20;
  cfg.seeds = {3};
  const auto s = multi_seed_summary(cfg, task);
  REQUIRE(s.per_seed.size() == 1);
  REQUIRE(s.rows.size() == 20);
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    CHECK(s.rows[i].mean == s.per_seed[0].rows[i].mean_return);
    CHECK(s.rows[i].std == 0.0);
    CHECK(s.rows[i].iteration == static_cast<int>(i));
  }
}

TEST_CASE("multi_seed_summary: repeated seed has zero spread") {
  ToyTask task;
  RunConfig cfg = toy_config(Estimator::IwPgpe, 5, 10, 0.1);
  cfg.iterations = 20;
  cfg.seeds = {11, 11};
  for (const auto& r : multi_seed_summary(cfg, task).rows) CHECK(r.std == 0.0);
}

TEST_CASE("multi_seed_summary: mean inside the per-seed envelope") {
  ToyTask task;
  RunConfig cfg = toy_config(Estimator::IwPgpe, 5, 10, 0.1);
  cfg.iterations = 40;
  cfg.seeds = {1, 2, 3, 4, 5};
  const auto s = multi_seed_summary(cfg, task);
  REQUIRE(s.per_seed.size() == 5);
  for (std::size_t i = 0; i < s.rows.size(); ++i) {
    double lo = s.per_seed[0].rows[i].mean_return, hi = lo;
    for (const auto& c : s.per_seed) {
      lo = std::min(lo, c.rows[i].mean_return);
      hi = std::max(hi, c.rows[i].mean_return);
    }
    CHECK(s.rows[i].mean >= lo);
    CHECK(s.rows[i].mean <= hi);
    CHECK(s.rows[i].std <= (hi - lo) / 2 + 1e-12);
  }
  CHECK(summarize(std::span<const LearningCurve>{}).empty());
}

TEST_CASE("RunConfig validation messages") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  auto bad = [](auto edit) {
    RunConfig r;
    edit(r);
    return r;
  };
  CHECK_THROWS_WITH(bad([](RunConfig& r) { r.batch_n = 0; }).validate(), "batch must be >= 1");
  CHECK_THROWS_WITH(bad([](RunConfig& r) { r.buffer_nprime = 4; }).validate(),
                    "buffer must be >= batch");
  CHECK_THROWS_WITH(bad([](RunConfig& r) { r.gamma = 1.0; }).validate(), "gamma must be < 1");
  CHECK_THROWS_WITH(bad([](RunConfig& r) { r.gamma = -0.5; }).validate(),
                    "gamma must be >= 0");
  CHECK_THROWS_WITH(bad([](RunConfig& r) { r.lr_eta = 0.0; }).validate(), "lr must be > 0");
  CHECK_THROWS_WITH(bad([](RunConfig& r) { r.seeds.clear(); }).validate(),
                    "seed: at least one seed is required");
  CHECK_THROWS_WITH(bad([](RunConfig& r) { r.tau_init = 1e-4; }).validate(),
                    "tau_init must be >= tau_min");
  CHECK_THROWS_WITH(bad([](RunConfig& r) { r.threads = 0; }).validate(),
                    "threads must be >= 1");
  CHECK_THROWS_WITH(bad([](RunConfig& r) { r.log_weight_clamp = 0.0; }).validate(),
                    "log_weight_clamp must be > 0");
  ToyTask task;
  CHECK_THROWS_AS(Trainer(bad([](RunConfig& r) { r.iterations = 0; }), task, 1),
                  std::invalid_argument);
}
