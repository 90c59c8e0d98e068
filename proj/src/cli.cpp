#include "iwpgpe/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "CLI11.hpp"
#include "iwpgpe/envs.hpp"
#include "iwpgpe/io.hpp"
#include "iwpgpe/oracle.hpp"
#include "iwpgpe/runner.hpp"

namespace iwpgpe {
namespace {

namespace fs = std::filesystem;

constexpr const char* kUsage =
    "usage: iwpgpe <command> [options]\n"
    "\n"
    "commands:\n"
    "  train    run an experiment and write learning curves\n"
    "  eval     roll out the mean policy of a saved final_policy file\n"
    "  oracle   check the gradient estimators on the analytic toy\n"
    "\n"
    "Run `iwpgpe <command> --help` for the options of a command.\n";

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string quoted(const std::string& s) { return '"' + s + '"'; }

// Everything a train or eval invocation can set. Physical constants start
// at the reaching defaults; task-dependent defaults are applied in resolve().
struct Settings {
  std::string env = "reaching";
  std::string estimator = "iwpgpe";
  int iters = 0;
  RunConfig run;
  double lr_tau = 0.0;
  double log_weight_clamp = 0.0;
  bool no_baseline = false;
  std::string out = "runs/latest";
  bool plot = false;

  EnvConfig phys = reaching_config();
  std::vector<double> target;
  std::vector<double> shoulder{0.0, 0.25, 0.0};
  ToyConfig toy;

  std::string policy;

  CLI::Option* iters_opt = nullptr;
  CLI::Option* alpha_opt = nullptr;
  CLI::Option* target_opt = nullptr;
  CLI::Option* lr_tau_opt = nullptr;
  CLI::Option* clamp_opt = nullptr;
};

void add_env_options(CLI::App& app, Settings& s) {
  app.add_option("--env", s.env, "task: reaching, cartpole or toy")
      ->check(CLI::IsMember({"reaching", "cartpole", "toy"}))
      ->capture_default_str();
  app.add_option("--dt", s.phys.dt, "control and integration step (s)")
      ->capture_default_str();
  app.add_option("--horizon", s.phys.horizon, "steps per trial")
      ->capture_default_str();
  app.add_option("--kp", s.phys.gains.kp, "PD position gain")
      ->capture_default_str();
  app.add_option("--kd", s.phys.gains.kd, "PD velocity gain")
      ->capture_default_str();
  s.alpha_opt = app.add_option("--alpha", s.phys.reward_alpha,
                               "reward width (default 10 reaching, 1 cartpole)");
  app.add_option("--beta", s.phys.cost_beta, "tracking cost weight")
      ->capture_default_str();
  app.add_option("--joint-limit", s.phys.joint_limit, "joint angle limit (rad)")
      ->capture_default_str();
  app.add_option("--max-joint-vel", s.phys.max_joint_velocity,
                 "saturation of commanded joint velocity (rad/s)")
      ->capture_default_str();
  s.target_opt = app.add_option("--target", s.target, "reaching target x y z (m)")
                     ->expected(3);
  app.add_option("--shoulder-offset", s.shoulder, "shoulder position x y z (m)")
      ->expected(3)
      ->capture_default_str();
  app.add_option("--upper-arm", s.phys.arm.upper_arm, "upper arm length (m)")
      ->capture_default_str();
  app.add_option("--forearm", s.phys.arm.forearm, "forearm length (m)")
      ->capture_default_str();
  auto& cp = s.phys.cartpole;
  app.add_option("--cart-mass", cp.cart_mass)->capture_default_str();
  app.add_option("--pole-mass", cp.pole_mass)->capture_default_str();
  app.add_option("--pole-half-length", cp.pole_half_length)
      ->capture_default_str();
  app.add_option("--gravity", cp.gravity)->capture_default_str();
  app.add_option("--force-gain", cp.force_gain, "k in F = -k (z_dot - a w)")
      ->capture_default_str();
  app.add_option("--wand-gain", cp.wand_gain, "a in F = -k (z_dot - a w)")
      ->capture_default_str();
  app.add_option("--toy-optimum", s.toy.optimum)->capture_default_str();
  app.add_option("--toy-noise", s.toy.noise_std)->capture_default_str();
  app.add_option("--gamma", s.run.gamma, "discount factor")
      ->capture_default_str();
}

void add_run_options(CLI::App& app, Settings& s) {
  app.add_option("--estimator", s.estimator, "pgpe or iwpgpe")
      ->check(CLI::IsMember({"pgpe", "iwpgpe"}))
      ->capture_default_str();
  s.iters_opt = app.add_option(
      "--iters", s.iters, "updates (default 120 reaching, 40 cartpole, 200 toy)");
  app.add_option("--batch", s.run.batch_n, "fresh trials per update (N)")
      ->capture_default_str();
  app.add_option("--buffer", s.run.buffer_nprime, "reuse buffer size (N')")
      ->capture_default_str();
  app.add_option("--lr", s.run.lr_eta, "learning rate")->capture_default_str();
  s.lr_tau_opt = app.add_option("--lr-tau", s.lr_tau,
                                "learning rate of tau (default: --lr)");
  app.add_option("--seed", s.run.seeds, "random seed; repeat for several runs")
      ->capture_default_str();
  app.add_option("--tau-init", s.run.tau_init, "initial exploration std")
      ->capture_default_str();
  app.add_option("--tau-min", s.run.tau_min, "lower clamp on tau")
      ->capture_default_str();
  app.add_flag("--no-baseline", s.no_baseline, "disable the optimal baseline");
  app.add_option("--eval-every", s.run.eval_every,
                 "iterations between mean-policy evaluations")
      ->capture_default_str();
  app.add_option("--threads", s.run.threads, "rollout worker threads")
      ->capture_default_str();
  s.clamp_opt = app.add_option("--log-weight-clamp", s.log_weight_clamp,
                               "clamp |log w| (off by default)");
  app.add_option("--max-grad-norm", s.run.max_grad_norm,
                 "skip updates with a larger gradient norm")
      ->capture_default_str();
  app.add_option("--out", s.out, "output directory")->capture_default_str();
  app.add_flag("--plot", s.plot, "write a gnuplot script next to each curve");
}

bool is_toy(const Settings& s) { return s.env == "toy"; }

EnvConfig resolve_env(const Settings& s) {
  EnvConfig ec = s.phys;
  ec.kind = s.env == "cartpole" ? EnvKind::CartPole : EnvKind::Reaching;
  if (s.alpha_opt->count() == 0) {
    ec.reward_alpha = ec.kind == EnvKind::CartPole
                          ? cartpole_config().reward_alpha
                          : reaching_config().reward_alpha;
  }
  ec.arm.shoulder_offset = {s.shoulder[0], s.shoulder[1], s.shoulder[2]};
  ec.target = s.target_opt->count() > 0
                  ? Vec3{s.target[0], s.target[1], s.target[2]}
                  : default_reaching_target(ec.arm);
  return ec;
}

void validate_toy(const ToyConfig& toy) {
  if (!std::isfinite(toy.optimum)) {
    throw std::invalid_argument("toy-optimum must be finite");
  }
  if (!(toy.noise_std >= 0.0)) {
    throw std::invalid_argument("toy-noise must be >= 0");
  }
}

RunConfig resolve_run(const Settings& s) {
  RunConfig rc = s.run;
  rc.estimator = s.estimator == "pgpe" ? Estimator::Pgpe : Estimator::IwPgpe;
  rc.use_baseline = !s.no_baseline;
  if (s.iters_opt->count() > 0) {
    rc.iterations = s.iters;
  } else {
    rc.iterations = s.env == "toy" ? 200 : s.env == "cartpole" ? 40 : 120;
  }
  rc.lr_tau = s.lr_tau_opt->count() > 0 ? s.lr_tau : rc.lr_eta;
  if (s.clamp_opt->count() > 0) rc.log_weight_clamp = s.log_weight_clamp;
  return rc;
}

std::unique_ptr<RolloutTask> make_task(const Settings& s, const EnvConfig& ec,
                                       double gamma) {
  if (is_toy(s)) return std::make_unique<ToyTask>(s.toy);
  return std::make_unique<EpisodicTask>(make_env(ec), gamma);
}

std::vector<std::pair<std::string, std::string>> config_echo(
    const Settings& s, const RunConfig& rc, const EnvConfig& ec) {
  std::string seeds;
  for (auto seed : rc.seeds) {
    if (!seeds.empty()) seeds += ' ';
    seeds += std::to_string(seed);
  }
  std::vector<std::pair<std::string, std::string>> c{
      {"env", quoted(s.env)},
      {"estimator", quoted(s.estimator)},
      {"iters", std::to_string(rc.iterations)},
      {"batch", std::to_string(rc.batch_n)},
      {"buffer", std::to_string(rc.buffer_nprime)},
      {"gamma", num(rc.gamma)},
      {"lr", num(rc.lr_eta)},
      {"lr-tau", num(rc.lr_tau)},
      {"seed", seeds},
      {"tau-init", num(rc.tau_init)},
      {"tau-min", num(rc.tau_min)},
      {"no-baseline", rc.use_baseline ? "false" : "true"},
      {"eval-every", std::to_string(rc.eval_every)},
      {"threads", std::to_string(rc.threads)},
  };
  if (rc.log_weight_clamp) {
    c.emplace_back("log-weight-clamp", num(*rc.log_weight_clamp));
  }
  c.emplace_back("max-grad-norm", num(rc.max_grad_norm));
  c.emplace_back("out", quoted(s.out));
  c.emplace_back("plot", s.plot ? "true" : "false");
  c.emplace_back("dt", num(ec.dt));
  c.emplace_back("horizon", std::to_string(ec.horizon));
  c.emplace_back("kp", num(ec.gains.kp));
  c.emplace_back("kd", num(ec.gains.kd));
  c.emplace_back("alpha", num(ec.reward_alpha));
  c.emplace_back("beta", num(ec.cost_beta));
  c.emplace_back("joint-limit", num(ec.joint_limit));
  c.emplace_back("max-joint-vel", num(ec.max_joint_velocity));
  c.emplace_back("target", num(ec.target[0]) + ' ' + num(ec.target[1]) + ' ' +
                               num(ec.target[2]));
  c.emplace_back("shoulder-offset", num(ec.arm.shoulder_offset[0]) + ' ' +
                                        num(ec.arm.shoulder_offset[1]) + ' ' +
                                        num(ec.arm.shoulder_offset[2]));
  c.emplace_back("upper-arm", num(ec.arm.upper_arm));
  c.emplace_back("forearm", num(ec.arm.forearm));
  c.emplace_back("cart-mass", num(ec.cartpole.cart_mass));
  c.emplace_back("pole-mass", num(ec.cartpole.pole_mass));
  c.emplace_back("pole-half-length", num(ec.cartpole.pole_half_length));
  c.emplace_back("gravity", num(ec.cartpole.gravity));
  c.emplace_back("force-gain", num(ec.cartpole.force_gain));
  c.emplace_back("wand-gain", num(ec.cartpole.wand_gain));
  c.emplace_back("toy-optimum", num(s.toy.optimum));
  c.emplace_back("toy-noise", num(s.toy.noise_std));
  return c;
}

// Parses `args` into `app`. Returns an exit code when parsing ends the
// command (help or a usage error), otherwise -1.
int parse(CLI::App& app, std::vector<std::string> args, std::ostream& out,
          std::ostream& err) {
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return -1;
}

int cmd_train(std::vector<std::string> args, std::ostream& out,
              std::ostream& err) {
  CLI::App app("Train a policy with PGPE or IW-PGPE", "iwpgpe train");
  app.set_config("--config", "", "key = value file; flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  Settings s;
  add_env_options(app, s);
  add_run_options(app, s);
  if (int code = parse(app, std::move(args), out, err); code >= 0) {
    return code;
  }

  RunConfig rc;
  EnvConfig ec;
  fs::path root(s.out);
  try {
    rc = resolve_run(s);
    ec = resolve_env(s);
    rc.validate();
    if (is_toy(s)) {
      validate_toy(s.toy);
    } else {
      ec.validate();
    }
    if (s.out.empty()) throw std::invalid_argument("out must not be empty");
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  RunManifest manifest;
  manifest.config = config_echo(s, rc, ec);
  manifest.code_version = kCodeVersion;
  manifest.started = utc_timestamp();
  try {
    const bool multi = rc.seeds.size() > 1;
    const auto task = make_task(s, ec, rc.gamma);
    std::vector<LearningCurve> curves;
    for (auto seed : rc.seeds) {
      const fs::path dir = multi ? root / ("seed-" + std::to_string(seed)) : root;
      fs::create_directories(dir);
      Trainer trainer(rc, *task, seed);
      trainer.set_warning_sink([&err, seed](std::string_view msg) {
        err << "warning: seed " << seed << ": " << msg << '\n';
      });
      trainer.run();
      write_curve(trainer.curve(), dir / "curve.csv");
      write_final_policy(trainer.rho(), dir / "final_policy");
      manifest.outputs.push_back((dir / "curve.csv").string());
      manifest.outputs.push_back((dir / "final_policy").string());
      if (s.plot) {
        write_text(gnuplot_script("curve.csv", s.env + ", seed " +
                                                   std::to_string(seed)),
                   dir / "plot.gp");
        manifest.outputs.push_back((dir / "plot.gp").string());
      }
      const auto& last = trainer.curve().rows.back();
      out << "seed " << seed << ": " << trainer.curve().rows.size()
          << " iterations, final mean return " << last.mean_return
          << ", eval return " << last.eval_return << ", skipped updates "
          << trainer.skipped_updates() << '\n';
      curves.push_back(trainer.curve());
    }
    if (multi) {
      write_summary(summarize(curves), root / "summary.csv");
      manifest.outputs.push_back((root / "summary.csv").string());
    }
    manifest.finished = utc_timestamp();
    write_manifest(manifest, root / "manifest.ini");
    out << "wrote " << root.string() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_eval(std::vector<std::string> args, std::ostream& out,
             std::ostream& err) {
  CLI::App app("Roll out the mean policy of a final_policy file",
               "iwpgpe eval");
  app.set_config("--config", "",
                 "key = value file, e.g. a run's manifest.ini");
  app.allow_config_extras(CLI::config_extras_mode::ignore);
  Settings s;
  add_env_options(app, s);
  app.add_option("--policy", s.policy, "final_policy file")->required();
  if (int code = parse(app, std::move(args), out, err); code >= 0) {
    return code;
  }

  EnvConfig ec;
  try {
    ec = resolve_env(s);
    if (!(s.run.gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
    if (!(s.run.gamma < 1.0)) throw std::invalid_argument("gamma must be < 1");
    if (is_toy(s)) {
      validate_toy(s.toy);
    } else {
      ec.validate();
    }
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    const HyperParams rho = read_final_policy(s.policy);
    const auto task = make_task(s, ec, s.run.gamma);
    const std::size_t rows = task->param_rows();
    const std::size_t cols = task->param_cols();
    if (rho.size() != rows * cols) {
      throw std::runtime_error("policy has " + std::to_string(rho.size()) +
                               " parameters, env " + s.env + " needs " +
                               std::to_string(rows * cols));
    }
    const PolicyParams theta = mean_policy(rho, rows, cols);
    char buf[64];
    if (is_toy(s)) {
      std::snprintf(buf, sizeof buf, "%.9g", task->evaluate(theta));
      out << "return = " << buf << '\n';
      return kExitOk;
    }
    const auto env = make_env(ec);
    const TrialResult trial = run_trial(*env, theta, s.run.gamma);
    std::snprintf(buf, sizeof buf, "%.9g", trial.ret);
    out << "return = " << buf << '\n';
    if (ec.kind == EnvKind::Reaching) {
      const double d = std::sqrt(squared_distance(
          forward_kinematics(trial.final_state.joints, ec.arm), ec.target));
      std::snprintf(buf, sizeof buf, "%.9g", d);
      out << "final_distance = " << buf << '\n';
    } else {
      const auto& x = trial.final_state.extras;
      std::snprintf(buf, sizeof buf, "%.9g %.9g", x.at(0), x.at(2));
      out << "final_cart_and_pole = " << buf << '\n';
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

int cmd_oracle(std::vector<std::string> args, std::ostream& out,
               std::ostream& err) {
  CLI::App app("Check the gradient estimators against the analytic toy",
               "iwpgpe oracle");
  std::size_t samples = 100000;
  std::uint64_t seed = 3;
  app.add_option("--samples", samples, "Monte-Carlo sample size")
      ->capture_default_str();
  app.add_option("--seed", seed, "random seed")->capture_default_str();
  if (int code = parse(app, std::move(args), out, err); code >= 0) {
    return code;
  }
  if (samples < 100) {
    err << "error: samples must be >= 100\n";
    return kExitUsage;
  }
  bool all = true;
  for (const auto& c : run_toy_oracles(samples, seed)) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    all = all && c.passed;
  }
  return all ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  if (args.empty()) {
    err << kUsage;
    return kExitUsage;
  }
  const std::string& cmd = args.front();
  std::vector<std::string> rest(args.begin() + 1, args.end());
  if (cmd == "train") return cmd_train(std::move(rest), out, err);
  if (cmd == "eval") return cmd_eval(std::move(rest), out, err);
  if (cmd == "oracle") return cmd_oracle(std::move(rest), out, err);
  if (cmd == "--help" || cmd == "-h" || cmd == "help") {
    out << kUsage;
    return kExitOk;
  }
  if (cmd == "--version") {
    out << "iwpgpe " << kCodeVersion << '\n';
    return kExitOk;
  }
  err << "error: unknown command '" << cmd << "'\n" << kUsage;
  return kExitUsage;
}

}  // namespace iwpgpe
