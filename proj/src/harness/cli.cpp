#include "elue/harness/cli.hpp"

#include <cstdio>
#include <optional>

#include "CLI11.hpp"
#include "elue/envsim/task_io.hpp"
#include "elue/error.hpp"
#include "elue/harness/config.hpp"
#include "elue/harness/ib_bound.hpp"
#include "elue/harness/summarize.hpp"

namespace elue::harness {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? " " : "") + fmt(values[i]);
  return out;
}

ExperimentConfig load(const std::string& path) {
  ExperimentConfig c = load_config(path);
  apply_env_overrides(c);
  return c;
}

meta::BeliefFeed feed_for(const meta::Checkpoint& c) {
  return c.variant == meta::Variant::elue ? meta::BeliefFeed::belief : meta::BeliefFeed::prior;
}

struct TrainArgs {
  std::string config, out, metrics;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  ExperimentConfig c = load(a.config);
  if (a.seed) c.train.seed = *a.seed;
  const std::string ckpt_path = a.out.empty() ? c.checkpoint : a.out;
  const std::string metrics_path = a.metrics.empty() ? c.metrics : a.metrics;
  meta::MetricsSink sink(metrics_path);
  auto result = meta::meta_train(c.train, sink, config_echo(c));
  meta::save_checkpoint(ckpt_path, result.checkpoint);
  if (c.train.variant == meta::Variant::elue)
    out << "embedding held-out loss " << fmt(result.pretrain.initial_heldout_loss) << " -> "
        << fmt(result.pretrain.final_heldout_loss) << "\n";
  out << "held-out episode means " << join(result.final_eval) << "\n";
  out << "checkpoint " << ckpt_path << "\nmetrics " << metrics_path << "\n";
  return kExitOk;
}

struct TestArgs {
  std::string config, checkpoint, mode, metrics;
  std::optional<std::uint64_t> seed;
};

int cmd_test(const TestArgs& a, std::ostream& out) {
  ExperimentConfig c = load(a.config);
  if (!a.mode.empty()) c.test.mode = meta::parse_test_mode(a.mode);
  if (a.seed) c.test.seed = *a.seed;
  const meta::Checkpoint ckpt = meta::load_checkpoint(a.checkpoint);
  meta::MetricsSink sink(a.metrics.empty() ? c.metrics : a.metrics);
  const auto tasks = envsim::sample_tasks(c.test_family, c.test_tasks, c.test_task_seed, 2000);
  for (const auto& task : tasks) {
    auto r = meta::meta_test(c.test, ckpt, task, sink);
    out << "task " << task.task_id << " returns " << join(r.episode_returns) << "\n";
  }
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint, tasks, metrics, config;
  int episodes = 3;
};

int cmd_evaluate(const EvalArgs& a, std::ostream& out) {
  envsim::EnvConfig env;
  if (!a.config.empty()) env = load(a.config).train.env;
  const meta::Checkpoint ckpt = meta::load_checkpoint(a.checkpoint);
  const auto tasks = envsim::read_tasks_file(a.tasks);
  const auto agent = ckpt.agent_nets();
  const auto embed = ckpt.embed_nets();
  auto result = meta::evaluate(agent, &embed, feed_for(ckpt), tasks, a.episodes, env);
  if (!a.metrics.empty()) {
    meta::MetricsSink sink(a.metrics);
    for (std::size_t t = 0; t < tasks.size(); ++t)
      for (std::size_t e = 0; e < result.returns[t].size(); ++e)
        sink.write({"evaluate", "evaluate", 0, 0, tasks[t].task_id, static_cast<std::int64_t>(e + 1),
                    result.returns[t][e], std::nullopt, result.belief_std[t][e], 0});
  }
  out << "episode means " << join(result.episode_means()) << "\n";
  return kExitOk;
}

int cmd_verify_ib(std::size_t trials, std::uint64_t seed, std::ostream& out) {
  const IbTrials r = run_ib_trials(trials, seed);
  const bool ok = r.min_slack >= -1e-12 && r.max_kl_gap <= 1e-12;
  char buf[160];
  std::snprintf(buf, sizeof buf, "trials %zu min_slack %.3e max_kl_gap %.3e %s\n", r.trials, r.min_slack, r.max_kl_gap,
                ok ? "ok" : "VIOLATED");
  out << buf;
  return ok ? kExitOk : kExitRuntime;
}

int cmd_summarize(const std::string& metrics, const std::string& dest, std::ostream& out, std::ostream& err) {
  const SummaryFile s = summarize_file(metrics);
  const std::string csv = format_summary_csv(s.rows);
  if (s.skipped) err << "warning: skipped " << s.skipped << " malformed record(s)\n";
  if (dest.empty()) {
    out << csv;
  } else {
    std::ofstream f(dest, std::ios::trunc);
    if (!f) throw Error("cannot write summary to " + dest);
    f << csv;
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Belief-conditional meta-RL on 2-D point-navigation tasks"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "meta-train an agent and write a checkpoint");
  train_cmd->add_option("--config", train.config, "config file")->required();
  train_cmd->add_option("--seed", train.seed, "overrides experiment.seed");
  train_cmd->add_option("--out", train.out, "checkpoint path (default experiment.checkpoint)");
  train_cmd->add_option("--metrics", train.metrics, "metrics path (default experiment.metrics)");

  TestArgs test;
  auto* test_cmd = app.add_subcommand("test", "meta-test a checkpoint on held-out tasks");
  test_cmd->add_option("--config", test.config, "config file")->required();
  test_cmd->add_option("--checkpoint", test.checkpoint, "checkpoint file")->required();
  test_cmd->add_option("--mode", test.mode, "inference|no_bel_update|bel_grad|no_bel_grad|scratch|no_emb");
  test_cmd->add_option("--seed", test.seed, "overrides test.seed");
  test_cmd->add_option("--metrics", test.metrics, "metrics path (default experiment.metrics)");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "mean-action episodes with beliefs carried across episodes");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--tasks", eval.tasks, "task list file")->required();
  eval_cmd->add_option("--episodes", eval.episodes, "episodes per task")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--metrics", eval.metrics, "optional metrics output");
  eval_cmd->add_option("--config", eval.config, "optional config for env settings");

  std::size_t trials = 10000;
  std::uint64_t ib_seed = 1;
  auto* ib_cmd = app.add_subcommand("verify-ib", "check the variational IB bound on random discrete joints");
  ib_cmd->add_option("--trials", trials, "number of random joints");
  ib_cmd->add_option("--seed", ib_seed, "rng seed");

  std::string metrics, summary_out;
  auto* sum_cmd = app.add_subcommand("summarize", "per (phase, episode_index) mean/std table");
  sum_cmd->add_option("--metrics", metrics, "metrics file")->required();
  sum_cmd->add_option("--out", summary_out, "write CSV here instead of stdout");

  std::string family = "radial_goal", tasks_out;
  int n_tasks = 5;
  std::uint64_t task_seed = 7;
  std::int64_t first_id = 0;
  auto* tasks_cmd = app.add_subcommand("sample-tasks", "write a task list file");
  tasks_cmd->add_option("--family", family, "radial_goal|rotated_dynamics|shifted_goal");
  tasks_cmd->add_option("--n", n_tasks, "number of tasks")->check(CLI::PositiveNumber);
  tasks_cmd->add_option("--seed", task_seed, "rng seed");
  tasks_cmd->add_option("--first-id", first_id, "id of the first task");
  tasks_cmd->add_option("--out", tasks_out, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train_cmd) return cmd_train(train, out);
    if (*test_cmd) return cmd_test(test, out);
    if (*eval_cmd) return cmd_evaluate(eval, out);
    if (*ib_cmd) return cmd_verify_ib(trials, ib_seed, out);
    if (*sum_cmd) return cmd_summarize(metrics, summary_out, out, err);
    if (*tasks_cmd) {
      envsim::write_tasks_file(tasks_out, envsim::sample_tasks(envsim::parse_family(family), n_tasks, task_seed, first_id));
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace elue::harness
