#include "elue/meta/meta_train.hpp"

#include <chrono>
#include <numeric>

#include "elue/error.hpp"

namespace elue::meta {

namespace {

ndiff::Rng stream(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag)};
  return ndiff::Rng(seq);
}

int episodes_for(int steps, const EnvConfig& env) { return (steps + env.horizon - 1) / env.horizon; }

std::string run_id_for(const MetaTrainConfig& c) {
  return "train-" + std::string(envsim::to_string(c.family)) + "-" + std::string(to_string(c.variant)) + "-s" +
         std::to_string(c.seed);
}

std::vector<std::size_t> choose(std::size_t n, std::size_t k, ndiff::Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  k = std::min(k, n);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  order.resize(k);
  return order;
}

}  // namespace

void MetaTrainConfig::validate() const {
  if (n_train_tasks < 1 || n_eval_tasks < 1 || tasks_per_iteration < 1)
    throw ConfigError("task counts must be at least 1");
  if (collection_steps < 1 || training_steps < 0 || total_iterations < 0 || embedding_pretrain_steps < 0)
    throw ConfigError("step and iteration counts must be non-negative (collection_steps at least 1)");
  if (initial_sampling_steps < static_cast<int>(train.sampling.k_min))
    throw ConfigError("initial_sampling_steps must cover at least k_min tuples per task");
  if (eval_every < 1 || eval_episodes < 1) throw ConfigError("eval_every and eval_episodes must be at least 1");
  if (env.horizon < 1) throw ConfigError("horizon must be at least 1");
  if (agent.belief_dim != 2 * embed.z_dim) throw ConfigError("agent belief_dim must equal 2 * z_dim");
  if (train.batch_tasks < 1) throw ConfigError("batch_tasks must be at least 1");
  train.hyper.validate();
}

std::vector<TaskSpec> train_tasks(const MetaTrainConfig& c) { return envsim::sample_tasks(c.family, c.n_train_tasks, c.seed); }

std::vector<TaskSpec> heldout_tasks(const MetaTrainConfig& c) {
  return envsim::sample_tasks(c.family, c.n_eval_tasks, c.seed ^ 0x9e3779b97f4a7c15ull, 1000);
}

MetaTrainResult meta_train(const MetaTrainConfig& config, MetricsSink& metrics,
                           const std::vector<std::string>& config_echo) {
  config.validate();
  const auto started = std::chrono::steady_clock::now();
  const std::string run_id = run_id_for(config);
  const bool use_embedding = config.variant == Variant::elue;

  ndiff::Rng init_rng = stream(config.seed, 1);
  ndiff::Rng collect_rng = stream(config.seed, 2);
  ndiff::Rng train_rng = stream(config.seed, 3);

  MetaTrainResult result;
  result.train_tasks = train_tasks(config);
  result.eval_tasks = heldout_tasks(config);

  embed::EmbedNets embed(config.embed, init_rng);
  agent::AgentNets agent(config.agent, init_rng);
  agent::TrainConfig train = config.train;
  train.belief = use_embedding ? agent::BeliefSource::embedding : agent::BeliefSource::prior;
  train.train_embedding = use_embedding;
  const BeliefFeed feed = use_embedding ? BeliefFeed::belief : BeliefFeed::prior;

  std::vector<replay::TaskBuffer> buffers;
  for (const auto& t : result.train_tasks) buffers.emplace_back(t.task_id);
  std::vector<embed::BeliefState> beliefs(buffers.size(), embed::prior(config.embed));

  std::uint64_t env_steps = 0;
  auto emit = [&](std::string phase, std::int64_t it, std::int64_t task, std::int64_t ep, double ret,
                  std::optional<agent::LossReport> losses, double bstd) {
    metrics.write({run_id, std::move(phase), it, env_steps, task, ep, ret, std::move(losses), bstd, config.seed});
  };

  // Initial sampling with uniform random actions.
  const Policy explore = random_policy(collect_rng);
  for (std::size_t i = 0; i < buffers.size(); ++i) {
    for (int e = 0; e < episodes_for(config.initial_sampling_steps, config.env); ++e) {
      auto ep = run_episode(result.train_tasks[i], config.env, explore, {nullptr, nullptr, false, &buffers[i]});
      env_steps += ep.transitions.size();
      emit("initial", 0, result.train_tasks[i].task_id, e + 1, ep.ret, std::nullopt, 1.0);
    }
  }

  if (use_embedding) {
    embed::PretrainOptions opts{train.sampling, train.batch_tasks, train.hyper.embed_adam};
    result.pretrain = embed::pretrain_embedding(embed, buffers, static_cast<std::size_t>(config.embedding_pretrain_steps),
                                                opts, train_rng);
    emit("pretrain", 0, -1, 0, 0.0,
         agent::LossReport{result.pretrain.final_heldout_loss, 0.0, 0.0, 0.0}, 1.0);
  }

  auto run_eval = [&](std::int64_t it) {
    auto ev = evaluate(agent, use_embedding ? &embed : nullptr, feed, result.eval_tasks, config.eval_episodes,
                       config.env);
    for (std::size_t t = 0; t < ev.returns.size(); ++t)
      for (std::size_t e = 0; e < ev.returns[t].size(); ++e)
        emit("eval", it, result.eval_tasks[t].task_id, static_cast<std::int64_t>(e + 1), ev.returns[t][e],
             std::nullopt, ev.belief_std[t][e]);
    result.final_eval = ev.episode_means();
  };
  run_eval(0);

  const Policy behave = agent_policy(agent, agent::ActMode::sample, feed, collect_rng);
  for (int it = 1; it <= config.total_iterations; ++it) {
    try {
      double collect_return = 0.0;
      int collect_episodes = 0;
      for (std::size_t i : choose(buffers.size(), static_cast<std::size_t>(config.tasks_per_iteration), collect_rng)) {
        beliefs[i] = embed::prior(config.embed);
        RolloutHooks hooks{&embed, &beliefs[i], use_embedding, &buffers[i]};
        for (int e = 0; e < episodes_for(config.collection_steps, config.env); ++e) {
          auto ep = run_episode(result.train_tasks[i], config.env, behave, hooks);
          env_steps += ep.transitions.size();
          collect_return += ep.ret;
          ++collect_episodes;
        }
      }

      agent::LossReport mean_loss;
      double embed_sum = 0.0;
      for (int s = 0; s < config.training_steps; ++s) {
        auto rep = agent::train_step(agent, embed, buffers, train, train_rng);
        if (rep.embed) embed_sum += *rep.embed;
        mean_loss.actor += rep.actor;
        mean_loss.q += rep.q;
        mean_loss.v += rep.v;
      }
      if (config.training_steps > 0) {
        const double inv = 1.0 / config.training_steps;
        mean_loss.actor *= inv;
        mean_loss.q *= inv;
        mean_loss.v *= inv;
        if (use_embedding) mean_loss.embed = embed_sum * inv;
      }
      double bstd = 0.0;
      for (const auto& b : beliefs) bstd += b.mean_std();
      emit("train", it, -1, 0, collect_return / std::max(collect_episodes, 1), mean_loss,
           bstd / static_cast<double>(beliefs.size()));

      if (it % config.eval_every == 0 || it == config.total_iterations) run_eval(it);
    } catch (const Error& e) {
      throw Error("meta_train iteration " + std::to_string(it) + ": " + e.what());
    }
  }

  Checkpoint& ckpt = result.checkpoint;
  ckpt.variant = config.variant;
  ckpt.store(embed, agent);
  ckpt.config_echo = config_echo;
  if (config.save_buffers) {
    ckpt.buffers = buffers;
    for (std::size_t i = 0; i < buffers.size(); ++i) ckpt.beliefs.emplace_back(buffers[i].task_id(), beliefs[i]);
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace elue::meta
