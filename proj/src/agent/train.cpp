#include "elue/agent/train.hpp"

#include "elue/error.hpp"

namespace elue::agent {

using envsim::Transition;

namespace {

struct RowWriter {
  AgentBatch batch;
  std::size_t row = 0;
  std::size_t belief_dim;

  RowWriter(std::size_t n, std::size_t bdim) : belief_dim(bdim) {
    batch.s = Tensor::zeros(n, 2);
    batch.a = Tensor::zeros(n, 2);
    batch.r = Tensor::zeros(n, 1);
    batch.s_next = Tensor::zeros(n, 2);
    if (bdim) {
      batch.b = Tensor::zeros(n, bdim);
      batch.b_next = Tensor::zeros(n, bdim);
    }
  }

  void put(const Transition& t, std::span<const double> b, std::span<const double> b_next) {
    for (std::size_t j = 0; j < 2; ++j) {
      batch.s(row, j) = t.state[j];
      batch.a(row, j) = t.action[j];
      batch.s_next(row, j) = t.next_state[j];
    }
    batch.r(row, 0) = t.reward;
    for (std::size_t j = 0; j < belief_dim; ++j) {
      batch.b(row, j) = b[j];
      batch.b_next(row, j) = b_next[j];
    }
    ++row;
  }
};

std::size_t target_count(std::span<const replay::ContextBatch> batches) {
  std::size_t n = 0;
  for (const auto& b : batches) n += b.targets.size();
  if (n == 0) throw DataError("agent batch has no target tuples");
  return n;
}

}  // namespace

AgentBatch assemble_batch(const embed::EmbedNets& nets, std::span<const replay::ContextBatch> batches) {
  RowWriter out(target_count(batches), 2 * nets.config().z_dim);
  for (const auto& cb : batches) {
    const embed::BeliefState b = embed::encode(nets, cb.context);
    const auto bf = b.features();
    for (const auto& t : cb.targets) out.put(t, bf, embed::belief_update(nets, b, t).features());
  }
  return std::move(out.batch);
}

AgentBatch assemble_fixed(std::span<const Transition> targets, std::span<const double> belief) {
  if (targets.empty()) throw DataError("agent batch has no target tuples");
  RowWriter out(targets.size(), belief.size());
  for (const auto& t : targets) out.put(t, belief, belief);
  return std::move(out.batch);
}

LossReport train_step(AgentNets& agent, embed::EmbedNets& embed, std::span<const replay::TaskBuffer> buffers,
                      const TrainConfig& config, Rng& rng) {
  auto batches = embed::sample_task_batches(buffers, config.batch_tasks, config.sampling.targets_per_context,
                                            config.sampling, rng);
  if (config.belief == BeliefSource::prior) {
    std::vector<Transition> targets;
    for (const auto& b : batches) targets.insert(targets.end(), b.targets.begin(), b.targets.end());
    // Prior features are (mean 0, log_std 0).
    const std::vector<double> prior(agent.config().belief_dim, 0.0);
    return agent_update(agent, assemble_fixed(targets, prior), config.hyper, rng);
  }

  // The embedding noise is drawn before any agent noise, so phi's trajectory
  // does not depend on the agent's parameters.
  std::optional<double> embed_loss;
  if (config.train_embedding) embed_loss = embed::embedding_step(embed, batches, rng, config.hyper.embed_adam);
  if (agent.config().belief_dim != 2 * embed.config().z_dim)
    throw ConfigError("agent belief width must equal 2 * z_dim");
  LossReport report = agent_update(agent, assemble_batch(embed, batches), config.hyper, rng);
  report.embed = embed_loss;
  return report;
}

LossReport fixed_belief_step(AgentNets& agent, const replay::TaskBuffer& buffer, std::span<const double> belief,
                             const TrainConfig& config, Rng& rng, BeliefCopies* copies) {
  if (buffer.empty()) throw DataError("meta-test buffer is empty; collect data before training");
  if (belief.size() != agent.config().belief_dim) throw ShapeError("belief width disagrees with the agent");
  const std::size_t n = config.batch_tasks * config.sampling.targets_per_context;
  std::uniform_int_distribution<std::size_t> pick(0, buffer.size() - 1);
  std::vector<Transition> targets;
  targets.reserve(n);
  for (std::size_t i = 0; i < n; ++i) targets.push_back(buffer.at(pick(rng)));
  return agent_update(agent, assemble_fixed(targets, belief), config.hyper, rng, copies);
}

}  // namespace elue::agent
