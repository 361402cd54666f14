#pragma once

#include <span>

#include "elue/agent/sac_ib.hpp"
#include "elue/embed/embedding.hpp"
#include "elue/replay/buffer.hpp"

namespace elue::agent {

/// Where the agent's belief input comes from during meta-training.
enum class BeliefSource {
  embedding,  // encoded from the batch context, phi trained alongside
  prior,      // always the prior; phi is neither used nor trained
};

struct TrainConfig {
  Hyperparams hyper;
  replay::SamplingConfig sampling;
  /// Tasks drawn per gradient step; each contributes one shared context and
  /// sampling.targets_per_context target tuples.
  std::size_t batch_tasks = 8;
  BeliefSource belief = BeliefSource::embedding;
  bool train_embedding = true;
};

/// Rows of one agent batch: b from each task's context, b' = b updated by the
/// row's own tuple.
AgentBatch assemble_batch(const embed::EmbedNets& nets, std::span<const replay::ContextBatch> batches);
/// Same layout with a fixed belief for every row (b' = b).
AgentBatch assemble_fixed(std::span<const envsim::Transition> targets, std::span<const double> belief);

/// One meta-training gradient step: a shared set of task batches, an Adam
/// step on the embedding loss, then agent_update with beliefs recomputed
/// from the updated phi.
LossReport train_step(AgentNets& agent, embed::EmbedNets& embed, std::span<const replay::TaskBuffer> buffers,
                      const TrainConfig& config, Rng& rng);

/// Meta-test step on one task with a given belief input; phi is untouched.
LossReport fixed_belief_step(AgentNets& agent, const replay::TaskBuffer& buffer, std::span<const double> belief,
                             const TrainConfig& config, Rng& rng, BeliefCopies* copies = nullptr);

}  // namespace elue::agent
