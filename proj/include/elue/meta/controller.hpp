#pragma once

#include <functional>
#include <span>
#include <vector>

#include "elue/agent/sac_ib.hpp"
#include "elue/embed/embedding.hpp"
#include "elue/envsim/point_nav.hpp"
#include "elue/replay/buffer.hpp"

namespace elue::meta {

using envsim::EnvConfig;
using envsim::TaskSpec;

/// Maps (env state, current belief) to an action.
using Policy = std::function<envsim::Vec2(const envsim::EnvState&, const embed::BeliefState&)>;

/// Episode-level side effects of a rollout.
struct RolloutHooks {
  /// When set together with `belief`, the belief absorbs each tuple.
  const embed::EmbedNets* embed = nullptr;
  embed::BeliefState* belief = nullptr;
  bool update_belief = true;
  replay::TaskBuffer* buffer = nullptr;
};

struct EpisodeResult {
  double ret = 0.0;
  std::vector<envsim::Transition> transitions;
};

EpisodeResult run_episode(const TaskSpec& task, const EnvConfig& env, const Policy& policy, RolloutHooks hooks);

/// Belief input handed to the agent: none, the live belief, or always the prior.
enum class BeliefFeed { none, belief, prior };

Policy agent_policy(const agent::AgentNets& nets, agent::ActMode mode, BeliefFeed feed, ndiff::Rng& rng);
Policy oracle_policy(const TaskSpec& task, const EnvConfig& env);
Policy random_policy(ndiff::Rng& rng);

struct EvaluationResult {
  /// returns[t][e]: task t, episode e.
  std::vector<std::vector<double>> returns;
  /// Mean posterior std of the belief at the end of each episode.
  std::vector<std::vector<double>> belief_std;
  std::vector<double> episode_means() const;
};

/// Per task: belief reset to the prior, `episodes` mean-action episodes with
/// the belief carried across episode boundaries. `embed` may be null for
/// agents that never update beliefs.
EvaluationResult evaluate(const agent::AgentNets& nets, const embed::EmbedNets* embed, BeliefFeed feed,
                          std::span<const TaskSpec> tasks, int episodes, const EnvConfig& env);

}  // namespace elue::meta
