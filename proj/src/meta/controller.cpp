#include "elue/meta/controller.hpp"

#include <algorithm>

#include "elue/error.hpp"

namespace elue::meta {

EpisodeResult run_episode(const TaskSpec& task, const EnvConfig& env, const Policy& policy, RolloutHooks hooks) {
  const bool tracking = hooks.embed && hooks.belief && hooks.update_belief;
  static const embed::BeliefState kNoBelief;
  EpisodeResult out;
  envsim::EnvState state = envsim::reset(task);
  for (;;) {
    const envsim::Vec2 a = policy(state, hooks.belief ? *hooks.belief : kNoBelief);
    const auto step = envsim::step(task, state, a, env);
    envsim::Transition t{state.position, {std::clamp(a[0], -1.0, 1.0), std::clamp(a[1], -1.0, 1.0)}, step.reward,
                         step.next.position};
    out.ret += step.reward;
    out.transitions.push_back(t);
    if (hooks.buffer) hooks.buffer->add(t);
    if (tracking) *hooks.belief = embed::belief_update(*hooks.embed, *hooks.belief, t);
    state = step.next;
    if (step.done) break;
  }
  return out;
}

Policy agent_policy(const agent::AgentNets& nets, agent::ActMode mode, BeliefFeed feed, ndiff::Rng& rng) {
  const std::size_t bdim = nets.config().belief_dim;
  if ((feed == BeliefFeed::none) != (bdim == 0))
    throw ConfigError("belief feed does not match the agent's belief input width");
  return [&nets, mode, feed, bdim, &rng](const envsim::EnvState& s, const embed::BeliefState& b) {
    std::vector<double> features;
    if (feed == BeliefFeed::belief) {
      features = b.features();
    } else if (feed == BeliefFeed::prior) {
      features.assign(bdim, 0.0);
    }
    return agent::act(nets, envsim::observe(s), features, mode, rng).action;
  };
}

Policy oracle_policy(const TaskSpec& task, const EnvConfig& env) {
  return [task, env](const envsim::EnvState& s, const embed::BeliefState&) { return envsim::oracle_action(task, s, env); };
}

Policy random_policy(ndiff::Rng& rng) {
  return [&rng](const envsim::EnvState&, const embed::BeliefState&) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double x = u(rng);
    const double y = u(rng);
    return envsim::Vec2{x, y};
  };
}

std::vector<double> EvaluationResult::episode_means() const {
  if (returns.empty()) return {};
  std::vector<double> m(returns.front().size(), 0.0);
  for (const auto& row : returns)
    for (std::size_t e = 0; e < m.size(); ++e) m[e] += row[e];
  for (auto& v : m) v /= static_cast<double>(returns.size());
  return m;
}

EvaluationResult evaluate(const agent::AgentNets& nets, const embed::EmbedNets* embed, BeliefFeed feed,
                          std::span<const TaskSpec> tasks, int episodes, const EnvConfig& env) {
  if (episodes < 1) throw ConfigError("evaluate needs at least one episode");
  if (feed == BeliefFeed::belief && !embed) throw ConfigError("belief-fed evaluation needs embedding networks");
  ndiff::Rng unused(0);
  const Policy policy = agent_policy(nets, agent::ActMode::mean, feed, unused);
  EvaluationResult result;
  for (const auto& task : tasks) {
    embed::BeliefState belief = embed ? embed::prior(embed->config()) : embed::prior(nets.config().belief_dim / 2, 1);
    RolloutHooks hooks{embed, &belief, feed == BeliefFeed::belief, nullptr};
    std::vector<double> row, stds;
    for (int e = 0; e < episodes; ++e) {
      row.push_back(run_episode(task, env, policy, hooks).ret);
      stds.push_back(belief.mean_std());
    }
    result.returns.push_back(std::move(row));
    result.belief_std.push_back(std::move(stds));
  }
  return result;
}

}  // namespace elue::meta
