#pragma once

#include <optional>
#include <span>
#include <vector>

#include "elue/envsim/point_nav.hpp"
#include "elue/ndiff/adam.hpp"
#include "elue/ndiff/gaussian.hpp"
#include "elue/ndiff/mlp.hpp"

namespace elue::agent {

using ndiff::ParameterSet;
using ndiff::Rng;
using ndiff::Tape;
using ndiff::Tensor;
using ndiff::Var;

struct AgentConfig {
  std::size_t state_dim = 2;
  std::size_t action_dim = 2;
  /// Width of the belief feature vector (2 * z_dim); 0 drops the belief input.
  std::size_t belief_dim = 10;
  std::size_t w_dim = 5;
  std::size_t hidden = 64;
  std::size_t hidden_layers = 2;
  ndiff::Activation activation = ndiff::Activation::relu;

  friend bool operator==(const AgentConfig&, const AgentConfig&) = default;
};

struct Hyperparams {
  double gamma = 0.99;
  double beta = 0.2;
  double polyak = 0.005;
  /// Multiplies r in the Q target; sets the reward-to-IB-penalty balance.
  double reward_scale = 1.0;
  ndiff::AdamConfig pi_adam;
  ndiff::AdamConfig q_adam;
  ndiff::AdamConfig v_adam;
  ndiff::AdamConfig embed_adam;

  void validate() const;
};

/// Two-stage IB policy pi1(w|s,b) pi2(u|w,s), a = tanh(u), with Q(s,b,a),
/// V(s,b) and the Polyak target copy of V.
class AgentNets {
 public:
  AgentNets(const AgentConfig& config, Rng& rng);

  const AgentConfig& config() const noexcept { return config_; }
  const ndiff::MlpSpec& pi1_spec() const noexcept { return pi1_; }
  const ndiff::MlpSpec& pi2_spec() const noexcept { return pi2_; }
  const ndiff::MlpSpec& q_spec() const noexcept { return q_; }
  const ndiff::MlpSpec& v_spec() const noexcept { return v_; }

  /// Checks that every parameter set matches the specs (after loading).
  void check_shapes() const;

  ParameterSet pi1, pi2, q, v, v_target;

 private:
  AgentConfig config_;
  ndiff::MlpSpec pi1_, pi2_, q_, v_;
};

enum class ActMode { sample, mean };

struct ActionSample {
  std::vector<double> w;
  std::vector<double> pre_tanh;
  envsim::Vec2 action{0.0, 0.0};
  double log_prob_w = 0.0;
  /// log pi2(a|w,s) including the tanh correction.
  double log_prob_action = 0.0;
};

ActionSample act(const AgentNets& nets, const envsim::Vec2& state, std::span<const double> belief, ActMode mode,
                 Rng& rng);

/// Row-stacked inputs of the agent losses. b is the context belief of each
/// row's task, b_next the same belief updated with the row's own tuple.
struct AgentBatch {
  Tensor s, a, r, s_next, b, b_next;
  std::size_t rows() const { return s.rows(); }
};

/// Reparameterization noise of the actor loss.
struct ActorNoise {
  Tensor w;
  Tensor u;
};
ActorNoise draw_actor_noise(const AgentConfig& config, std::size_t rows, Rng& rng);

// Plain network evaluations (rows are samples).
Tensor q_value(const AgentNets& nets, const Tensor& s, const Tensor& b, const Tensor& a);
Tensor v_value(const AgentNets& nets, const ParameterSet& v_params, const Tensor& s, const Tensor& b);

/// Per-row reward_scale * r + gamma * V_target(s', b').
Tensor q_targets(const AgentNets& nets, const Tensor& r, const Tensor& s_next, const Tensor& b_next, double gamma,
                 double reward_scale = 1.0);
/// Per-row Q(s,b,a~) - beta * log pi1(w~|s,b) at the mean actions. `b_q` and
/// `b_pi` are the belief inputs of Q and pi1 (identical unless copies are trained).
Tensor v_targets(const AgentNets& nets, const Tensor& s, const Tensor& b_pi, const Tensor& b_q, double beta);

// Taped losses. Belief inputs arrive as Vars so trained belief copies can receive gradients;
// pass tape.constant(...) to stop them.
/// mean(beta * log pi1(w|s,b) - Q(s,b,a)); Q weights enter as constants.
Var actor_loss(Tape& tape, const AgentNets& nets, Var s, Var b_pi, Var b_q, const ActorNoise& noise, double beta);
/// mean((Q(s,b,a) - y)^2) against constant targets y.
Var q_critic_loss(Tape& tape, const AgentNets& nets, Var s, Var b, Var a, const Tensor& targets);
/// mean((V(s,b) - y)^2) against constant targets y.
Var v_critic_loss(Tape& tape, const AgentNets& nets, Var s, Var b, const Tensor& targets);

/// target <- target + lambda * (source - target), matched by entry name.
void polyak_update(ParameterSet& target, const ParameterSet& source, double lambda);

/// Belief inputs trained as free parameters, one 1 x belief_dim copy per
/// network, each stored under the entry name "belief".
struct BeliefCopies {
  ParameterSet pi, q, v;
  static BeliefCopies from(std::span<const double> belief);
  static Tensor value_of(const ParameterSet& copy) { return copy.value("belief"); }
};

struct LossReport {
  std::optional<double> embed;
  double actor = 0.0;
  double q = 0.0;
  double v = 0.0;
};

/// One Adam step each for pi (pi1 and pi2), Q and V on a consistent snapshot,
/// then the Polyak update. With `copies` the belief inputs come from those
/// parameters (each also stepped at its network's rate) instead of `batch.b`.
LossReport agent_update(AgentNets& nets, const AgentBatch& batch, const Hyperparams& hyper, Rng& rng,
                        BeliefCopies* copies = nullptr);

}  // namespace elue::agent
