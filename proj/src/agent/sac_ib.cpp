#include "elue/agent/sac_ib.hpp"

#include <cmath>

#include "elue/error.hpp"

namespace elue::agent {

using ndiff::MlpSpec;

namespace {

std::vector<std::size_t> widths(const AgentConfig& c, std::size_t in, std::size_t out) {
  std::vector<std::size_t> w{in};
  for (std::size_t i = 0; i < c.hidden_layers; ++i) w.push_back(c.hidden);
  w.push_back(out);
  return w;
}

bool uses_belief(const AgentNets& nets) { return nets.config().belief_dim > 0; }

// [s, b] with the belief part dropped when the agent has no belief input.
Tensor with_belief(const AgentNets& nets, const Tensor& s, const Tensor& b) {
  return uses_belief(nets) ? ndiff::hcat({s, b}) : s;
}

Var with_belief(const AgentNets& nets, Var s, Var b) {
  return uses_belief(nets) ? ndiff::concat_cols({s, b}) : s;
}

ndiff::DiagGaussian split_head(const Tensor& head) {
  const std::size_t d = head.cols() / 2;
  return {ndiff::column_slice(head, 0, d), ndiff::column_slice(head, d, 2 * d)};
}

// Per-row log-density of a diagonal Gaussian at its own mean.
Tensor log_prob_at_mean(const ndiff::DiagGaussian& d) {
  const std::size_t n = d.mean.rows(), m = d.mean.cols();
  Tensor out = Tensor::zeros(n, 1);
  for (std::size_t r = 0; r < n; ++r) {
    double lp = 0.0;
    for (std::size_t c = 0; c < m; ++c) lp += -ndiff::kHalfLog2Pi - d.log_std(r, c);
    out(r, 0) = lp;
  }
  return out;
}

Tensor tanh_of(Tensor t) {
  for (auto& v : t.values()) v = std::tanh(v);
  return t;
}

void check_adam(const ndiff::AdamConfig& a, const char* name) {
  if (!(a.lr >= 0.0) || !(a.beta1 >= 0.0 && a.beta1 < 1.0) || !(a.beta2 >= 0.0 && a.beta2 < 1.0) || !(a.eps > 0.0))
    throw ConfigError(std::string("invalid Adam settings for ") + name);
}

}  // namespace

void Hyperparams::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  if (!(beta >= 0.0)) throw ConfigError("beta must be non-negative");
  if (!(polyak >= 0.0 && polyak <= 1.0)) throw ConfigError("polyak rate must lie in [0, 1]");
  if (!(reward_scale > 0.0)) throw ConfigError("reward_scale must be positive");
  check_adam(pi_adam, "pi");
  check_adam(q_adam, "q");
  check_adam(v_adam, "v");
  check_adam(embed_adam, "embed");
}

AgentNets::AgentNets(const AgentConfig& config, Rng& rng) : config_(config) {
  const auto& c = config_;
  if (c.state_dim == 0 || c.action_dim == 0 || c.w_dim == 0 || c.hidden == 0)
    throw ConfigError("agent: widths must be positive");
  const std::size_t sb = c.state_dim + c.belief_dim;
  pi1_ = {"pi1", widths(c, sb, 2 * c.w_dim), c.activation, ndiff::Activation::none};
  pi2_ = {"pi2", widths(c, c.w_dim + c.state_dim, 2 * c.action_dim), c.activation, ndiff::Activation::none};
  q_ = {"q", widths(c, sb + c.action_dim, 1), c.activation, ndiff::Activation::none};
  v_ = {"v", widths(c, sb, 1), c.activation, ndiff::Activation::none};
  ndiff::init_mlp(pi1, pi1_, rng);
  ndiff::init_mlp(pi2, pi2_, rng);
  ndiff::init_mlp(q, q_, rng);
  ndiff::init_mlp(v, v_, rng);
  v_target = v;
  v_target.reset_optimizer();
}

void AgentNets::check_shapes() const {
  auto check = [](const ParameterSet& p, const MlpSpec& spec, const char* section) {
    if (p.size() != 2 * spec.layer_count())
      throw FormatError(std::string("agent section ") + section + " has the wrong number of entries");
    for (std::size_t l = 0; l < spec.layer_count(); ++l) {
      const Tensor& w = p.value(spec.weight_name(l));
      const Tensor& b = p.value(spec.bias_name(l));
      if (w.rows() != spec.widths[l] || w.cols() != spec.widths[l + 1] || b.cols() != spec.widths[l + 1])
        throw ShapeError(std::string("agent section ") + section + " disagrees with layer " + std::to_string(l));
    }
  };
  check(pi1, pi1_, "pi1");
  check(pi2, pi2_, "pi2");
  check(q, q_, "q");
  check(v, v_, "v");
  check(v_target, v_, "v_target");
}

ActionSample act(const AgentNets& nets, const envsim::Vec2& state, std::span<const double> belief, ActMode mode,
                 Rng& rng) {
  const auto& c = nets.config();
  if (belief.size() != c.belief_dim) throw ShapeError("act: belief feature width mismatch");
  Tensor s = Tensor::row({state[0], state[1]});
  Tensor b = c.belief_dim ? Tensor::row({belief.begin(), belief.end()}) : Tensor();
  auto h1 = split_head(ndiff::mlp_forward(nets.pi1_spec(), nets.pi1, with_belief(nets, s, b)));

  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](std::size_t n) {
    Tensor t = Tensor::zeros(1, n);
    if (mode == ActMode::sample)
      for (auto& v : t.values()) v = normal(rng);
    return t;
  };
  Tensor w = ndiff::sample_reparam(h1, draw(c.w_dim));
  auto h2 = split_head(ndiff::mlp_forward(nets.pi2_spec(), nets.pi2, ndiff::hcat({w, s})));
  Tensor u = ndiff::sample_reparam(h2, draw(c.action_dim));
  auto squashed = ndiff::tanh_squash(u, ndiff::gaussian_log_prob(h2, u));

  ActionSample out;
  out.w = w.to_vector();
  out.pre_tanh = u.to_vector();
  out.action = {squashed.action[0], squashed.action[1]};
  out.log_prob_w = ndiff::gaussian_log_prob(h1, w);
  out.log_prob_action = squashed.log_prob;
  return out;
}

ActorNoise draw_actor_noise(const AgentConfig& config, std::size_t rows, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ActorNoise n{Tensor::zeros(rows, config.w_dim), Tensor::zeros(rows, config.action_dim)};
  for (auto& v : n.w.values()) v = normal(rng);
  for (auto& v : n.u.values()) v = normal(rng);
  return n;
}

Tensor q_value(const AgentNets& nets, const Tensor& s, const Tensor& b, const Tensor& a) {
  Tensor in = uses_belief(nets) ? ndiff::hcat({s, b, a}) : ndiff::hcat({s, a});
  return ndiff::mlp_forward(nets.q_spec(), nets.q, in);
}

Tensor v_value(const AgentNets& nets, const ParameterSet& v_params, const Tensor& s, const Tensor& b) {
  return ndiff::mlp_forward(nets.v_spec(), v_params, with_belief(nets, s, b));
}

Tensor q_targets(const AgentNets& nets, const Tensor& r, const Tensor& s_next, const Tensor& b_next, double gamma,
                 double reward_scale) {
  Tensor y = v_value(nets, nets.v_target, s_next, b_next);
  if (y.rows() != r.rows()) throw ShapeError("q_targets: reward rows disagree with next-state rows");
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = reward_scale * r[i] + gamma * y[i];
  return y;
}

Tensor v_targets(const AgentNets& nets, const Tensor& s, const Tensor& b_pi, const Tensor& b_q, double beta) {
  auto h1 = split_head(ndiff::mlp_forward(nets.pi1_spec(), nets.pi1, with_belief(nets, s, b_pi)));
  const Tensor& w = h1.mean;
  auto h2 = split_head(ndiff::mlp_forward(nets.pi2_spec(), nets.pi2, ndiff::hcat({w, s})));
  Tensor a = tanh_of(h2.mean);
  Tensor y = q_value(nets, s, b_q, a);
  Tensor lp = log_prob_at_mean(h1);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] -= beta * lp[i];
  return y;
}

Var actor_loss(Tape& tape, const AgentNets& nets, Var s, Var b_pi, Var b_q, const ActorNoise& noise, double beta) {
  auto h1 = ndiff::gaussian_head(ndiff::mlp_forward(tape, nets.pi1_spec(), nets.pi1, with_belief(nets, s, b_pi)));
  Var w = ndiff::sample_reparam(h1, tape.constant(noise.w));
  Var log_pi = ndiff::gaussian_log_prob_rows(h1, w);
  auto h2 = ndiff::gaussian_head(ndiff::mlp_forward(tape, nets.pi2_spec(), nets.pi2, ndiff::concat_cols({w, s})));
  Var a = ndiff::tanh(ndiff::sample_reparam(h2, tape.constant(noise.u)));
  Var q_in = uses_belief(nets) ? ndiff::concat_cols({s, b_q, a}) : ndiff::concat_cols({s, a});
  Var q = ndiff::mlp_forward(tape, nets.q_spec(), nets.q, q_in, /*trainable=*/false);
  return ndiff::mean(ndiff::scale(log_pi, beta) - q);
}

Var q_critic_loss(Tape& tape, const AgentNets& nets, Var s, Var b, Var a, const Tensor& targets) {
  Var q_in = uses_belief(nets) ? ndiff::concat_cols({s, b, a}) : ndiff::concat_cols({s, a});
  Var q = ndiff::mlp_forward(tape, nets.q_spec(), nets.q, q_in);
  return ndiff::mean(ndiff::square(q - tape.constant(targets)));
}

Var v_critic_loss(Tape& tape, const AgentNets& nets, Var s, Var b, const Tensor& targets) {
  Var v = ndiff::mlp_forward(tape, nets.v_spec(), nets.v, with_belief(nets, s, b));
  return ndiff::mean(ndiff::square(v - tape.constant(targets)));
}

void polyak_update(ParameterSet& target, const ParameterSet& source, double lambda) {
  if (target.size() != source.size()) throw ShapeError("polyak_update: parameter sets differ in size");
  for (auto& e : target.entries()) {
    if (!source.contains(e.name)) throw ShapeError("polyak_update: source lacks " + e.name);
    const Tensor& src = source.value(e.name);
    if (!src.same_shape(e.value)) throw ShapeError("polyak_update: shape mismatch for " + e.name);
    for (std::size_t i = 0; i < e.value.size(); ++i) e.value[i] += lambda * (src[i] - e.value[i]);
  }
}

BeliefCopies BeliefCopies::from(std::span<const double> belief) {
  BeliefCopies c;
  const Tensor row = Tensor::row({belief.begin(), belief.end()});
  c.pi.add("belief", row);
  c.q.add("belief", row);
  c.v.add("belief", row);
  return c;
}

LossReport agent_update(AgentNets& nets, const AgentBatch& batch, const Hyperparams& hyper, Rng& rng,
                        BeliefCopies* copies) {
  const std::size_t n = batch.rows();
  const bool belief = uses_belief(nets);
  if (copies && !belief) throw ConfigError("belief copies need an agent with belief inputs");
  ActorNoise noise = draw_actor_noise(nets.config(), n, rng);

  Tensor b_pi = batch.b, b_q = batch.b, b_next = batch.b_next;
  if (copies) {
    b_pi = ndiff::tile_rows(BeliefCopies::value_of(copies->pi), n);
    b_q = ndiff::tile_rows(BeliefCopies::value_of(copies->q), n);
    b_next = ndiff::tile_rows(BeliefCopies::value_of(copies->v), n);
  }
  const Tensor y_q = q_targets(nets, batch.r, batch.s_next, b_next, hyper.gamma, hyper.reward_scale);
  const Tensor y_v = v_targets(nets, batch.s, b_pi, b_q, hyper.beta);

  Tape tape;
  Var s = tape.constant(batch.s);
  Var bp, bq, bv;
  if (copies) {
    bp = ndiff::broadcast_rows(tape.parameter(copies->pi, "belief"), n);
    bq = ndiff::broadcast_rows(tape.parameter(copies->q, "belief"), n);
    bv = ndiff::broadcast_rows(tape.parameter(copies->v, "belief"), n);
  } else if (belief) {
    bp = bq = bv = tape.constant(batch.b);
  }
  Var bq_const = belief ? tape.constant(b_q) : Var();
  Var l_actor = actor_loss(tape, nets, s, bp, bq_const, noise, hyper.beta);
  Var l_q = q_critic_loss(tape, nets, s, bq, tape.constant(batch.a), y_q);
  Var l_v = v_critic_loss(tape, nets, s, bv, y_v);
  tape.backward(l_actor + l_q + l_v);

  ndiff::adam_step(nets.pi1, tape.gradients(nets.pi1), hyper.pi_adam);
  ndiff::adam_step(nets.pi2, tape.gradients(nets.pi2), hyper.pi_adam);
  ndiff::adam_step(nets.q, tape.gradients(nets.q), hyper.q_adam);
  ndiff::adam_step(nets.v, tape.gradients(nets.v), hyper.v_adam);
  if (copies) {
    ndiff::adam_step(copies->pi, tape.gradients(copies->pi), hyper.pi_adam);
    ndiff::adam_step(copies->q, tape.gradients(copies->q), hyper.q_adam);
    ndiff::adam_step(copies->v, tape.gradients(copies->v), hyper.v_adam);
  }
  polyak_update(nets.v_target, nets.v, hyper.polyak);

  LossReport report;
  report.actor = l_actor.value().item();
  report.q = l_q.value().item();
  report.v = l_v.value().item();
  return report;
}

}  // namespace elue::agent
