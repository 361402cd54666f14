// Runs the ten acceptance criteria and prints one PASS/FAIL line for each.
//
//   elue_acceptance [--only 1,2,5] [--work DIR] [--config configs/reference.ini]
//
// Exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../support/gradcheck.hpp"
#include "elue/agent/sac_ib.hpp"
#include "elue/agent/train.hpp"
#include "elue/embed/embedding.hpp"
#include "elue/error.hpp"
#include "elue/envsim/point_nav.hpp"
#include "elue/harness/cli.hpp"
#include "elue/harness/config.hpp"
#include "elue/harness/ib_bound.hpp"
#include "elue/harness/summarize.hpp"
#include "elue/meta/checkpoint.hpp"
#include "elue/meta/meta_test.hpp"
#include "elue/meta/meta_train.hpp"
#include "elue/ndiff/adam.hpp"
#include "elue/ndiff/gaussian.hpp"
#include "elue/ndiff/mlp.hpp"
#include "elue/ndiff/tape.hpp"
#include "elue/replay/buffer.hpp"
#include "CLI11.hpp"

using namespace elue;
namespace fs = std::filesystem;

#ifndef ELUE_SOURCE_DIR
#define ELUE_SOURCE_DIR "."
#endif

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

envsim::Transition random_tuple(ndiff::Rng& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  return {{u(rng), u(rng)}, {u(rng), u(rng)}, -std::abs(u(rng)), {u(rng), u(rng)}};
}

std::vector<envsim::Transition> random_context(ndiff::Rng& rng, std::size_t n) {
  std::vector<envsim::Transition> c;
  for (std::size_t i = 0; i < n; ++i) c.push_back(random_tuple(rng));
  return c;
}

double belief_gap(const embed::BeliefState& a, const embed::BeliefState& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.mean.size(); ++i) {
    d = std::max(d, std::abs(a.mean[i] - b.mean[i]));
    d = std::max(d, std::abs(a.log_std[i] - b.log_std[i]));
  }
  return d;
}

ndiff::Tensor uniform(std::size_t r, std::size_t c, ndiff::Rng& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  ndiff::Tensor t = ndiff::Tensor::zeros(r, c);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

void force_output(ndiff::ParameterSet& p, const ndiff::MlpSpec& spec, const std::vector<double>& bias) {
  const std::size_t l = spec.layer_count() - 1;
  auto& w = p.value(spec.weight_name(l));
  w = ndiff::Tensor::zeros(w.rows(), w.cols());
  auto& b = p.value(spec.bias_name(l));
  for (std::size_t j = 0; j < bias.size(); ++j) b(0, j) = bias[j];
}

// ---------------------------------------------------------------------------

Outcome encoder_invariance() {
  const auto t0 = std::chrono::steady_clock::now();
  ndiff::Rng rng(101);
  embed::EmbedNets nets(embed::EmbedConfig{}, rng);
  double shuffle_dev = 0.0, fold_dev = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto ctx = random_context(rng, 1 + rng() % 64);
    const auto base = embed::encode(nets, ctx);
    auto folded = embed::prior(nets.config());
    for (const auto& t : ctx) folded = embed::belief_update(nets, folded, t);
    fold_dev = std::max(fold_dev, belief_gap(folded, base));
    for (int s = 0; s < 20; ++s) {
      std::shuffle(ctx.begin(), ctx.end(), rng);
      shuffle_dev = std::max(shuffle_dev, belief_gap(embed::encode(nets, ctx), base));
    }
  }
  const double secs = seconds_since(t0);
  return {shuffle_dev < 1e-9 && fold_dev < 1e-9 && secs < 60.0,
          fmt("max shuffle deviation %.3g, fold vs batch %.3g, %.1f s", shuffle_dev, fold_dev, secs)};
}

// ---------------------------------------------------------------------------

Outcome gradient_certification() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string where;
  std::size_t scalars = 0;
  auto record = [&](const char* loss, const testing::GradCheck& c) {
    scalars += c.checked;
    if (c.max_rel_error >= worst) {
      worst = c.max_rel_error;
      where = std::string(loss) + " " + c.worst;
    }
  };

  {
    embed::EmbedConfig c;
    c.z_dim = 2;
    c.aggregate_dim = 4;
    c.hidden = 5;
    c.hidden_layers = 1;
    ndiff::Rng rng(201);
    embed::EmbedNets nets(c, rng);
    std::vector<replay::ContextBatch> batches;
    for (std::size_t k : {1, 3, 6}) batches.push_back({0, random_context(rng, k), {}});
    auto noise = embed::draw_posterior_noise(batches.size(), c.z_dim, rng);
    ndiff::Tape tape;
    tape.backward(embed::embedding_loss(tape, nets, batches, noise).loss);
    record("embedding_loss", testing::check_gradients(nets.params, tape.gradients(nets.params), [&] {
             ndiff::Tape t;
             return embed::embedding_loss(t, nets, batches, noise).loss.value().item();
           }));
  }

  agent::AgentConfig ac;
  ac.belief_dim = 2;
  ac.w_dim = 2;
  ac.hidden = 4;
  ac.hidden_layers = 1;
  ndiff::Rng rng(202);
  agent::AgentNets nets(ac, rng);
  const std::size_t n = 6;
  const auto s = uniform(n, 2, rng), b = uniform(n, 2, rng), a = uniform(n, 2, rng, -0.9, 0.9);
  const auto r = uniform(n, 1, rng, -1.5, 0.0), s2 = uniform(n, 2, rng), b2 = uniform(n, 2, rng);

  {
    auto noise = agent::draw_actor_noise(ac, n, rng);
    auto value = [&](ndiff::Tape& t) {
      return agent::actor_loss(t, nets, t.constant(s), t.constant(b), t.constant(b), noise, 0.2);
    };
    ndiff::Tape tape;
    tape.backward(value(tape));
    auto plain = [&] {
      ndiff::Tape t;
      return value(t).value().item();
    };
    record("actor_loss", testing::check_gradients(nets.pi1, tape.gradients(nets.pi1), plain));
    record("actor_loss", testing::check_gradients(nets.pi2, tape.gradients(nets.pi2), plain));
  }
  {
    const auto y = agent::q_targets(nets, r, s2, b2, 0.99, 3.0);
    auto value = [&](ndiff::Tape& t) {
      return agent::q_critic_loss(t, nets, t.constant(s), t.constant(b), t.constant(a), y);
    };
    ndiff::Tape tape;
    tape.backward(value(tape));
    record("q_critic_loss", testing::check_gradients(nets.q, tape.gradients(nets.q), [&] {
             ndiff::Tape t;
             return value(t).value().item();
           }));
  }
  {
    const auto y = agent::v_targets(nets, s, b, b, 0.2);
    auto value = [&](ndiff::Tape& t) { return agent::v_critic_loss(t, nets, t.constant(s), t.constant(b), y); };
    ndiff::Tape tape;
    tape.backward(value(tape));
    record("v_critic_loss", testing::check_gradients(nets.v, tape.gradients(nets.v), [&] {
             ndiff::Tape t;
             return value(t).value().item();
           }));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 300.0,
          fmt("%zu scalars, max relative error %.3g (%s), %.1f s", scalars, worst, where.c_str(), secs)};
}

// ---------------------------------------------------------------------------

class Checks {
 public:
  void near(const std::string& what, double got, double want, double tol = 1e-9) {
    ++count_;
    if (!(std::abs(got - want) <= tol)) failures_.push_back(what + fmt(": got %.12g want %.12g", got, want));
  }
  void truth(const std::string& what, bool ok) {
    ++count_;
    if (!ok) failures_.push_back(what);
  }
  Outcome outcome() const {
    std::string d = fmt("%zu values checked", count_);
    for (const auto& f : failures_) d += "; " + f;
    return {failures_.empty(), d};
  }

 private:
  std::size_t count_ = 0;
  std::vector<std::string> failures_;
};

Outcome analytic_values() {
  using ndiff::DiagGaussian;
  using ndiff::Tensor;
  Checks c;

  // Networks, gradients, optimizer.
  {
    ndiff::MlpSpec id{"id", {2, 2}, ndiff::Activation::relu, ndiff::Activation::none};
    ndiff::ParameterSet p;
    p.add("id.w0", Tensor::matrix(2, 2, {1, 0, 0, 1}));
    p.add("id.b0", Tensor::zeros(1, 2));
    auto out = ndiff::mlp_forward(id, p, Tensor::row({0.3, -0.7}));
    c.near("identity net x0", out[0], 0.3);
    c.near("identity net x1", out[1], -0.7);
    ndiff::MlpSpec z{"z", {3, 2}, ndiff::Activation::relu, ndiff::Activation::none};
    ndiff::ParameterSet q;
    q.add("z.w0", Tensor::zeros(3, 2));
    q.add("z.b0", Tensor::row({1.5, -2.0}));
    auto o2 = ndiff::mlp_forward(z, q, Tensor::row({4, 5, 6}));
    c.near("zero weights give bias", o2[0], 1.5);
    c.near("zero weights give bias", o2[1], -2.0);
  }
  {
    ndiff::ParameterSet p;
    p.add("w", Tensor::scalar(2.0));
    ndiff::Tape tape;
    c.near("d(w x)/dw", ndiff::grad(ndiff::mul(tape.parameter(p, "w"), tape.constant(Tensor::scalar(3.0))), p)
                            .at("w")
                            .item(),
           3.0);
    ndiff::ParameterSet t;
    t.add("w", Tensor::scalar(0.0));
    ndiff::Tape tape2;
    c.near("tanh'(0)", ndiff::grad(ndiff::tanh(tape2.parameter(t, "w")), t).at("w").item(), 1.0);
  }
  {
    ndiff::ParameterSet p;
    p.add("w", Tensor::scalar(0.0));
    ndiff::adam_step(p, {{"w", Tensor::scalar(2.0)}}, {1e-3, 0.9, 0.999, 1e-8});
    c.near("first Adam step", p.value("w").item(), -1e-3 * (2.0 / (2.0 + 1e-8)));
    ndiff::ParameterSet z;
    z.add("w", Tensor::row({1.0, -2.0}));
    for (int i = 0; i < 3; ++i) ndiff::adam_step(z, {{"w", Tensor::zeros(1, 2)}}, {});
    c.truth("zero gradient leaves Adam parameters", z.value("w") == Tensor::row({1.0, -2.0}));
  }

  // Gaussians and the squash.
  c.near("log N(0|0,1)", ndiff::gaussian_log_prob(DiagGaussian::standard(1, 1), Tensor::scalar(0.0)), -kHalfLog2Pi);
  c.near("log N(1|0,1)", ndiff::gaussian_log_prob(DiagGaussian::standard(1, 1), Tensor::scalar(1.0)),
         -kHalfLog2Pi - 0.5);
  c.near("2-d log N(0|0,I)", ndiff::gaussian_log_prob(DiagGaussian::standard(1, 2), Tensor::zeros(1, 2)),
         -2 * kHalfLog2Pi);
  c.near("reparam noise 0", ndiff::sample_reparam(DiagGaussian(Tensor::scalar(0.7), Tensor::scalar(0.3)),
                                                  Tensor::scalar(0.0))
                                .item(),
         0.7);
  c.near("reparam noise 1.5", ndiff::sample_reparam(DiagGaussian::standard(1, 1), Tensor::scalar(1.5)).item(), 1.5);
  auto g = [](double m, double s) { return DiagGaussian(Tensor::scalar(m), Tensor::scalar(std::log(s))); };
  c.near("KL equal", ndiff::kl_diag_gaussians(g(0, 1), g(0, 1)), 0.0);
  c.near("KL N(1,1)", ndiff::kl_diag_gaussians(g(1, 1), g(0, 1)), 0.5);
  c.near("KL N(0,2)", ndiff::kl_diag_gaussians(g(0, 2), g(0, 1)), std::log(0.5) + 2.0 - 0.5);
  {
    auto sq = ndiff::tanh_squash(Tensor::scalar(0.0), -0.5);
    c.near("tanh(0)", sq.action.item(), 0.0);
    c.near("squash correction at 0", sq.log_prob, -0.5);
    for (double u : {0.3, 1.7, 4.0})
      c.near("symmetric squash correction", ndiff::tanh_log_det(Tensor::scalar(u)),
             ndiff::tanh_log_det(Tensor::scalar(-u)));
  }

  // Environment.
  {
    auto a = envsim::sample_tasks(envsim::Family::radial_goal, 2, 5);
    auto b = envsim::sample_tasks(envsim::Family::radial_goal, 2, 5);
    c.truth("task sampling deterministic", a.size() == 2 && a[0].goal == b[0].goal && a[1].goal == b[1].goal);
    for (const auto& t : envsim::sample_tasks(envsim::Family::radial_goal, 16, 3))
      c.near("radial goal norm", std::hypot(t.goal[0], t.goal[1]), 0.5, 1e-12);
    for (const auto& t : envsim::sample_tasks(envsim::Family::rotated_dynamics, 8, 3))
      c.truth("rotated goal (0.5, 0)", t.goal[0] == 0.5 && t.goal[1] == 0.0);
    envsim::TaskSpec radial{envsim::Family::radial_goal, {0.5, 0.0}, 0.0, 0, 0};
    auto s0 = envsim::reset(radial);
    c.truth("reset at origin", s0.position[0] == 0.0 && s0.position[1] == 0.0);
    auto st = envsim::step(radial, s0, {1.0, 0.0});
    c.near("step x", st.next.position[0], 0.1);
    c.near("step y", st.next.position[1], 0.0);
    c.near("step reward", st.reward, -0.4);
    envsim::EnvState away = s0;
    away.position = {0.2, -0.3};
    auto still = envsim::step(radial, away, {0.0, 0.0});
    c.truth("zero action keeps position", still.next.position == away.position);
    c.near("zero action reward", still.reward, -std::hypot(0.2 - 0.5, -0.3));
    envsim::TaskSpec rot{envsim::Family::rotated_dynamics, {0.5, 0.0}, std::numbers::pi / 2, 1, 0};
    auto rs = envsim::step(rot, envsim::reset(rot), {1.0, 0.0});
    c.near("rotated step x", rs.next.position[0], 0.0, 1e-12);
    c.near("rotated step y", rs.next.position[1], 0.1);
    c.near("oracle return", envsim::oracle_return(radial), -1.0);
    for (const auto& t : envsim::sample_tasks(envsim::Family::radial_goal, 8, 9))
      c.near("oracle return any angle", envsim::oracle_return(t), -1.0);
    for (const auto& t : envsim::sample_tasks(envsim::Family::rotated_dynamics, 8, 9))
      c.near("oracle return under rotation", envsim::oracle_return(t), -1.0);
  }

  // Replay.
  {
    replay::TaskBuffer b(0, 3);
    ndiff::Rng rng(301);
    b.add(random_tuple(rng));
    c.truth("one add, size 1", b.size() == 1);
    const auto first = b.at(0);
    for (int i = 0; i < 3; ++i) b.add(random_tuple(rng));
    c.truth("FIFO evicts first", b.size() == 3 && !(b.at(0) == first) && b.insertion_count() == 4);
    replay::SamplingConfig sc;
    sc.k_min = 1;
    replay::TaskBuffer one(0);
    one.add(first);
    auto ctx = replay::sample_context(one, sc, rng);
    c.truth("single-tuple buffer repeats", std::all_of(ctx.begin(), ctx.end(), [&](auto& t) { return t == first; }));
    ndiff::Rng r1(4), r2(4);
    c.truth("context sampling deterministic", replay::sample_context(b, sc, r1) == replay::sample_context(b, sc, r2));
  }

  // Embedding.
  {
    embed::EmbedConfig ec;
    ec.z_dim = 2;
    ec.aggregate_dim = 4;
    ec.hidden = 5;
    ec.hidden_layers = 1;
    ndiff::Rng rng(302);
    embed::EmbedNets nets(ec, rng);
    auto p = embed::prior(ec);
    c.truth("prior mean zero", p.mean == std::vector<double>(2, 0.0));
    c.near("KL(prior, prior)", ndiff::kl_diag_gaussians(p.as_gaussian(), DiagGaussian::standard(1, 2)), 0.0);
    c.truth("encode([]) is the prior", embed::encode(nets, {}) == p);
    auto c1 = random_tuple(rng), c2 = random_tuple(rng);
    c.near("encode commutes", belief_gap(embed::encode(nets, std::vector{c1, c2}), embed::encode(nets, std::vector{c2, c1})),
           0.0);
    c.near("update from prior", belief_gap(embed::belief_update(nets, p, c1), embed::encode(nets, std::vector{c1})), 0.0);

    const envsim::Transition t{{0.1, 0.2}, {0.5, -0.5}, -0.25, {0.15, 0.15}};
    force_output(nets.params, nets.reward_spec(), {t.reward, 0.0});
    force_output(nets.params, nets.state_spec(), {t.next_state[0], t.next_state[1], 0.0, 0.0});
    force_output(nets.params, nets.g_spec(), {0.0, 0.0, 0.0, 0.0});
    const Tensor z = Tensor::zeros(1, 2), s = Tensor::row({0.1, 0.2}), a = Tensor::row({0.5, -0.5});
    const Tensor s2 = Tensor::row({0.15, 0.15});
    c.near("reward decoder exact fit", ndiff::gaussian_log_prob(embed::decode_reward(nets, z, s, a, s2), Tensor::row({-0.25})),
           -kHalfLog2Pi);
    c.near("state decoder exact fit", ndiff::gaussian_log_prob(embed::decode_next_state(nets, z, s, a), s2),
           -2 * kHalfLog2Pi);
    std::vector<replay::ContextBatch> batches{{0, {t}, {}}};
    std::vector<Tensor> noise{Tensor::row({0.4, -1.2})};
    ndiff::Tape t1;
    c.near("embedding loss at prior", embed::embedding_loss(t1, nets, batches, noise).loss.value().item(), 3 * kHalfLog2Pi);
    force_output(nets.params, nets.g_spec(), {1.0, 1.0, 0.0, 0.0});
    ndiff::Tape t2;
    c.near("embedding loss with N(1,1) posterior", embed::embedding_loss(t2, nets, batches, noise).loss.value().item(),
           3 * kHalfLog2Pi + 1.0);
  }

  // Agent.
  {
    ndiff::Rng rng(303);
    agent::AgentNets nets(agent::AgentConfig{}, rng);
    std::vector<double> b(10, 0.3);
    auto m1 = agent::act(nets, {0.1, 0.2}, b, agent::ActMode::mean, rng);
    auto m2 = agent::act(nets, {0.1, 0.2}, b, agent::ActMode::mean, rng);
    c.truth("mean actions repeat", m1.action == m2.action);
    bool inside = true;
    for (int i = 0; i < 200; ++i) {
      auto sa = agent::act(nets, {0.5, -0.5}, b, agent::ActMode::sample, rng);
      inside = inside && std::abs(sa.action[0]) < 1.0 && std::abs(sa.action[1]) < 1.0;
    }
    c.truth("actions inside (-1, 1)", inside);
    force_output(nets.pi1, nets.pi1_spec(), std::vector<double>(10, 0.0));
    force_output(nets.pi2, nets.pi2_spec(), std::vector<double>(4, 0.0));
    auto st = agent::act(nets, {0.0, 0.0}, std::vector<double>(10, 0.0), agent::ActMode::mean, rng);
    c.near("log pi1 at w = 0", st.log_prob_w, -kHalfLog2Pi * 5);
  }
  {
    agent::AgentConfig ac;
    ac.belief_dim = 2;
    ac.w_dim = 1;
    ac.hidden = 4;
    ac.hidden_layers = 1;
    ndiff::Rng rng(304);
    agent::AgentNets nets(ac, rng);
    force_output(nets.v_target, nets.v_spec(), {2.0});
    const Tensor r = Tensor::row({1.0}), s = Tensor::row({0.1, 0.2}), b = Tensor::row({0.0, 0.0});
    const Tensor a = Tensor::row({0.3, 0.3});
    const Tensor y = agent::q_targets(nets, r, s, b, 0.99);
    c.near("Q target", y.item(), 2.98);
    force_output(nets.q, nets.q_spec(), {2.98});
    ndiff::Tape t1;
    c.near("Q loss exact", agent::q_critic_loss(t1, nets, t1.constant(s), t1.constant(b), t1.constant(a), y).value().item(),
           0.0);
    force_output(nets.q, nets.q_spec(), {0.0});
    ndiff::Tape t2;
    c.near("Q loss at Q = 0", agent::q_critic_loss(t2, nets, t2.constant(s), t2.constant(b), t2.constant(a), y).value().item(),
           2.98 * 2.98);

    force_output(nets.q, nets.q_spec(), {2.98});
    force_output(nets.pi1, nets.pi1_spec(), {0.0, 0.0});
    const Tensor yv = agent::v_targets(nets, s, b, b, 0.2);
    c.near("V target", yv.item(), 2.98 + 0.2 * kHalfLog2Pi);
    force_output(nets.v, nets.v_spec(), {yv.item()});
    ndiff::Tape t3;
    c.near("V loss exact", agent::v_critic_loss(t3, nets, t3.constant(s), t3.constant(b), yv).value().item(), 0.0);

    ndiff::Rng fresh(305);
    agent::AgentNets other(ac, fresh);
    auto mean = agent::act(other, {0.1, 0.2}, std::vector<double>{0.0, 0.0}, agent::ActMode::mean, fresh);
    c.near("V target at beta 0", agent::v_targets(other, s, b, b, 0.0).item(),
           agent::q_value(other, s, b, Tensor::row({mean.action[0], mean.action[1]})).item());
  }
  {
    ndiff::ParameterSet target, source;
    target.add("x", Tensor::row({0.0}));
    source.add("x", Tensor::row({1.0}));
    auto t = target;
    agent::polyak_update(t, source, 1.0);
    c.near("Polyak lambda 1", t.value("x").item(), 1.0);
    t = target;
    agent::polyak_update(t, source, 0.0);
    c.near("Polyak lambda 0", t.value("x").item(), 0.0);
    t = target;
    agent::polyak_update(t, source, 0.005);
    c.near("Polyak 0.005", t.value("x").item(), 0.005);
  }

  // Information bottleneck and summaries.
  {
    harness::DiscreteJoint j{2, 2, 2, {}, {}};
    const double pz[2] = {0.4, 0.6}, pxz[2][2] = {{0.3, 0.7}, {0.7, 0.3}}, pyz[2][2] = {{0.2, 0.9}, {0.8, 0.1}};
    j.p.resize(8);
    for (std::size_t x = 0; x < 2; ++x)
      for (std::size_t y = 0; y < 2; ++y)
        for (std::size_t z = 0; z < 2; ++z) j.p[(x * 2 + y) * 2 + z] = pz[z] * pxz[x][z] * pyz[y][z];
    j.q = {pxz[0][0], pxz[0][1], pxz[1][0], pxz[1][1]};
    auto bound = harness::verify_ib_bound(j);
    c.near("IB lhs, independent", bound.lhs, 0.0);
    c.near("IB rhs, independent", bound.rhs, 0.0);
    std::mt19937_64 rng(306);
    c.near("IB slack with exact q", harness::verify_ib_bound(harness::with_exact_q(harness::random_joint(3, 3, 3, rng))).slack,
           0.0);
    std::vector<meta::MetricRecord> one{{"r", "test", 0, 0, 0, 1, -2.5, std::nullopt, 1.0, 1}};
    auto s1 = harness::summarize(one);
    c.near("summary of one record", s1.at(0).mean, -2.5);
    c.near("std of one record", s1.at(0).std, 0.0);
    std::vector<meta::MetricRecord> two{{"r", "test", 0, 0, 0, 1, 1.0, std::nullopt, 1.0, 1},
                                        {"r", "test", 0, 0, 1, 1, 3.0, std::nullopt, 1.0, 1}};
    auto s2 = harness::summarize(two);
    c.near("mean of 1 and 3", s2.at(0).mean, 2.0);
    c.near("sample std of 1 and 3", s2.at(0).std, std::sqrt(2.0));
  }
  return c.outcome();
}

// ---------------------------------------------------------------------------

Outcome off_policy_independence() {
  ndiff::Rng init(401);
  embed::EmbedNets start(embed::EmbedConfig{}, init);
  std::vector<replay::TaskBuffer> buffers;
  for (int i = 0; i < 4; ++i) {
    buffers.emplace_back(i);
    for (auto& t : random_context(init, 80)) buffers.back().add(t);
  }
  agent::TrainConfig tc;
  tc.batch_tasks = 4;
  // Direct loss value, then a few joint training steps where the agent is
  // updated in between: phi and its reported loss must not move with theta.
  auto run = [&](std::uint64_t agent_seed) {
    ndiff::Rng agent_init(agent_seed);
    agent::AgentNets agent(agent::AgentConfig{}, agent_init);
    embed::EmbedNets nets = start;
    ndiff::Rng rng(77);
    auto batches = embed::sample_task_batches(buffers, 4, 8, tc.sampling, rng);
    std::vector<double> trace{embed::embedding_loss(nets, batches, rng)};
    for (int s = 0; s < 5; ++s) trace.push_back(*agent::train_step(agent, nets, buffers, tc, rng).embed);
    for (double v : ndiff::flatten(nets.params)) trace.push_back(v);
    return trace;
  };
  const auto ref = run(1);
  int identical = 0;
  for (std::uint64_t seed = 2; seed <= 6; ++seed) identical += run(seed) == ref;
  return {identical == 5, fmt("%d of 5 policy randomizations bit-identical (%zu values each)", identical, ref.size())};
}

// ---------------------------------------------------------------------------

Outcome ib_bound() {
  const auto t0 = std::chrono::steady_clock::now();
  auto r = harness::run_ib_trials(10000, 501);
  const double secs = seconds_since(t0);
  return {r.min_slack >= -1e-12 && r.max_kl_gap <= 1e-12 && secs < 60.0,
          fmt("%zu joints, min slack %.3g, max |slack - E_z KL| %.3g, %.1f s", r.trials, r.min_slack, r.max_kl_gap, secs)};
}

// ---------------------------------------------------------------------------

struct Context {
  fs::path work;
  harness::ExperimentConfig reference;
  harness::ExperimentConfig ablation;
  std::optional<meta::Checkpoint> radial;
};

double mean_of(const std::vector<double>& v, std::size_t from, std::size_t to) {
  double s = 0.0;
  for (std::size_t i = from; i < to; ++i) s += v[i];
  return s / static_cast<double>(to - from);
}

Outcome meta_training(Context& ctx) {
  auto cfg = ctx.reference.train;
  meta::MetricsSink sink(ctx.work / "reference_train.jsonl");
  auto result = meta::meta_train(cfg, sink, harness::config_echo(ctx.reference));
  meta::save_checkpoint(ctx.work / "reference.ckpt", result.checkpoint);
  ctx.radial = result.checkpoint;
  const double first = result.final_eval.at(0);
  const double minutes = result.seconds / 60.0;
  return {first >= -4.0 && minutes <= 30.0,
          fmt("final held-out first-episode return %.3f over %d tasks (threshold -4.0), pretrain held-out loss "
              "%.1f -> %.1f, %.1f min",
              first, cfg.n_eval_tasks, result.pretrain.initial_heldout_loss, result.pretrain.final_heldout_loss, minutes)};
}

const meta::Checkpoint& radial_checkpoint(Context& ctx) {
  if (!ctx.radial) {
    const auto path = ctx.work / "reference.ckpt";
    if (!fs::exists(path)) throw elue::Error("no reference checkpoint; run criterion 6 first");
    ctx.radial = meta::load_checkpoint(path);
  }
  return *ctx.radial;
}

Outcome belief_adaptation(Context& ctx) {
  const auto& ckpt = radial_checkpoint(ctx);
  const auto tasks = envsim::sample_tasks(envsim::Family::radial_goal, 5, ctx.reference.test_task_seed, 2000);
  meta::MetaTestConfig base = ctx.reference.test;
  base.total_iterations = 0;
  base.initial_sampling_steps = 2 * base.env.horizon;
  int wins = 0;
  bool frozen = true;
  std::string per;
  for (const auto& t : tasks) {
    meta::MetricsSink a, b;
    auto inf_cfg = base;
    inf_cfg.mode = meta::TestMode::inference;
    auto nbu_cfg = base;
    nbu_cfg.mode = meta::TestMode::no_bel_update;
    auto inf = meta::meta_test(inf_cfg, ckpt, t, a);
    auto nbu = meta::meta_test(nbu_cfg, ckpt, t, b);
    frozen = frozen && inf.gradient_steps == 0 && nbu.gradient_steps == 0 &&
             meta::serialize_checkpoint(inf.final_state) == meta::serialize_checkpoint(ckpt) &&
             meta::serialize_checkpoint(nbu.final_state) == meta::serialize_checkpoint(ckpt);
    const double ri = inf.episode_returns.at(1), rn = nbu.episode_returns.at(1);
    wins += ri > rn;
    per += fmt(" %.2f/%.2f", ri, rn);
  }
  return {wins >= 4 && frozen,
          fmt("inference beats no_bel_update at episode 2 on %d of 5 tasks (inference/no_bel_update:%s); parameters %s",
              wins, per.c_str(), frozen ? "bit-exact" : "CHANGED")};
}

// Least-squares slope of y on x and its t statistic.
std::pair<double, double> slope_t(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  double sse = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - my - slope * (x[i] - mx);
    sse += e * e;
  }
  const double se = std::sqrt(sse / (n - 2) / sxx);
  if (se == 0.0) return {slope, slope > 0 ? INFINITY : 0.0};
  return {slope, slope / se};
}

Outcome mode_ordering(Context& ctx) {
  const auto& ckpt = radial_checkpoint(ctx);
  const auto tasks = envsim::sample_tasks(envsim::Family::shifted_goal, 5, ctx.reference.test_task_seed, 3000);
  int ordered = 0;
  std::string per;
  // Inference returns, centred per seed so task difficulty does not masquerade as a trend.
  std::vector<double> xs, ys;
  for (int seed = 1; seed <= 5; ++seed) {
    const auto& task = tasks[seed - 1];
    double final_return[3];
    const meta::TestMode modes[3] = {meta::TestMode::bel_grad, meta::TestMode::no_bel_grad, meta::TestMode::inference};
    for (int m = 0; m < 3; ++m) {
      auto cfg = ctx.reference.test;
      cfg.mode = modes[m];
      cfg.seed = static_cast<std::uint64_t>(seed);
      meta::MetricsSink sink;
      auto out = meta::meta_test(cfg, ckpt, task, sink);
      const auto& r = out.episode_returns;
      const std::size_t tail = std::min<std::size_t>(3, r.size());
      final_return[m] = mean_of(r, r.size() - tail, r.size());
      if (modes[m] == meta::TestMode::inference) {
        const double centre = mean_of(r, 0, r.size());
        for (std::size_t i = 0; i < r.size(); ++i) {
          xs.push_back(static_cast<double>(out.episode_env_steps[i]));
          ys.push_back(r[i] - centre);
        }
      }
    }
    const bool ok = final_return[0] >= final_return[1] && final_return[1] >= final_return[2];
    ordered += ok;
    per += fmt(" [%.2f %.2f %.2f]", final_return[0], final_return[1], final_return[2]);
  }
  const auto [slope, t] = slope_t(xs, ys);
  const bool flat = t < 2.0;
  return {ordered >= 3 && flat,
          fmt("ordering bel_grad >= no_bel_grad >= inference holds in %d of 5 seeds (final returns:%s); inference "
              "slope %.3g per step, t = %.2f",
              ordered, per.c_str(), slope, t)};
}

Outcome embedding_ablation(Context& ctx) {
  auto train_variant = [&](meta::Variant v) {
    auto cfg = ctx.ablation.train;
    cfg.variant = v;
    meta::MetricsSink sink(ctx.work / (std::string("ablation_") + std::string(meta::to_string(v)) + ".jsonl"));
    return meta::meta_train(cfg, sink).checkpoint;
  };
  const auto elue_ckpt = train_variant(meta::Variant::elue);
  const auto noemb_ckpt = train_variant(meta::Variant::no_emb);
  const auto tasks = envsim::sample_tasks(envsim::Family::rotated_dynamics, 5, ctx.ablation.test_task_seed, 4000);
  int wins = 0;
  std::string per;
  for (int seed = 1; seed <= 5; ++seed) {
    auto cfg = ctx.ablation.test;
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.mode = meta::TestMode::inference;
    meta::MetricsSink a, b;
    auto with = meta::meta_test(cfg, elue_ckpt, tasks[seed - 1], a);
    cfg.mode = meta::TestMode::no_emb;
    auto without = meta::meta_test(cfg, noemb_ckpt, tasks[seed - 1], b);
    const double rw = with.episode_returns.at(2), ro = without.episode_returns.at(2);
    wins += rw > ro;
    per += fmt(" %.2f/%.2f", rw, ro);
  }
  return {wins >= 3, fmt("ELUE beats no_emb at episode 3 in %d of 5 seeds (elue/no_emb:%s)", wins, per.c_str())};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(Context& ctx) {
  // A small train + test through the CLI, twice each.
  const fs::path dir = ctx.work / "determinism";
  fs::create_directories(dir);
  const auto cfg_path = dir / "small.ini";
  {
    std::ofstream f(cfg_path);
    f << "[experiment]\nseed = 5\n[env]\nn_train_tasks = 3\nn_eval_tasks = 2\n[embed]\npretrain_steps = 20\n"
         "[train]\ntasks_per_iteration = 2\ntraining_steps = 5\ntotal_iterations = 3\ninitial_sampling_steps = 64\n"
         "eval_every = 1\n[test]\nmode = bel_grad\nn_tasks = 2\ntraining_steps = 5\ntotal_iterations = 2\n";
  }
  auto cli = [](std::vector<std::string> args) {
    args.insert(args.begin(), "elue");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    return harness::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  };
  std::vector<std::string> files;
  int failures = 0;
  for (int run = 0; run < 2; ++run) {
    const auto tag = std::to_string(run);
    failures += cli({"train", "--config", cfg_path.string(), "--out", (dir / ("m" + tag + ".ckpt")).string(),
                     "--metrics", (dir / ("train" + tag + ".jsonl")).string()}) != 0;
    failures += cli({"test", "--config", cfg_path.string(), "--checkpoint", (dir / "m0.ckpt").string(), "--metrics",
                     (dir / ("test" + tag + ".jsonl")).string()}) != 0;
  }
  const auto t0 = slurp(dir / "train0.jsonl"), t1 = slurp(dir / "train1.jsonl");
  const auto e0 = slurp(dir / "test0.jsonl"), e1 = slurp(dir / "test1.jsonl");
  const auto c0 = slurp(dir / "m0.ckpt"), c1 = slurp(dir / "m1.ckpt");
  const bool same = !t0.empty() && !e0.empty() && t0 == t1 && e0 == e1 && c0 == c1;
  return {failures == 0 && same, fmt("train metrics %zu bytes, test metrics %zu bytes, checkpoints %s; %s", t0.size(),
                                     e0.size(), c0 == c1 ? "identical" : "differ",
                                     same ? "bit-identical" : "NOT identical")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string only, work = "acceptance_work";
  std::string reference = std::string(ELUE_SOURCE_DIR) + "/configs/reference.ini";
  std::string ablation = std::string(ELUE_SOURCE_DIR) + "/configs/ablation.ini";
  app.add_option("--only", only, "comma-separated criterion numbers");
  app.add_option("--work", work, "directory for checkpoints and metrics");
  app.add_option("--config", reference, "reference config");
  app.add_option("--ablation-config", ablation, "config of the embedding ablation");
  CLI11_PARSE(app, argc, argv);

  std::set<int> selected;
  std::stringstream ss(only);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) selected.insert(std::stoi(item));
  auto wanted = [&](int n) { return selected.empty() || selected.count(n); };

  Context ctx;
  ctx.work = work;
  fs::create_directories(ctx.work);
  try {
    ctx.reference = harness::load_config(reference);
    ctx.ablation = harness::load_config(ablation);
  } catch (const elue::Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  }

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"encoder invariance", encoder_invariance},
      {"gradient certification", gradient_certification},
      {"analytic values", analytic_values},
      {"off-policy independence", off_policy_independence},
      {"IB bound", ib_bound},
      {"meta-training", [&] { return meta_training(ctx); }},
      {"belief adaptation", [&] { return belief_adaptation(ctx); }},
      {"mode ordering", [&] { return mode_ordering(ctx); }},
      {"embedding ablation", [&] { return embedding_ablation(ctx); }},
      {"determinism", [&] { return determinism(ctx); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i + 1);
    if (!wanted(n)) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2d %-24s %s  %s (%.0f s)\n", n, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
