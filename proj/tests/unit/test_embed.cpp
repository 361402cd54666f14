#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "../support/gradcheck.hpp"
#include "../support/oracle_mlp.hpp"
#include "elue/agent/sac_ib.hpp"
#include "elue/embed/embedding.hpp"
#include "elue/error.hpp"

using namespace elue;
using namespace elue::embed;
using elue::testing::oracle_forward;
using ndiff::Var;

namespace {

EmbedConfig tiny() {
  EmbedConfig c;
  c.z_dim = 2;
  c.aggregate_dim = 4;
  c.hidden = 5;
  c.hidden_layers = 1;
  return c;
}

Transition random_tuple(Rng& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  return {{u(rng), u(rng)}, {u(rng), u(rng)}, -std::abs(u(rng)), {u(rng), u(rng)}};
}

std::vector<Transition> random_context(Rng& rng, std::size_t n) {
  std::vector<Transition> c;
  for (std::size_t i = 0; i < n; ++i) c.push_back(random_tuple(rng));
  return c;
}

double max_diff(const BeliefState& a, const BeliefState& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.mean.size(); ++i) {
    d = std::max(d, std::abs(a.mean[i] - b.mean[i]));
    d = std::max(d, std::abs(a.log_std[i] - b.log_std[i]));
  }
  return d;
}

// Zeroes the last layer of a spec and sets its bias.
void force_output(EmbedNets& nets, const ndiff::MlpSpec& spec, const std::vector<double>& bias) {
  const std::size_t l = spec.layer_count() - 1;
  auto& w = nets.params.value(spec.weight_name(l));
  w = Tensor::zeros(w.rows(), w.cols());
  auto& b = nets.params.value(spec.bias_name(l));
  for (std::size_t j = 0; j < bias.size(); ++j) b(0, j) = bias[j];
}

}  // namespace

TEST(Prior, StandardNormalIndependentOfPhi) {
  auto p = prior(5, 64);
  EXPECT_EQ(p.mean, std::vector<double>(5, 0.0));
  EXPECT_EQ(p.log_std, std::vector<double>(5, 0.0));
  EXPECT_EQ(p.count, 0u);
  EXPECT_EQ(ndiff::kl_diag_gaussians(p.as_gaussian(), ndiff::DiagGaussian::standard(1, 5)), 0.0);
  Rng r1(1), r2(2);
  EmbedNets a(EmbedConfig{}, r1), b(EmbedConfig{}, r2);
  EXPECT_EQ(encode(a, {}), encode(b, {}));
  EXPECT_EQ(encode(a, {}), prior(EmbedConfig{}));
}

TEST(Encode, PermutationInvariant) {
  Rng rng(3);
  EmbedNets nets(EmbedConfig{}, rng);
  for (int trial = 0; trial < 20; ++trial) {
    auto ctx = random_context(rng, 1 + rng() % 64);
    const auto base = encode(nets, ctx);
    for (int s = 0; s < 5; ++s) {
      std::shuffle(ctx.begin(), ctx.end(), rng);
      EXPECT_LT(max_diff(encode(nets, ctx), base), 1e-9);
    }
  }
}

TEST(Encode, MatchesStraightLineOracle) {
  Rng rng(4);
  EmbedNets nets(EmbedConfig{}, rng);
  const Transition c = random_tuple(rng);
  const auto f = c.features();
  auto agg = oracle_forward(nets.f_spec(), nets.params, {f.begin(), f.end()});
  auto head = oracle_forward(nets.g_spec(), nets.params, agg);
  const auto b = encode(nets, std::vector<Transition>{c});
  ASSERT_EQ(b.mean.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_NEAR(b.mean[i], head[i], 1e-12);
    EXPECT_NEAR(b.log_std[i], elue::testing::clamp_ls(head[5 + i]), 1e-12);
  }
  for (std::size_t i = 0; i < agg.size(); ++i) EXPECT_NEAR(b.aggregate[i], agg[i], 1e-12);
}

TEST(Encode, RejectsMalformedRows) {
  Rng rng(5);
  EmbedNets nets(EmbedConfig{}, rng);
  EXPECT_THROW(encode_features(nets, Tensor::zeros(3, 6)), ShapeError);
}

TEST(BeliefUpdate, FoldEqualsBatchEncode) {
  Rng rng(6);
  EmbedNets nets(EmbedConfig{}, rng);
  auto ctx = random_context(rng, 9);
  EXPECT_LT(max_diff(belief_update(nets, prior(nets.config()), ctx[0]), encode(nets, {ctx.begin(), 1})), 1e-12);
  BeliefState b = prior(nets.config());
  for (const auto& t : ctx) b = belief_update(nets, b, t);
  EXPECT_EQ(b.count, 9u);
  EXPECT_LT(max_diff(b, encode(nets, ctx)), 1e-9);
}

TEST(BeliefUpdate, CostIndependentOfCount) {
  Rng rng(7);
  EmbedNets nets(EmbedConfig{}, rng);
  const Transition t = random_tuple(rng);
  BeliefState small = prior(nets.config());
  small = belief_update(nets, small, t);
  BeliefState big = small;
  big.count = 10000;
  auto time = [&](const BeliefState& b) {
    const int reps = 2000;
    auto best = std::chrono::nanoseconds::max();
    for (int round = 0; round < 5; ++round) {
      auto t0 = std::chrono::steady_clock::now();
      std::size_t sink = 0;
      for (int i = 0; i < reps; ++i) sink += belief_update(nets, b, t).mean.size();
      EXPECT_EQ(sink, 5u * reps);
      best = std::min(best, std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0));
    }
    return static_cast<double>(best.count());
  };
  const double a = time(small), b = time(big);
  EXPECT_LT(std::max(a, b) / std::min(a, b), 2.0);
}

TEST(Decoders, UnitVarianceExactPrediction) {
  Rng rng(8);
  EmbedNets nets(EmbedConfig{}, rng);
  force_output(nets, nets.reward_spec(), {-0.3, 0.0});
  force_output(nets, nets.state_spec(), {0.2, 0.4, 0.0, 0.0});
  Tensor z = Tensor::zeros(1, 5), s = Tensor::row({0.1, 0.1}), a = Tensor::row({1.0, 0.0});
  Tensor s2 = Tensor::row({0.2, 0.4});
  EXPECT_NEAR(ndiff::gaussian_log_prob(decode_reward(nets, z, s, a, s2), Tensor::row({-0.3})), -0.9189385332046727,
              1e-12);
  EXPECT_NEAR(ndiff::gaussian_log_prob(decode_next_state(nets, z, s, a), s2), -1.8378770664093453, 1e-12);
}

TEST(Decoders, FiniteFarFromPrior) {
  Rng rng(9);
  EmbedNets nets(EmbedConfig{}, rng);
  Tensor z = Tensor::row({3.0, -3.0, 3.0, 3.0, -3.0});
  auto d = decode_reward(nets, z, Tensor::row({0.5, 0.5}), Tensor::row({1, 1}), Tensor::row({0.6, 0.6}));
  EXPECT_TRUE(std::isfinite(d.mean[0]));
  EXPECT_GE(d.log_std[0], ndiff::kLogStdMin);
  EXPECT_LE(d.log_std[0], ndiff::kLogStdMax);
}

TEST(Decoders, BatchPermutationPermutesOutputs) {
  Rng rng(10);
  EmbedNets nets(EmbedConfig{}, rng);
  Tensor z = Tensor::zeros(3, 5);
  for (auto& v : z.values()) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  Tensor s = Tensor::zeros(3, 2), a = Tensor::zeros(3, 2);
  for (auto& v : s.values()) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  for (auto& v : a.values()) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  auto out = decode_next_state(nets, z, s, a);
  auto swap_rows = [](Tensor t) {
    for (std::size_t j = 0; j < t.cols(); ++j) std::swap(t(0, j), t(2, j));
    return t;
  };
  auto perm = decode_next_state(nets, swap_rows(z), swap_rows(s), swap_rows(a));
  EXPECT_EQ(perm.mean, swap_rows(out.mean));
  EXPECT_EQ(perm.log_std, swap_rows(out.log_std));
}

TEST(Decoders, GradientWithRespectToZ) {
  Rng rng(11);
  EmbedNets nets(tiny(), rng);
  ndiff::ParameterSet zp;
  zp.add("z", Tensor::row({0.3, -0.7}));
  Tensor s = Tensor::row({0.1, -0.2}), a = Tensor::row({0.5, 0.5}), s2 = Tensor::row({0.15, -0.15});
  auto taped = [&](ndiff::Tape& tape) {
    Var z = tape.parameter(zp, "z");
    auto r = ndiff::gaussian_head(ndiff::mlp_forward(
        tape, nets.reward_spec(), nets.params,
        ndiff::concat_cols({tape.constant(s), tape.constant(a), tape.constant(s2), z})));
    auto st = ndiff::gaussian_head(
        ndiff::mlp_forward(tape, nets.state_spec(), nets.params, ndiff::concat_cols({tape.constant(s), tape.constant(a), z})));
    return ndiff::sum(ndiff::gaussian_log_prob_rows(r, tape.constant(Tensor::row({-0.4})))) +
           ndiff::sum(ndiff::gaussian_log_prob_rows(st, tape.constant(s2)));
  };
  ndiff::Tape tape;
  tape.backward(taped(tape));
  auto plain = [&] {
    Tensor z = zp.value("z");
    return ndiff::gaussian_log_prob(decode_reward(nets, z, s, a, s2), Tensor::row({-0.4})) +
           ndiff::gaussian_log_prob(decode_next_state(nets, z, s, a), s2);
  };
  auto check = elue::testing::check_gradients(zp, tape.gradients(zp), plain);
  EXPECT_LT(check.max_rel_error, 1e-6) << check.worst;
}

TEST(EmbeddingLoss, PerfectUnitVarianceFitAtPrior) {
  Rng rng(12);
  EmbedConfig c = tiny();
  EmbedNets nets(c, rng);
  const Transition t{{0.1, 0.2}, {0.5, -0.5}, -0.25, {0.15, 0.15}};
  force_output(nets, nets.reward_spec(), {t.reward, 0.0});
  force_output(nets, nets.state_spec(), {t.next_state[0], t.next_state[1], 0.0, 0.0});
  force_output(nets, nets.g_spec(), {0.0, 0.0, 0.0, 0.0});
  std::vector<ContextBatch> batches{{0, {t}, {}}};
  std::vector<Tensor> noise{Tensor::row({0.4, -1.2})};
  ndiff::Tape tape;
  EXPECT_NEAR(embedding_loss(tape, nets, batches, noise).loss.value().item(), 3 * 0.9189385332046727, 1e-9);

  force_output(nets, nets.g_spec(), {1.0, 1.0, 0.0, 0.0});
  ndiff::Tape tape2;
  auto terms = embedding_loss(tape2, nets, batches, noise);
  EXPECT_NEAR(terms.loss.value().item(), 3 * 0.9189385332046727 + 1.0, 1e-9);
  EXPECT_NEAR(terms.kl, 1.0, 1e-12);
}

TEST(EmbeddingLoss, MatchesTermByTermOracle) {
  Rng rng(13);
  EmbedConfig c = tiny();
  EmbedNets nets(c, rng);
  std::vector<ContextBatch> batches;
  for (std::size_t k : {1, 3, 6}) batches.push_back({0, random_context(rng, k), {}});
  auto noise = draw_posterior_noise(batches.size(), c.z_dim, rng);

  double total = 0.0;
  for (std::size_t i = 0; i < batches.size(); ++i) {
    std::vector<double> agg(c.aggregate_dim, 0.0);
    for (const auto& t : batches[i].context) {
      auto f = t.features();
      auto fr = oracle_forward(nets.f_spec(), nets.params, {f.begin(), f.end()});
      for (std::size_t j = 0; j < agg.size(); ++j) agg[j] += fr[j];
    }
    auto head = oracle_forward(nets.g_spec(), nets.params, agg);
    std::vector<double> z(c.z_dim);
    double kl = 0.0;
    for (std::size_t j = 0; j < c.z_dim; ++j) {
      const double m = head[j], ls = elue::testing::clamp_ls(head[c.z_dim + j]);
      z[j] = m + std::exp(ls) * noise[i][j];
      kl += 0.5 * (std::exp(2 * ls) + m * m - 1) - ls;
    }
    double ll = 0.0;
    for (const auto& t : batches[i].context) {
      std::vector<double> rin{t.state[0], t.state[1], t.action[0], t.action[1], t.next_state[0], t.next_state[1]};
      rin.insert(rin.end(), z.begin(), z.end());
      auto rh = oracle_forward(nets.reward_spec(), nets.params, rin);
      ll += elue::testing::oracle_normal_log_prob({rh[0]}, {rh[1]}, {t.reward});
      std::vector<double> sin{t.state[0], t.state[1], t.action[0], t.action[1]};
      sin.insert(sin.end(), z.begin(), z.end());
      auto sh = oracle_forward(nets.state_spec(), nets.params, sin);
      ll += elue::testing::oracle_normal_log_prob({sh[0], sh[1]}, {sh[2], sh[3]}, {t.next_state[0], t.next_state[1]});
    }
    total += kl - ll;
  }
  ndiff::Tape tape;
  auto terms = embedding_loss(tape, nets, batches, noise);
  EXPECT_NEAR(terms.loss.value().item(), total / 3.0, 1e-9);
}

TEST(EmbeddingLoss, GradientMatchesFiniteDifferences) {
  Rng rng(14);
  EmbedNets nets(tiny(), rng);
  std::vector<ContextBatch> batches;
  for (std::size_t k : {2, 5}) batches.push_back({0, random_context(rng, k), {}});
  auto noise = draw_posterior_noise(batches.size(), 2, rng);
  ndiff::Tape tape;
  tape.backward(embedding_loss(tape, nets, batches, noise).loss);
  auto grads = tape.gradients(nets.params);
  auto check = elue::testing::check_gradients(nets.params, grads, [&] {
    ndiff::Tape t;
    return embedding_loss(t, nets, batches, noise).loss.value().item();
  });
  EXPECT_LT(check.max_rel_error, 1e-4) << check.worst;
  EXPECT_EQ(check.checked, nets.params.scalar_count());
}

TEST(EmbeddingLoss, EmptyContextIsAnError) {
  Rng rng(15);
  EmbedNets nets(tiny(), rng);
  std::vector<ContextBatch> batches{{0, {}, {}}};
  EXPECT_THROW(embedding_loss(nets, batches, rng), DataError);
}

TEST(EmbeddingLoss, KlNeverNegative) {
  Rng rng(16);
  for (int trial = 0; trial < 20; ++trial) {
    EmbedNets nets(tiny(), rng);
    std::vector<ContextBatch> batches{{0, random_context(rng, 1 + rng() % 10), {}}};
    auto noise = draw_posterior_noise(1, 2, rng);
    ndiff::Tape tape;
    EXPECT_GE(embedding_loss(tape, nets, batches, noise).kl, 0.0);
  }
}

TEST(EmbeddingLoss, IndependentOfPolicyParameters) {
  Rng init(17);
  EmbedNets nets(EmbedConfig{}, init);
  std::vector<replay::TaskBuffer> buffers;
  for (int i = 0; i < 3; ++i) {
    buffers.emplace_back(i);
    for (auto& t : random_context(init, 40)) buffers.back().add(t);
  }
  auto value = [&](std::uint64_t agent_seed) {
    Rng agent_rng(agent_seed);
    agent::AgentNets agent(agent::AgentConfig{}, agent_rng);
    (void)agent;
    Rng rng(99);
    auto batches = sample_task_batches(buffers, 2, 4, {}, rng);
    return embedding_loss(nets, batches, rng);
  };
  const double ref = value(1);
  for (std::uint64_t s = 2; s < 6; ++s) EXPECT_EQ(value(s), ref);
}

TEST(Pretrain, ZeroStepsLeavesPhiUnchanged) {
  Rng rng(18);
  EmbedNets nets(tiny(), rng);
  auto before = nets.params;
  std::vector<replay::TaskBuffer> buffers(1, replay::TaskBuffer(0));
  for (auto& t : random_context(rng, 10)) buffers[0].add(t);
  PretrainOptions opt;
  opt.sampling.k_min = 1;
  pretrain_embedding(nets, buffers, 0, opt, rng);
  EXPECT_EQ(nets.params, before);
  std::vector<replay::TaskBuffer> empty(1, replay::TaskBuffer(0));
  EXPECT_THROW(pretrain_embedding(nets, empty, 1, opt, rng), DataError);
}

TEST(BeliefBytes, RoundTrip) {
  Rng rng(19);
  EmbedNets nets(EmbedConfig{}, rng);
  auto b = encode(nets, random_context(rng, 7));
  auto bytes = encode_belief(b);
  EXPECT_EQ(decode_belief(bytes, 0, 5, 64), b);
}
