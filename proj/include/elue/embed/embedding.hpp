#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "elue/envsim/point_nav.hpp"
#include "elue/ndiff/adam.hpp"
#include "elue/ndiff/gaussian.hpp"
#include "elue/ndiff/mlp.hpp"
#include "elue/replay/buffer.hpp"

namespace elue::embed {

using envsim::Transition;
using ndiff::DiagGaussian;
using ndiff::ParameterSet;
using ndiff::Rng;
using ndiff::Tensor;
using replay::ContextBatch;

struct EmbedConfig {
  std::size_t state_dim = 2;
  std::size_t action_dim = 2;
  std::size_t z_dim = 5;
  std::size_t aggregate_dim = 64;
  std::size_t hidden = 64;
  std::size_t hidden_layers = 2;
  ndiff::Activation activation = ndiff::Activation::relu;
  /// Floor on the decoders' log_std. Without it the deterministic next-state
  /// term sharpens without bound and drowns the reward term's task signal.
  double decoder_log_std_min = -3.0;

  std::size_t tuple_width() const { return 2 * state_dim + action_dim + 1; }
  friend bool operator==(const EmbedConfig&, const EmbedConfig&) = default;
};

/// Deep-set encoder g(sum f(c)) plus reward and next-state decoders. All
/// weights live in one parameter set (phi).
class EmbedNets {
 public:
  EmbedNets(const EmbedConfig& config, Rng& rng);
  EmbedNets(const EmbedConfig& config, ParameterSet params);

  const EmbedConfig& config() const noexcept { return config_; }
  const ndiff::MlpSpec& f_spec() const noexcept { return f_; }
  const ndiff::MlpSpec& g_spec() const noexcept { return g_; }
  const ndiff::MlpSpec& reward_spec() const noexcept { return reward_; }
  const ndiff::MlpSpec& state_spec() const noexcept { return state_; }

  ParameterSet params;

 private:
  void build_specs();

  EmbedConfig config_;
  ndiff::MlpSpec f_, g_, reward_, state_;
};

/// Gaussian belief over z together with the running deep-set aggregate.
struct BeliefState {
  std::vector<double> aggregate;
  std::uint64_t count = 0;
  std::vector<double> mean;
  std::vector<double> log_std;

  /// mean followed by log_std; the belief input of the agent networks.
  std::vector<double> features() const;
  double mean_std() const;
  DiagGaussian as_gaussian() const;

  friend bool operator==(const BeliefState&, const BeliefState&) = default;
};

/// Standard-normal prior with an empty aggregate.
BeliefState prior(std::size_t z_dim, std::size_t aggregate_dim);
inline BeliefState prior(const EmbedConfig& c) { return prior(c.z_dim, c.aggregate_dim); }

/// Context rows [s, a, r, s'] in canonical (lexicographic) order.
Tensor context_features(std::span<const Transition> context);

/// Posterior from a context set; the empty set maps to the prior.
BeliefState encode(const EmbedNets& nets, std::span<const Transition> context);
/// Same from raw k x tuple_width rows, summed in the given row order.
BeliefState encode_features(const EmbedNets& nets, const Tensor& rows);
/// Adds one tuple to the aggregate and re-applies the head; O(1) in count.
BeliefState belief_update(const EmbedNets& nets, const BeliefState& belief, const Transition& t);
/// Head applied to a given aggregate.
BeliefState belief_from_aggregate(const EmbedNets& nets, std::vector<double> aggregate, std::uint64_t count);

/// Per-row Gaussian over r given (s, a, s', z); all inputs have one row per sample.
DiagGaussian decode_reward(const EmbedNets& nets, const Tensor& z, const Tensor& s, const Tensor& a,
                           const Tensor& s_next);
/// Per-row Gaussian over s' given (s, a, z).
DiagGaussian decode_next_state(const EmbedNets& nets, const Tensor& z, const Tensor& s, const Tensor& a);

/// One standard-normal row per batch for the reparameterized posterior sample.
std::vector<Tensor> draw_posterior_noise(std::size_t batches, std::size_t z_dim, Rng& rng);

struct EmbeddingLossTerms {
  ndiff::Var loss;
  double nll = 0.0;  // mean over batches
  double kl = 0.0;   // mean over batches
};

/// Negative ELBO averaged over batches, recorded on `tape`. The loss reads
/// only the batch contexts and phi, never agent parameters.
EmbeddingLossTerms embedding_loss(ndiff::Tape& tape, const EmbedNets& nets, std::span<const ContextBatch> batches,
                                  std::span<const Tensor> noise);
/// Value-only form; draws one posterior noise row per batch from `rng`.
double embedding_loss(const EmbedNets& nets, std::span<const ContextBatch> batches, Rng& rng);

/// One Adam step on the embedding loss; returns the pre-step loss.
double embedding_step(EmbedNets& nets, std::span<const ContextBatch> batches, Rng& rng,
                      const ndiff::AdamConfig& adam);

struct PretrainOptions {
  replay::SamplingConfig sampling;
  std::size_t batch_tasks = 8;
  ndiff::AdamConfig adam;
};

struct PretrainResult {
  double initial_heldout_loss = 0.0;
  double final_heldout_loss = 0.0;
};

/// Samples `batch_tasks` buffers without replacement from `buffers`; with
/// targets == 0 only the contexts are drawn.
std::vector<ContextBatch> sample_task_batches(std::span<const replay::TaskBuffer> buffers, std::size_t batch_tasks,
                                              std::size_t targets, const replay::SamplingConfig& sampling, Rng& rng);

/// `steps` Adam steps on random context batches. A held-out batch set with
/// fixed noise is drawn first and scored before and after.
PretrainResult pretrain_embedding(EmbedNets& nets, std::span<const replay::TaskBuffer> buffers, std::size_t steps,
                                  const PretrainOptions& options, Rng& rng);

/// Flat f64 encoding of (count, aggregate, mean, log_std).
std::string encode_belief(const BeliefState& b);
BeliefState decode_belief(std::string_view bytes, std::uint64_t offset, std::size_t z_dim, std::size_t aggregate_dim);

}  // namespace elue::embed
