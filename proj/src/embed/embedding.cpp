#include "elue/embed/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "elue/error.hpp"
#include "elue/ndiff/segment.hpp"

namespace elue::embed {

using ndiff::MlpSpec;
using ndiff::Tape;
using ndiff::Var;

namespace {

std::vector<std::size_t> hidden_widths(const EmbedConfig& c, std::size_t in, std::size_t out) {
  std::vector<std::size_t> w{in};
  for (std::size_t i = 0; i < c.hidden_layers; ++i) w.push_back(c.hidden);
  w.push_back(out);
  return w;
}

void check_config(const EmbedConfig& c) {
  if (c.state_dim != 2 || c.action_dim != 2) throw ConfigError("embed: point tasks need state_dim = action_dim = 2");
  if (c.z_dim == 0 || c.aggregate_dim == 0 || c.hidden == 0) throw ConfigError("embed: widths must be positive");
  if (!(c.decoder_log_std_min >= ndiff::kLogStdMin && c.decoder_log_std_min < ndiff::kLogStdMax))
    throw ConfigError("embed: decoder_log_std_min must lie in [-10, 2)");
}

DiagGaussian split_head(const Tensor& head) {
  const std::size_t d = head.cols() / 2;
  return DiagGaussian(ndiff::column_slice(head, 0, d), ndiff::column_slice(head, d, 2 * d));
}

DiagGaussian decoder_head(const EmbedNets& nets, const Tensor& head) {
  DiagGaussian d = split_head(head);
  for (auto& v : d.log_std.values()) v = std::max(v, nets.config().decoder_log_std_min);
  return d;
}

ndiff::GaussianVar decoder_head(const EmbedNets& nets, Var head) {
  auto d = ndiff::gaussian_head(head);
  d.log_std = ndiff::clamp(d.log_std, nets.config().decoder_log_std_min, ndiff::kLogStdMax);
  return d;
}

}  // namespace

EmbedNets::EmbedNets(const EmbedConfig& config, Rng& rng) : config_(config) {
  check_config(config_);
  build_specs();
  for (const MlpSpec* s : {&f_, &g_, &reward_, &state_}) ndiff::init_mlp(params, *s, rng);
}

EmbedNets::EmbedNets(const EmbedConfig& config, ParameterSet p) : params(std::move(p)), config_(config) {
  check_config(config_);
  build_specs();
  for (const MlpSpec* s : {&f_, &g_, &reward_, &state_}) {
    for (std::size_t l = 0; l < s->layer_count(); ++l) {
      if (!params.contains(s->weight_name(l)) || !params.contains(s->bias_name(l)))
        throw FormatError("embed: parameter set lacks " + s->weight_name(l));
      const auto& w = params.value(s->weight_name(l));
      if (w.rows() != s->widths[l] || w.cols() != s->widths[l + 1])
        throw ShapeError("embed: " + s->weight_name(l) + " has shape " + ndiff::shape_string(w.shape()));
    }
  }
}

void EmbedNets::build_specs() {
  const auto& c = config_;
  f_ = {"f", hidden_widths(c, c.tuple_width(), c.aggregate_dim), c.activation, ndiff::Activation::none};
  g_ = {"g", hidden_widths(c, c.aggregate_dim, 2 * c.z_dim), c.activation, ndiff::Activation::none};
  reward_ = {"reward_dec", hidden_widths(c, 2 * c.state_dim + c.action_dim + c.z_dim, 2), c.activation,
             ndiff::Activation::none};
  state_ = {"state_dec", hidden_widths(c, c.state_dim + c.action_dim + c.z_dim, 2 * c.state_dim), c.activation,
            ndiff::Activation::none};
}

std::vector<double> BeliefState::features() const {
  std::vector<double> out = mean;
  out.insert(out.end(), log_std.begin(), log_std.end());
  return out;
}

double BeliefState::mean_std() const {
  double s = 0.0;
  for (double l : log_std) s += std::exp(l);
  return log_std.empty() ? 0.0 : s / static_cast<double>(log_std.size());
}

DiagGaussian BeliefState::as_gaussian() const { return DiagGaussian(Tensor::row(mean), Tensor::row(log_std)); }

BeliefState prior(std::size_t z_dim, std::size_t aggregate_dim) {
  BeliefState b;
  b.aggregate.assign(aggregate_dim, 0.0);
  b.mean.assign(z_dim, 0.0);
  b.log_std.assign(z_dim, 0.0);
  return b;
}

Tensor context_features(std::span<const Transition> context) {
  std::vector<Transition> sorted(context.begin(), context.end());
  std::sort(sorted.begin(), sorted.end());
  Tensor rows = Tensor::zeros(sorted.size(), Transition::kFeatureWidth);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto f = sorted[i].features();
    std::copy(f.begin(), f.end(), rows.data() + i * Transition::kFeatureWidth);
  }
  return rows;
}

BeliefState belief_from_aggregate(const EmbedNets& nets, std::vector<double> aggregate, std::uint64_t count) {
  const auto& c = nets.config();
  if (aggregate.size() != c.aggregate_dim) throw ShapeError("embed: aggregate width mismatch");
  if (count == 0) return prior(c);
  Tensor head = ndiff::mlp_forward(nets.g_spec(), nets.params, Tensor::row(aggregate));
  DiagGaussian q = split_head(head);
  BeliefState b;
  b.aggregate = std::move(aggregate);
  b.count = count;
  b.mean = q.mean.to_vector();
  b.log_std = q.log_std.to_vector();
  return b;
}

BeliefState encode_features(const EmbedNets& nets, const Tensor& rows) {
  const auto& c = nets.config();
  if (rows.empty() || rows.rows() == 0) return prior(c);
  if (rows.cols() != c.tuple_width())
    throw ShapeError("embed: context rows have width " + std::to_string(rows.cols()) + ", expected " +
                     std::to_string(c.tuple_width()));
  std::vector<double> agg(c.aggregate_dim, 0.0);
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    Tensor one = Tensor::row({rows.data() + r * rows.cols(), rows.data() + (r + 1) * rows.cols()});
    Tensor fr = ndiff::mlp_forward(nets.f_spec(), nets.params, one);
    for (std::size_t j = 0; j < agg.size(); ++j) agg[j] += fr[j];
  }
  return belief_from_aggregate(nets, std::move(agg), rows.rows());
}

BeliefState encode(const EmbedNets& nets, std::span<const Transition> context) {
  if (context.empty()) return prior(nets.config());
  return encode_features(nets, context_features(context));
}

BeliefState belief_update(const EmbedNets& nets, const BeliefState& belief, const Transition& t) {
  const auto f = t.features();
  Tensor fr = ndiff::mlp_forward(nets.f_spec(), nets.params, Tensor::row({f.begin(), f.end()}));
  std::vector<double> agg = belief.aggregate;
  if (agg.size() != fr.size()) throw ShapeError("embed: belief aggregate width mismatch");
  for (std::size_t j = 0; j < agg.size(); ++j) agg[j] += fr[j];
  return belief_from_aggregate(nets, std::move(agg), belief.count + 1);
}

DiagGaussian decode_reward(const EmbedNets& nets, const Tensor& z, const Tensor& s, const Tensor& a,
                           const Tensor& s_next) {
  return decoder_head(nets, ndiff::mlp_forward(nets.reward_spec(), nets.params, ndiff::hcat({s, a, s_next, z})));
}

DiagGaussian decode_next_state(const EmbedNets& nets, const Tensor& z, const Tensor& s, const Tensor& a) {
  return decoder_head(nets, ndiff::mlp_forward(nets.state_spec(), nets.params, ndiff::hcat({s, a, z})));
}

std::vector<Tensor> draw_posterior_noise(std::size_t batches, std::size_t z_dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Tensor> out;
  out.reserve(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    Tensor n = Tensor::zeros(1, z_dim);
    for (auto& v : n.values()) v = normal(rng);
    out.push_back(std::move(n));
  }
  return out;
}

EmbeddingLossTerms embedding_loss(Tape& tape, const EmbedNets& nets, std::span<const ContextBatch> batches,
                                  std::span<const Tensor> noise) {
  const auto& c = nets.config();
  if (batches.empty()) throw DataError("embedding loss needs at least one batch");
  if (noise.size() != batches.size()) throw ShapeError("embedding loss: one noise row per batch required");

  std::vector<std::size_t> lengths;
  std::size_t total = 0;
  for (const auto& b : batches) {
    if (b.context.empty()) throw DataError("embedding loss is undefined on an empty context");
    lengths.push_back(b.context.size());
    total += b.context.size();
  }
  Tensor rows = Tensor::zeros(total, c.tuple_width());
  Tensor eps = Tensor::zeros(batches.size(), c.z_dim);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < batches.size(); ++i) {
    Tensor ctx = context_features(batches[i].context);
    std::copy(ctx.values().begin(), ctx.values().end(), rows.data() + offset * c.tuple_width());
    offset += ctx.rows();
    if (noise[i].size() != c.z_dim) throw ShapeError("embedding loss: noise width must equal z_dim");
    std::copy(noise[i].values().begin(), noise[i].values().end(), eps.data() + i * c.z_dim);
  }

  Var x = tape.constant(rows);
  Var feats = ndiff::mlp_forward(tape, nets.f_spec(), nets.params, x);
  Var agg = ndiff::segment_sum_rows(feats, lengths);
  ndiff::GaussianVar q = ndiff::gaussian_head(ndiff::mlp_forward(tape, nets.g_spec(), nets.params, agg));
  Var z = ndiff::sample_reparam(q, tape.constant(eps));
  Var zr = ndiff::repeat_rows(z, lengths);

  const std::size_t sd = c.state_dim, ad = c.action_dim;
  Var s = ndiff::slice_cols(x, 0, sd);
  Var a = ndiff::slice_cols(x, sd, sd + ad);
  Var r = ndiff::slice_cols(x, sd + ad, sd + ad + 1);
  Var s2 = ndiff::slice_cols(x, sd + ad + 1, 2 * sd + ad + 1);

  auto reward_head = decoder_head(
      nets, ndiff::mlp_forward(tape, nets.reward_spec(), nets.params, ndiff::concat_cols({s, a, s2, zr})));
  auto state_head =
      decoder_head(nets, ndiff::mlp_forward(tape, nets.state_spec(), nets.params, ndiff::concat_cols({s, a, zr})));
  Var log_lik = ndiff::sum(ndiff::gaussian_log_prob_rows(reward_head, r)) +
                ndiff::sum(ndiff::gaussian_log_prob_rows(state_head, s2));
  Var kl = ndiff::sum(ndiff::kl_to_standard_rows(q));
  const double inv = 1.0 / static_cast<double>(batches.size());

  EmbeddingLossTerms out;
  out.loss = ndiff::scale(kl - log_lik, inv);
  out.nll = -log_lik.value().item() * inv;
  out.kl = kl.value().item() * inv;
  return out;
}

double embedding_loss(const EmbedNets& nets, std::span<const ContextBatch> batches, Rng& rng) {
  auto noise = draw_posterior_noise(batches.size(), nets.config().z_dim, rng);
  Tape tape;
  return embedding_loss(tape, nets, batches, noise).loss.value().item();
}

double embedding_step(EmbedNets& nets, std::span<const ContextBatch> batches, Rng& rng,
                      const ndiff::AdamConfig& adam) {
  auto noise = draw_posterior_noise(batches.size(), nets.config().z_dim, rng);
  Tape tape;
  auto terms = embedding_loss(tape, nets, batches, noise);
  tape.backward(terms.loss);
  ndiff::adam_step(nets.params, tape.gradients(nets.params), adam);
  return terms.loss.value().item();
}

std::vector<ContextBatch> sample_task_batches(std::span<const replay::TaskBuffer> buffers, std::size_t batch_tasks,
                                              std::size_t targets, const replay::SamplingConfig& sampling, Rng& rng) {
  if (buffers.empty()) throw DataError("no task buffers to sample from");
  std::vector<std::size_t> order(buffers.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t n = std::min(batch_tasks, buffers.size());
  // Partial Fisher-Yates keeps the draw independent of std::shuffle's implementation.
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  std::vector<ContextBatch> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& buf = buffers[order[i]];
    if (targets == 0) {
      out.push_back({buf.task_id(), replay::sample_context(buf, sampling, rng), {}});
    } else {
      out.push_back(replay::sample_batch(buf, targets, sampling, rng));
    }
  }
  return out;
}

PretrainResult pretrain_embedding(EmbedNets& nets, std::span<const replay::TaskBuffer> buffers, std::size_t steps,
                                  const PretrainOptions& options, Rng& rng) {
  for (const auto& b : buffers)
    if (b.empty()) throw DataError("pretraining needs initial-sampling data in every task buffer");
  if (buffers.empty()) throw DataError("pretraining needs at least one task buffer");

  auto heldout = sample_task_batches(buffers, buffers.size(), 0, options.sampling, rng);
  auto heldout_noise = draw_posterior_noise(heldout.size(), nets.config().z_dim, rng);
  auto score = [&] {
    Tape tape;
    return embedding_loss(tape, nets, heldout, heldout_noise).loss.value().item();
  };

  PretrainResult result;
  result.initial_heldout_loss = score();
  for (std::size_t i = 0; i < steps; ++i) {
    auto batches = sample_task_batches(buffers, options.batch_tasks, 0, options.sampling, rng);
    embedding_step(nets, batches, rng, options.adam);
  }
  result.final_heldout_loss = score();
  return result;
}

std::string encode_belief(const BeliefState& b) {
  std::string out;
  const double count = static_cast<double>(b.count);
  ndiff::append_f64_le(out, std::span<const double>(&count, 1));
  ndiff::append_f64_le(out, b.aggregate);
  ndiff::append_f64_le(out, b.mean);
  ndiff::append_f64_le(out, b.log_std);
  return out;
}

BeliefState decode_belief(std::string_view bytes, std::uint64_t offset, std::size_t z_dim, std::size_t aggregate_dim) {
  auto v = ndiff::read_f64_le(bytes, offset, 1 + aggregate_dim + 2 * z_dim);
  BeliefState b;
  b.count = static_cast<std::uint64_t>(v[0]);
  auto it = v.begin() + 1;
  b.aggregate.assign(it, it + static_cast<std::ptrdiff_t>(aggregate_dim));
  it += static_cast<std::ptrdiff_t>(aggregate_dim);
  b.mean.assign(it, it + static_cast<std::ptrdiff_t>(z_dim));
  it += static_cast<std::ptrdiff_t>(z_dim);
  b.log_std.assign(it, it + static_cast<std::ptrdiff_t>(z_dim));
  return b;
}

}  // namespace elue::embed
