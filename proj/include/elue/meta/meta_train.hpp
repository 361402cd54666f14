#pragma once

#include <cstdint>
#include <vector>

#include "elue/agent/train.hpp"
#include "elue/meta/checkpoint.hpp"
#include "elue/meta/controller.hpp"
#include "elue/meta/metrics.hpp"

namespace elue::meta {

struct MetaTrainConfig {
  envsim::Family family = envsim::Family::radial_goal;
  int n_train_tasks = 16;
  int n_eval_tasks = 8;
  int tasks_per_iteration = 8;
  /// Env steps per selected task per iteration, rounded up to whole episodes.
  int collection_steps = 64;
  int training_steps = 250;
  int total_iterations = 300;
  /// Uniform-random-action steps per task before any training.
  int initial_sampling_steps = 256;
  int embedding_pretrain_steps = 2000;
  int eval_every = 25;
  int eval_episodes = 3;
  Variant variant = Variant::elue;
  bool save_buffers = true;
  std::uint64_t seed = 1;

  EnvConfig env;
  embed::EmbedConfig embed;
  agent::AgentConfig agent;
  agent::TrainConfig train;

  void validate() const;
};

struct MetaTrainResult {
  Checkpoint checkpoint;
  embed::PretrainResult pretrain;
  /// Held-out per-episode mean returns of the last evaluation.
  std::vector<double> final_eval;
  std::vector<TaskSpec> train_tasks;
  std::vector<TaskSpec> eval_tasks;
  double seconds = 0.0;
};

/// Training tasks use `seed`, held-out tasks a derived seed and ids from 1000.
std::vector<TaskSpec> train_tasks(const MetaTrainConfig& c);
std::vector<TaskSpec> heldout_tasks(const MetaTrainConfig& c);

MetaTrainResult meta_train(const MetaTrainConfig& config, MetricsSink& metrics,
                           const std::vector<std::string>& config_echo = {});

}  // namespace elue::meta
