#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "elue/meta/meta_test.hpp"
#include "elue/meta/meta_train.hpp"

namespace elue::harness {

/// Everything one command needs: the meta-train and meta-test settings,
/// held-out test task generation and output paths.
struct ExperimentConfig {
  ExperimentConfig() { sync(); }

  meta::MetaTrainConfig train;
  meta::MetaTestConfig test;
  envsim::Family test_family = envsim::Family::radial_goal;
  int test_tasks = 5;
  std::uint64_t test_task_seed = 7;
  std::string checkpoint = "elue.ckpt";
  std::string metrics = "metrics.jsonl";

  /// Keeps the fields shared between train and test (env, optimizer,
  /// sampling) in sync after parsing.
  void sync();
};

/// Line-based "[section]" / "key = value" format. Unknown sections or keys
/// and malformed values raise ConfigError naming the line.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Writes every known key, so parse(serialize(c)) reproduces c.
std::string serialize_config(const ExperimentConfig& c);

/// Applies ELUE_<SECTION>_<KEY> environment variables on top of `c`.
/// `getenv` is injectable for tests.
void apply_env_overrides(ExperimentConfig& c,
                         const std::function<const char*(const char*)>& getenv = nullptr);

/// "section.key = value" lines, for the checkpoint's config echo.
std::vector<std::string> config_echo(const ExperimentConfig& c);

}  // namespace elue::harness
