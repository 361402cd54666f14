#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "elue/agent/sac_ib.hpp"

namespace elue::meta {

struct MetricRecord {
  std::string run_id;
  std::string phase;
  std::int64_t iteration = 0;
  std::uint64_t env_steps = 0;
  std::int64_t task_id = 0;
  std::int64_t episode_index = 0;  // 1-based within the task's rollout sequence
  double ret = 0.0;
  std::optional<agent::LossReport> losses;
  double belief_std_mean = 1.0;
  std::uint64_t seed = 0;
};

std::string to_json_line(const MetricRecord& r);
/// Throws FormatError on malformed lines.
MetricRecord parse_json_line(const std::string& line);

/// Append-only record stream; every record is kept in memory and, when a
/// path is set, written and flushed immediately.
class MetricsSink {
 public:
  MetricsSink() = default;
  explicit MetricsSink(const std::filesystem::path& path);

  void write(const MetricRecord& r);
  const std::vector<MetricRecord>& records() const noexcept { return records_; }

 private:
  std::ofstream out_;
  std::vector<MetricRecord> records_;
};

std::vector<MetricRecord> read_metrics(const std::filesystem::path& path);

}  // namespace elue::meta
