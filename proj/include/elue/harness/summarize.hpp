#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "elue/meta/metrics.hpp"

namespace elue::harness {

struct SummaryRow {
  std::string phase;
  std::int64_t episode_index = 0;
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single record
};

/// Rows ordered by (phase, episode_index).
std::vector<SummaryRow> summarize(const std::vector<meta::MetricRecord>& records);

struct SummaryFile {
  std::vector<SummaryRow> rows;
  std::size_t skipped = 0;  // malformed lines
};
SummaryFile summarize_file(const std::filesystem::path& metrics);

/// "phase,episode_index,count,mean,std" header plus one line per row.
std::string format_summary_csv(const std::vector<SummaryRow>& rows);

}  // namespace elue::harness
