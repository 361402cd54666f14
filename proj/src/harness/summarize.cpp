#include "elue/harness/summarize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "elue/error.hpp"

namespace elue::harness {

std::vector<SummaryRow> summarize(const std::vector<meta::MetricRecord>& records) {
  // Two passes per group (mean, then squared deviations) for a stable std.
  std::map<std::pair<std::string, std::int64_t>, std::vector<double>> groups;
  for (const auto& r : records) groups[{r.phase, r.episode_index}].push_back(r.ret);
  std::vector<SummaryRow> rows;
  for (const auto& [key, values] : groups) {
    SummaryRow row{key.first, key.second, values.size(), 0.0, 0.0};
    for (double v : values) row.mean += v;
    row.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - row.mean) * (v - row.mean);
      row.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

SummaryFile summarize_file(const std::filesystem::path& metrics) {
  std::ifstream in(metrics);
  if (!in) throw Error("cannot open metrics file: " + metrics.string());
  SummaryFile out;
  std::vector<meta::MetricRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      records.push_back(meta::parse_json_line(line));
    } catch (const FormatError&) {
      ++out.skipped;
    }
  }
  out.rows = summarize(records);
  return out;
}

std::string format_summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "phase,episode_index,count,mean,std\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, ",%lld,%zu,%.17g,%.17g\n", static_cast<long long>(r.episode_index), r.count, r.mean,
                  r.std);
    out += r.phase;
    out += buf;
  }
  return out;
}

}  // namespace elue::harness
