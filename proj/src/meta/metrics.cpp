#include "elue/meta/metrics.hpp"

#include "elue/error.hpp"
#include "json.hpp"

namespace elue::meta {

using json = nlohmann::ordered_json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

}  // namespace

std::string to_json_line(const MetricRecord& r) {
  json losses = json::object();
  if (r.losses) {
    losses["embed"] = optional_number(r.losses->embed);
    losses["actor"] = r.losses->actor;
    losses["q"] = r.losses->q;
    losses["v"] = r.losses->v;
  } else {
    for (const char* k : {"embed", "actor", "q", "v"}) losses[k] = nullptr;
  }
  json j;
  j["run_id"] = r.run_id;
  j["phase"] = r.phase;
  j["iteration"] = r.iteration;
  j["env_steps"] = r.env_steps;
  j["task_id"] = r.task_id;
  j["episode_index"] = r.episode_index;
  j["return"] = r.ret;
  j["losses"] = std::move(losses);
  j["belief_std_mean"] = r.belief_std_mean;
  j["seed"] = r.seed;
  return j.dump();
}

MetricRecord parse_json_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    MetricRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    r.phase = j.at("phase").get<std::string>();
    r.iteration = j.at("iteration").get<std::int64_t>();
    r.env_steps = j.at("env_steps").get<std::uint64_t>();
    r.task_id = j.at("task_id").get<std::int64_t>();
    r.episode_index = j.at("episode_index").get<std::int64_t>();
    r.ret = j.at("return").get<double>();
    const auto& l = j.at("losses");
    auto actor = read_optional(l, "actor");
    if (actor) {
      agent::LossReport rep;
      rep.embed = read_optional(l, "embed");
      rep.actor = *actor;
      rep.q = read_optional(l, "q").value_or(0.0);
      rep.v = read_optional(l, "v").value_or(0.0);
      r.losses = rep;
    }
    r.belief_std_mean = j.at("belief_std_mean").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed metrics record: ") + e.what());
  }
}

MetricsSink::MetricsSink(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
  if (!out_) throw Error("cannot open metrics file for writing: " + path.string());
}

void MetricsSink::write(const MetricRecord& r) {
  records_.push_back(r);
  if (out_.is_open()) {
    out_ << to_json_line(r) << '\n';
    out_.flush();
  }
}

std::vector<MetricRecord> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open metrics file: " + path.string());
  std::vector<MetricRecord> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(parse_json_line(line));
  return out;
}

}  // namespace elue::meta
