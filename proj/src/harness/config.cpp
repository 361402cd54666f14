#include "elue/harness/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "elue/error.hpp"

namespace elue::harness {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("'" + std::string(v) + "' is not a valid number");
  return out;
}

bool parse_bool(std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("'" + std::string(v) + "' is not a boolean (use true or false)");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

agent::ActMode parse_act_mode(std::string_view v) {
  if (v == "mean") return agent::ActMode::mean;
  if (v == "sample") return agent::ActMode::sample;
  throw ConfigError("act_mode must be mean or sample, got '" + std::string(v) + "'");
}

struct Key {
  std::string section;
  std::string key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

template <typename T, typename Access>
Key field(std::string section, std::string key, Access access) {
  Key k{std::move(section), std::move(key), nullptr, nullptr};
  k.get = [access](const ExperimentConfig& c) {
    const T& v = access(const_cast<ExperimentConfig&>(c));
    if constexpr (std::is_same_v<T, bool>) {
      return std::string(v ? "true" : "false");
    } else if constexpr (std::is_floating_point_v<T>) {
      return format_double(v);
    } else if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else {
      return std::to_string(v);
    }
  };
  k.set = [access](ExperimentConfig& c, std::string_view v) {
    T& dst = access(c);
    if constexpr (std::is_same_v<T, bool>) {
      dst = parse_bool(v);
    } else if constexpr (std::is_same_v<T, std::string>) {
      dst = std::string(v);
    } else {
      dst = parse_number<T>(v);
    }
  };
  return k;
}

template <typename Get, typename Set>
Key custom(std::string section, std::string key, Get get, Set set) {
  return {std::move(section), std::move(key), get, set};
}

const std::vector<Key>& keys() {
  using C = ExperimentConfig;
  static const std::vector<Key> table = {
      field<std::uint64_t>("experiment", "seed", [](C& c) -> auto& { return c.train.seed; }),
      custom(
          "experiment", "variant", [](const C& c) { return std::string(meta::to_string(c.train.variant)); },
          [](C& c, std::string_view v) { c.train.variant = meta::parse_variant(v); }),
      field<std::string>("experiment", "checkpoint", [](C& c) -> auto& { return c.checkpoint; }),
      field<std::string>("experiment", "metrics", [](C& c) -> auto& { return c.metrics; }),
      field<bool>("experiment", "save_buffers", [](C& c) -> auto& { return c.train.save_buffers; }),

      custom(
          "env", "family", [](const C& c) { return std::string(envsim::to_string(c.train.family)); },
          [](C& c, std::string_view v) { c.train.family = envsim::parse_family(v); }),
      field<int>("env", "horizon", [](C& c) -> auto& { return c.train.env.horizon; }),
      field<double>("env", "action_scale", [](C& c) -> auto& { return c.train.env.action_scale; }),
      field<int>("env", "n_train_tasks", [](C& c) -> auto& { return c.train.n_train_tasks; }),
      field<int>("env", "n_eval_tasks", [](C& c) -> auto& { return c.train.n_eval_tasks; }),

      field<std::size_t>("embed", "z_dim", [](C& c) -> auto& { return c.train.embed.z_dim; }),
      field<std::size_t>("embed", "aggregate_dim", [](C& c) -> auto& { return c.train.embed.aggregate_dim; }),
      field<std::size_t>("embed", "hidden", [](C& c) -> auto& { return c.train.embed.hidden; }),
      field<std::size_t>("embed", "hidden_layers", [](C& c) -> auto& { return c.train.embed.hidden_layers; }),
      custom(
          "embed", "activation", [](const C& c) { return std::string(ndiff::to_string(c.train.embed.activation)); },
          [](C& c, std::string_view v) { c.train.embed.activation = ndiff::parse_activation(v); }),
      field<double>("embed", "decoder_log_std_min", [](C& c) -> auto& { return c.train.embed.decoder_log_std_min; }),
      field<double>("embed", "lr", [](C& c) -> auto& { return c.train.train.hyper.embed_adam.lr; }),
      field<int>("embed", "pretrain_steps", [](C& c) -> auto& { return c.train.embedding_pretrain_steps; }),

      field<std::size_t>("agent", "w_dim", [](C& c) -> auto& { return c.train.agent.w_dim; }),
      field<std::size_t>("agent", "hidden", [](C& c) -> auto& { return c.train.agent.hidden; }),
      field<std::size_t>("agent", "hidden_layers", [](C& c) -> auto& { return c.train.agent.hidden_layers; }),
      custom(
          "agent", "activation", [](const C& c) { return std::string(ndiff::to_string(c.train.agent.activation)); },
          [](C& c, std::string_view v) { c.train.agent.activation = ndiff::parse_activation(v); }),
      field<double>("agent", "gamma", [](C& c) -> auto& { return c.train.train.hyper.gamma; }),
      field<double>("agent", "beta", [](C& c) -> auto& { return c.train.train.hyper.beta; }),
      field<double>("agent", "polyak", [](C& c) -> auto& { return c.train.train.hyper.polyak; }),
      field<double>("agent", "reward_scale", [](C& c) -> auto& { return c.train.train.hyper.reward_scale; }),
      field<double>("agent", "lr_pi", [](C& c) -> auto& { return c.train.train.hyper.pi_adam.lr; }),
      field<double>("agent", "lr_q", [](C& c) -> auto& { return c.train.train.hyper.q_adam.lr; }),
      field<double>("agent", "lr_v", [](C& c) -> auto& { return c.train.train.hyper.v_adam.lr; }),
      field<double>("agent", "adam_beta1", [](C& c) -> auto& { return c.train.train.hyper.pi_adam.beta1; }),
      field<double>("agent", "adam_beta2", [](C& c) -> auto& { return c.train.train.hyper.pi_adam.beta2; }),
      field<double>("agent", "adam_eps", [](C& c) -> auto& { return c.train.train.hyper.pi_adam.eps; }),
      field<std::size_t>("agent", "batch_tasks", [](C& c) -> auto& { return c.train.train.batch_tasks; }),
      field<std::size_t>("agent", "targets_per_context",
                         [](C& c) -> auto& { return c.train.train.sampling.targets_per_context; }),
      field<std::size_t>("agent", "k_min", [](C& c) -> auto& { return c.train.train.sampling.k_min; }),
      field<std::size_t>("agent", "k_max", [](C& c) -> auto& { return c.train.train.sampling.k_max; }),

      field<int>("train", "tasks_per_iteration", [](C& c) -> auto& { return c.train.tasks_per_iteration; }),
      field<int>("train", "collection_steps", [](C& c) -> auto& { return c.train.collection_steps; }),
      field<int>("train", "training_steps", [](C& c) -> auto& { return c.train.training_steps; }),
      field<int>("train", "total_iterations", [](C& c) -> auto& { return c.train.total_iterations; }),
      field<int>("train", "initial_sampling_steps", [](C& c) -> auto& { return c.train.initial_sampling_steps; }),
      field<int>("train", "eval_every", [](C& c) -> auto& { return c.train.eval_every; }),
      field<int>("train", "eval_episodes", [](C& c) -> auto& { return c.train.eval_episodes; }),

      custom(
          "test", "mode", [](const C& c) { return std::string(meta::to_string(c.test.mode)); },
          [](C& c, std::string_view v) { c.test.mode = meta::parse_test_mode(v); }),
      custom(
          "test", "family", [](const C& c) { return std::string(envsim::to_string(c.test_family)); },
          [](C& c, std::string_view v) { c.test_family = envsim::parse_family(v); }),
      field<int>("test", "n_tasks", [](C& c) -> auto& { return c.test_tasks; }),
      field<std::uint64_t>("test", "task_seed", [](C& c) -> auto& { return c.test_task_seed; }),
      field<std::uint64_t>("test", "seed", [](C& c) -> auto& { return c.test.seed; }),
      field<int>("test", "initial_sampling_steps", [](C& c) -> auto& { return c.test.initial_sampling_steps; }),
      field<int>("test", "collection_steps", [](C& c) -> auto& { return c.test.collection_steps; }),
      field<int>("test", "training_steps", [](C& c) -> auto& { return c.test.training_steps; }),
      field<int>("test", "total_iterations", [](C& c) -> auto& { return c.test.total_iterations; }),
      field<bool>("test", "belief_freeze_after_initial",
                  [](C& c) -> auto& { return c.test.belief_freeze_after_initial; }),
      custom(
          "test", "act_mode",
          [](const C& c) { return std::string(c.test.act_mode == agent::ActMode::mean ? "mean" : "sample"); },
          [](C& c, std::string_view v) { c.test.act_mode = parse_act_mode(v); }),
      field<std::size_t>("test", "batch_tasks", [](C& c) -> auto& { return c.test.train.batch_tasks; }),
  };
  return table;
}

const Key* find_key(std::string_view section, std::string_view key) {
  for (const auto& k : keys())
    if (k.section == section && k.key == key) return &k;
  return nullptr;
}

}  // namespace

void ExperimentConfig::sync() {
  auto& h = train.train.hyper;
  for (auto* a : {&h.q_adam, &h.v_adam, &h.embed_adam}) {
    a->beta1 = h.pi_adam.beta1;
    a->beta2 = h.pi_adam.beta2;
    a->eps = h.pi_adam.eps;
  }
  train.agent.belief_dim = 2 * train.embed.z_dim;
  const std::size_t test_batch = test.train.batch_tasks;
  test.train = train.train;
  test.train.batch_tasks = test_batch;
  test.env = train.env;
  test.scratch_agent = train.agent;
  test.scratch_agent.belief_dim = 0;
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view raw = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header '" + std::string(line) + "'");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      bool known = false;
      for (const auto& k : keys()) known = known || k.section == section;
      if (!known) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value', got '" + std::string(line) + "'");
    if (section.empty()) throw ConfigError(where + "key outside of any section");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const Key* k = find_key(section, key);
    if (!k) throw ConfigError(where + "unknown key '" + std::string(key) + "' in [" + section + "]");
    try {
      k->set(c, value);
    } catch (const Error& e) {
      throw ConfigError(where + section + "." + std::string(key) + ": " + e.what());
    }
  }
  c.sync();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::string out;
  std::string section;
  for (const auto& k : keys()) {
    if (k.section != section) {
      if (!section.empty()) out += '\n';
      section = k.section;
      out += "[" + section + "]\n";
    }
    out += k.key + " = " + k.get(c) + "\n";
  }
  return out;
}

void apply_env_overrides(ExperimentConfig& c, const std::function<const char*(const char*)>& getenv) {
  for (const auto& k : keys()) {
    std::string name = "ELUE_" + k.section + "_" + k.key;
    for (auto& ch : name) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    const char* v = getenv ? getenv(name.c_str()) : std::getenv(name.c_str());
    if (!v) continue;
    try {
      k.set(c, trim(v));
    } catch (const Error& e) {
      throw ConfigError("environment variable " + name + ": " + e.what());
    }
  }
  c.sync();
}

std::vector<std::string> config_echo(const ExperimentConfig& c) {
  std::vector<std::string> out;
  for (const auto& k : keys()) out.push_back(k.section + "." + k.key + " = " + k.get(c));
  return out;
}

}  // namespace elue::harness
