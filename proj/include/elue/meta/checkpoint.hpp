#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "elue/agent/sac_ib.hpp"
#include "elue/embed/embedding.hpp"
#include "elue/replay/buffer.hpp"

namespace elue::meta {

inline constexpr int kCheckpointSchema = 1;

/// Which meta-training variant produced the agent.
enum class Variant { elue, no_emb };
std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);

struct Checkpoint {
  int schema_version = kCheckpointSchema;
  Variant variant = Variant::elue;
  embed::EmbedConfig embed_config;
  agent::AgentConfig agent_config;
  ndiff::ParameterSet embed;
  ndiff::ParameterSet pi1, pi2, q, v, v_target;
  std::vector<replay::TaskBuffer> buffers;
  std::vector<std::pair<std::int64_t, embed::BeliefState>> beliefs;
  /// Serialized experiment config, one line per entry.
  std::vector<std::string> config_echo;

  embed::EmbedNets embed_nets() const;
  agent::AgentNets agent_nets() const;
  void store(const embed::EmbedNets& e, const agent::AgentNets& a);

  friend bool operator==(const Checkpoint&, const Checkpoint&);
};

/// Text header (versioned, one descriptor per line, terminated by "end")
/// followed by the concatenated little-endian payload.
std::string serialize_checkpoint(const Checkpoint& c);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace elue::meta
