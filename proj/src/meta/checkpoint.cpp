#include "elue/meta/checkpoint.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "elue/error.hpp"
#include "elue/ndiff/segment.hpp"

namespace elue::meta {

namespace {

constexpr std::string_view kMagic = "ELUE-CHECKPOINT";

const std::pair<const char*, ndiff::ParameterSet Checkpoint::*> kSections[] = {
    {"embed", &Checkpoint::embed}, {"pi1", &Checkpoint::pi1}, {"pi2", &Checkpoint::pi2},
    {"q", &Checkpoint::q},         {"v", &Checkpoint::v},     {"v_target", &Checkpoint::v_target},
};

std::string format_embed_config(const embed::EmbedConfig& c) {
  std::ostringstream o;
  o << c.state_dim << ' ' << c.action_dim << ' ' << c.z_dim << ' ' << c.aggregate_dim << ' ' << c.hidden << ' '
    << c.hidden_layers << ' ' << ndiff::to_string(c.activation) << ' ' << std::setprecision(17)
    << c.decoder_log_std_min;
  return o.str();
}

std::string format_agent_config(const agent::AgentConfig& c) {
  std::ostringstream o;
  o << c.state_dim << ' ' << c.action_dim << ' ' << c.belief_dim << ' ' << c.w_dim << ' ' << c.hidden << ' '
    << c.hidden_layers << ' ' << ndiff::to_string(c.activation);
  return o.str();
}

[[noreturn]] void malformed(std::size_t line_no, const std::string& line) {
  throw FormatError("checkpoint header line " + std::to_string(line_no) + " is malformed: '" + line + "'");
}

}  // namespace

std::string_view to_string(Variant v) { return v == Variant::elue ? "elue" : "no_emb"; }

Variant parse_variant(std::string_view text) {
  if (text == "elue") return Variant::elue;
  if (text == "no_emb") return Variant::no_emb;
  throw ConfigError("unknown variant '" + std::string(text) + "' (expected elue or no_emb)");
}

embed::EmbedNets Checkpoint::embed_nets() const { return embed::EmbedNets(embed_config, embed); }

agent::AgentNets Checkpoint::agent_nets() const {
  ndiff::Rng unused(0);
  agent::AgentNets nets(agent_config, unused);
  nets.pi1 = pi1;
  nets.pi2 = pi2;
  nets.q = q;
  nets.v = v;
  nets.v_target = v_target;
  nets.check_shapes();
  return nets;
}

void Checkpoint::store(const embed::EmbedNets& e, const agent::AgentNets& a) {
  embed_config = e.config();
  embed = e.params;
  agent_config = a.config();
  pi1 = a.pi1;
  pi2 = a.pi2;
  q = a.q;
  v = a.v;
  v_target = a.v_target;
}

bool operator==(const Checkpoint& a, const Checkpoint& b) {
  return a.schema_version == b.schema_version && a.variant == b.variant && a.embed_config == b.embed_config &&
         a.agent_config == b.agent_config && a.embed == b.embed && a.pi1 == b.pi1 && a.pi2 == b.pi2 && a.q == b.q &&
         a.v == b.v && a.v_target == b.v_target && a.buffers == b.buffers && a.beliefs == b.beliefs &&
         a.config_echo == b.config_echo;
}

std::string serialize_checkpoint(const Checkpoint& c) {
  std::ostringstream header;
  std::string payload;
  header << kMagic << '\n'
         << "schema_version " << c.schema_version << '\n'
         << "variant " << to_string(c.variant) << '\n'
         << "embed_config " << format_embed_config(c.embed_config) << '\n'
         << "agent_config " << format_agent_config(c.agent_config) << '\n';
  for (const auto& line : c.config_echo) {
    if (line.find('\n') != std::string::npos) throw FormatError("checkpoint config echo lines must be single-line");
    header << "echo " << line << '\n';
  }
  for (const auto& [name, member] : kSections) {
    auto seg = ndiff::encode_parameters(c.*member);
    header << "section " << name << ' ' << seg.records.size() << ' ' << payload.size() << '\n';
    for (const auto& r : seg.records) header << "record " << ndiff::format_record(r) << '\n';
    payload += seg.payload;
  }
  for (const auto& b : c.buffers) {
    auto items = b.contents();
    header << "buffer " << b.task_id() << ' ' << b.capacity() << ' ' << b.insertion_count() << ' ' << items.size()
           << ' ' << payload.size() << '\n';
    payload += replay::encode_transitions(items);
  }
  for (const auto& [task, belief] : c.beliefs) {
    header << "belief " << task << ' ' << payload.size() << '\n';
    payload += embed::encode_belief(belief);
  }
  header << "end\n";
  return header.str() + payload;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Checkpoint c;
  std::size_t pos = 0, line_no = 0;
  auto next_line = [&]() -> std::string {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) throw FormatError("checkpoint header is truncated (no 'end' line)");
    std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    return line;
  };

  if (next_line() != kMagic) throw FormatError("not an ELUE checkpoint (bad magic line)");
  {
    std::string line = next_line();
    std::istringstream in(line);
    std::string key;
    int version = 0;
    if (!(in >> key >> version) || key != "schema_version") malformed(line_no, line);
    if (version != kCheckpointSchema)
      throw FormatError("checkpoint schema version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kCheckpointSchema) + ")");
    c.schema_version = version;
  }

  struct PendingSection {
    std::string name;
    std::vector<ndiff::SegmentRecord> records;
    std::uint64_t base = 0;
  };
  struct PendingBuffer {
    std::int64_t task;
    std::size_t capacity;
    std::uint64_t inserted, count, offset;
  };
  std::vector<PendingSection> sections;
  std::vector<PendingBuffer> buffers;
  std::vector<std::pair<std::int64_t, std::uint64_t>> beliefs;
  std::size_t pending_records = 0;

  for (;;) {
    std::string line = next_line();
    if (line == "end") break;
    const auto sp = line.find(' ');
    const std::string key = line.substr(0, sp);
    const std::string rest = sp == std::string::npos ? "" : line.substr(sp + 1);
    std::istringstream in(rest);
    if (pending_records > 0) {
      if (key != "record") malformed(line_no, line);
      sections.back().records.push_back(ndiff::parse_record(rest));
      --pending_records;
      continue;
    }
    if (key == "variant") {
      c.variant = parse_variant(rest);
    } else if (key == "embed_config") {
      std::string act;
      auto& e = c.embed_config;
      if (!(in >> e.state_dim >> e.action_dim >> e.z_dim >> e.aggregate_dim >> e.hidden >> e.hidden_layers >> act >>
            e.decoder_log_std_min))
        malformed(line_no, line);
      e.activation = ndiff::parse_activation(act);
    } else if (key == "agent_config") {
      std::string act;
      auto& a = c.agent_config;
      if (!(in >> a.state_dim >> a.action_dim >> a.belief_dim >> a.w_dim >> a.hidden >> a.hidden_layers >> act))
        malformed(line_no, line);
      a.activation = ndiff::parse_activation(act);
    } else if (key == "echo") {
      c.config_echo.push_back(rest);
    } else if (key == "section") {
      PendingSection s;
      if (!(in >> s.name >> pending_records >> s.base)) malformed(line_no, line);
      sections.push_back(std::move(s));
    } else if (key == "buffer") {
      PendingBuffer b{};
      if (!(in >> b.task >> b.capacity >> b.inserted >> b.count >> b.offset)) malformed(line_no, line);
      buffers.push_back(b);
    } else if (key == "belief") {
      std::int64_t task = 0;
      std::uint64_t offset = 0;
      if (!(in >> task >> offset)) malformed(line_no, line);
      beliefs.emplace_back(task, offset);
    } else {
      malformed(line_no, line);
    }
  }
  if (pending_records > 0) throw FormatError("checkpoint section is missing records");

  const std::string_view payload = std::string_view(bytes).substr(pos);
  for (const auto& s : sections) {
    ndiff::ParameterSet Checkpoint::*member = nullptr;
    for (const auto& [name, m] : kSections)
      if (s.name == name) member = m;
    if (!member) throw FormatError("checkpoint has unknown section '" + s.name + "'");
    if (s.base > payload.size()) throw FormatError("checkpoint section '" + s.name + "' starts past the payload");
    c.*member = ndiff::decode_parameters(s.records, payload.substr(s.base));
  }
  for (const auto& b : buffers) {
    auto items = replay::decode_transitions(payload, b.offset, b.count);
    c.buffers.push_back(replay::TaskBuffer::restore(b.task, b.capacity, b.inserted, items));
  }
  for (const auto& [task, offset] : beliefs)
    c.beliefs.emplace_back(task,
                           embed::decode_belief(payload, offset, c.embed_config.z_dim, c.embed_config.aggregate_dim));
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  const std::string bytes = serialize_checkpoint(c);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open checkpoint for writing: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

}  // namespace elue::meta
