#include "elue/replay/buffer.hpp"

#include <cmath>

#include "elue/error.hpp"
#include "elue/ndiff/segment.hpp"

namespace elue::replay {

TaskBuffer::TaskBuffer(std::int64_t task_id, std::size_t capacity) : task_id_(task_id), capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay buffer: capacity must be positive");
}

void TaskBuffer::add(const Transition& t) {
  for (double v : t.features()) {
    if (!std::isfinite(v)) throw DataError("replay buffer: non-finite transition for task " + std::to_string(task_id_));
  }
  ++inserted_;
  if (items_.size() < capacity_) {
    items_.push_back(t);
    return;
  }
  items_[head_] = t;
  head_ = (head_ + 1) % capacity_;
}

const Transition& TaskBuffer::at(std::size_t i) const {
  if (i >= items_.size()) throw Error("replay buffer: index out of range");
  return items_[(head_ + i) % items_.size()];
}

std::vector<Transition> TaskBuffer::contents() const {
  std::vector<Transition> out;
  out.reserve(items_.size());
  for (std::size_t i = 0; i < items_.size(); ++i) out.push_back(at(i));
  return out;
}

TaskBuffer TaskBuffer::restore(std::int64_t task_id, std::size_t capacity, std::uint64_t insertion_count,
                               std::span<const Transition> items) {
  if (items.size() > capacity) throw FormatError("replay buffer: more items than capacity");
  if (insertion_count < items.size()) throw FormatError("replay buffer: insertion count below size");
  TaskBuffer b(task_id, capacity);
  b.items_.assign(items.begin(), items.end());
  b.inserted_ = insertion_count;
  return b;
}

bool operator==(const TaskBuffer& a, const TaskBuffer& b) {
  return a.task_id_ == b.task_id_ && a.capacity_ == b.capacity_ && a.inserted_ == b.inserted_ &&
         a.contents() == b.contents();
}

std::vector<Transition> sample_context(const TaskBuffer& buffer, const SamplingConfig& cfg, Rng& rng) {
  if (cfg.k_min < 1 || cfg.k_max < cfg.k_min) {
    throw ConfigError("sample_context: need 1 <= k_min <= k_max, got " + std::to_string(cfg.k_min) + ".." +
                      std::to_string(cfg.k_max));
  }
  if (buffer.size() < cfg.k_min) {
    throw DataError("sample_context: task " + std::to_string(buffer.task_id()) + " holds " +
                    std::to_string(buffer.size()) + " transitions, need at least k_min=" +
                    std::to_string(cfg.k_min) + "; collect more data first");
  }
  std::uniform_int_distribution<std::size_t> kdist(cfg.k_min, cfg.k_max);
  const std::size_t k = std::min(kdist(rng), buffer.size());
  std::uniform_int_distribution<std::size_t> idx(0, buffer.size() - 1);
  std::vector<Transition> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(buffer.at(idx(rng)));
  return out;
}

ContextBatch sample_batch(const TaskBuffer& buffer, std::size_t targets, const SamplingConfig& cfg, Rng& rng) {
  if (targets == 0) throw ConfigError("sample_batch: need at least one target");
  ContextBatch batch;
  batch.task_id = buffer.task_id();
  batch.context = sample_context(buffer, cfg, rng);
  std::uniform_int_distribution<std::size_t> idx(0, buffer.size() - 1);
  batch.targets.reserve(targets);
  for (std::size_t i = 0; i < targets; ++i) batch.targets.push_back(buffer.at(idx(rng)));
  return batch;
}

std::string encode_transitions(std::span<const Transition> items) {
  std::string out;
  out.reserve(items.size() * Transition::kFeatureWidth * 8);
  for (const auto& t : items) {
    auto f = t.features();
    ndiff::append_f64_le(out, f);
  }
  return out;
}

std::vector<Transition> decode_transitions(std::string_view bytes, std::uint64_t offset, std::uint64_t count) {
  auto flat = ndiff::read_f64_le(bytes, offset, count * Transition::kFeatureWidth);
  std::vector<Transition> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    out.push_back(Transition::from_features(
        std::span<const double>(flat).subspan(i * Transition::kFeatureWidth, Transition::kFeatureWidth)));
  }
  return out;
}

}  // namespace elue::replay
