#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "elue/envsim/point_nav.hpp"

namespace elue::replay {

using envsim::Transition;
using Rng = std::mt19937_64;

inline constexpr std::size_t kDefaultCapacity = 100000;

/// Fixed-capacity FIFO ring of transitions for one task.
class TaskBuffer {
 public:
  explicit TaskBuffer(std::int64_t task_id = 0, std::size_t capacity = kDefaultCapacity);

  void add(const Transition& t);

  std::int64_t task_id() const noexcept { return task_id_; }
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  /// Total adds, including evicted items.
  std::uint64_t insertion_count() const noexcept { return inserted_; }

  /// i-th stored item in age order (0 = oldest still present).
  const Transition& at(std::size_t i) const;
  std::vector<Transition> contents() const;

  /// Rebuilds a buffer from persisted contents (oldest first).
  static TaskBuffer restore(std::int64_t task_id, std::size_t capacity, std::uint64_t insertion_count,
                            std::span<const Transition> items);

  friend bool operator==(const TaskBuffer&, const TaskBuffer&);

 private:
  std::int64_t task_id_;
  std::size_t capacity_;
  std::vector<Transition> items_;
  std::size_t head_ = 0;  // index of the oldest item once the ring is full
  std::uint64_t inserted_ = 0;
};

struct SamplingConfig {
  std::size_t k_min = 4;
  std::size_t k_max = 64;
  std::size_t targets_per_context = 16;
};

/// One shared context set plus target tuples drawn from the same task.
struct ContextBatch {
  std::int64_t task_id = 0;
  std::vector<Transition> context;
  std::vector<Transition> targets;
};

/// k ~ U{k_min..k_max} clamped to the buffer size, then k draws with replacement.
std::vector<Transition> sample_context(const TaskBuffer& buffer, const SamplingConfig& cfg, Rng& rng);

/// A context from sample_context and `targets` independent uniform draws.
ContextBatch sample_batch(const TaskBuffer& buffer, std::size_t targets, const SamplingConfig& cfg, Rng& rng);

/// Flat little-endian f64 array of 7 values per transition.
std::string encode_transitions(std::span<const Transition> items);
std::vector<Transition> decode_transitions(std::string_view bytes, std::uint64_t offset, std::uint64_t count);

}  // namespace elue::replay
