#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "elue/ndiff/tensor.hpp"

namespace elue::ndiff {

struct AdamState {
  Tensor first_moment;
  Tensor second_moment;
  std::uint64_t step = 0;
};

/// Named, ordered collection of trainable tensors with per-entry optimizer
/// state. Entry order is insertion order and fixes every iteration order
/// downstream (serialization, optimizer updates).
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    AdamState adam;
  };

  void add(std::string name, Tensor value);
  bool contains(std::string_view name) const;

  const Tensor& value(std::string_view name) const { return entry(name).value; }
  Tensor& value(std::string_view name) { return entry(name).value; }
  const Entry& entry(std::string_view name) const;
  Entry& entry(std::string_view name);

  std::span<const Entry> entries() const noexcept { return entries_; }
  std::span<Entry> entries() noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const noexcept;

  /// Drops optimizer moments and step counts, keeping values.
  void reset_optimizer();

  friend bool operator==(const ParameterSet& a, const ParameterSet& b);

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

using Gradients = std::map<std::string, Tensor, std::less<>>;

/// Flattened concatenation of all values in entry order.
std::vector<double> flatten(const ParameterSet& params);

}  // namespace elue::ndiff
