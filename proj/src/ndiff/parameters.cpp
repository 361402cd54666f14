#include "elue/ndiff/parameters.hpp"

#include "elue/error.hpp"

namespace elue::ndiff {

void ParameterSet::add(std::string name, Tensor value) {
  if (index_.contains(name)) throw Error("parameter set: duplicate entry '" + name + "'");
  if (!value.all_finite()) throw Error("parameter set: non-finite values in '" + name + "'");
  AdamState adam{Tensor(value.shape()), Tensor(value.shape()), 0};
  index_.emplace(name, entries_.size());
  entries_.push_back(Entry{std::move(name), std::move(value), std::move(adam)});
}

bool ParameterSet::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

const ParameterSet::Entry& ParameterSet::entry(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("parameter set: no entry '" + std::string(name) + "'");
  return entries_[it->second];
}

ParameterSet::Entry& ParameterSet::entry(std::string_view name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("parameter set: no entry '" + std::string(name) + "'");
  return entries_[it->second];
}

std::size_t ParameterSet::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

void ParameterSet::reset_optimizer() {
  for (auto& e : entries_) e.adam = AdamState{Tensor(e.value.shape()), Tensor(e.value.shape()), 0};
}

bool operator==(const ParameterSet& a, const ParameterSet& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  for (std::size_t i = 0; i < a.entries_.size(); ++i) {
    const auto& x = a.entries_[i];
    const auto& y = b.entries_[i];
    if (x.name != y.name || x.value != y.value || x.adam.first_moment != y.adam.first_moment ||
        x.adam.second_moment != y.adam.second_moment || x.adam.step != y.adam.step) {
      return false;
    }
  }
  return true;
}

std::vector<double> flatten(const ParameterSet& params) {
  std::vector<double> out;
  out.reserve(params.scalar_count());
  for (const auto& e : params.entries()) out.insert(out.end(), e.value.values().begin(), e.value.values().end());
  return out;
}

}  // namespace elue::ndiff
