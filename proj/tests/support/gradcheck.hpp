#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "elue/ndiff/parameters.hpp"

namespace elue::testing {

struct GradCheck {
  double max_rel_error = 0.0;
  std::string worst;
  std::size_t checked = 0;
};

// Central differences over every scalar of `params`. The relative error of an
// entry is |a - n| / max(|a|, |n|, floor); the floor keeps entries whose true
// gradient is ~0 from dividing rounding noise by zero.
inline GradCheck check_gradients(ndiff::ParameterSet& params, const ndiff::Gradients& analytic,
                                 const std::function<double()>& loss, double eps = 1e-5, double floor = 1e-6) {
  GradCheck out;
  for (auto& e : params.entries()) {
    const auto& g = analytic.at(e.name);
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      const double x0 = e.value[i];
      e.value[i] = x0 + eps;
      const double up = loss();
      e.value[i] = x0 - eps;
      const double down = loss();
      e.value[i] = x0;
      const double numeric = (up - down) / (2.0 * eps);
      const double rel = std::abs(g[i] - numeric) / std::max({std::abs(g[i]), std::abs(numeric), floor});
      if (rel > out.max_rel_error) {
        out.max_rel_error = rel;
        out.worst = e.name + "[" + std::to_string(i) + "] analytic " + std::to_string(g[i]) + " numeric " +
                    std::to_string(numeric);
      }
      ++out.checked;
    }
  }
  return out;
}

}  // namespace elue::testing
