#include "elue/ndiff/adam.hpp"

#include <cmath>

#include "elue/error.hpp"

namespace elue::ndiff {

void adam_step(ParameterSet& params, const Gradients& grads, const AdamConfig& config) {
  if (grads.size() != params.size()) {
    throw Error("adam_step: " + std::to_string(grads.size()) + " gradients for " +
                std::to_string(params.size()) + " parameters");
  }
  for (auto& e : params.entries()) {
    auto it = grads.find(e.name);
    if (it == grads.end()) throw Error("adam_step: missing gradient for '" + e.name + "'");
    const Tensor& g = it->second;
    if (!g.same_shape(e.value)) {
      throw ShapeError("adam_step: gradient for '" + e.name + "' has shape " + shape_string(g.shape()) +
                       ", parameter has " + shape_string(e.value.shape()));
    }
    if (!g.all_finite()) throw Error("adam_step: non-finite gradient for '" + e.name + "'");
  }
  for (auto& e : params.entries()) {
    const Tensor& g = grads.find(e.name)->second;
    auto& st = e.adam;
    ++st.step;
    const double t = static_cast<double>(st.step);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t i = 0; i < g.size(); ++i) {
      st.first_moment[i] = config.beta1 * st.first_moment[i] + (1.0 - config.beta1) * g[i];
      st.second_moment[i] = config.beta2 * st.second_moment[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double m_hat = st.first_moment[i] / c1;
      const double v_hat = st.second_moment[i] / c2;
      e.value[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
}

}  // namespace elue::ndiff
