#pragma once

#include "elue/ndiff/parameters.hpp"

namespace elue::ndiff {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update in place. `grads` must carry exactly the
/// entries of `params` with matching shapes.
void adam_step(ParameterSet& params, const Gradients& grads, const AdamConfig& config);

}  // namespace elue::ndiff
