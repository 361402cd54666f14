#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "elue/ndiff/parameters.hpp"
#include "elue/ndiff/tape.hpp"
#include "elue/ndiff/tensor.hpp"

namespace elue::ndiff {

using Rng = std::mt19937_64;

enum class Activation { none, relu, tanh };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view text);

/// Dense feed-forward architecture. widths = {in, hidden..., out}.
struct MlpSpec {
  std::string name;
  std::vector<std::size_t> widths;
  Activation activation = Activation::relu;
  Activation output_activation = Activation::none;

  std::size_t input_width() const { return widths.front(); }
  std::size_t output_width() const { return widths.back(); }
  std::size_t layer_count() const { return widths.size() - 1; }
  void validate() const;

  /// Parameter names "<name>.w<i>" (in x out) and "<name>.b<i>" (1 x out).
  std::string weight_name(std::size_t layer) const;
  std::string bias_name(std::size_t layer) const;
};

/// Adds the spec's weights, uniform in +-1/sqrt(fan_in), biases zero.
void init_mlp(ParameterSet& params, const MlpSpec& spec, Rng& rng);

/// Taped forward pass. With trainable == false the weights enter as constants,
/// so gradients still reach `input` but not the parameters.
Var mlp_forward(Tape& tape, const MlpSpec& spec, const ParameterSet& params, Var input,
                bool trainable = true);

/// Untaped forward pass for rollouts and targets.
Tensor mlp_forward(const MlpSpec& spec, const ParameterSet& params, const Tensor& input);

}  // namespace elue::ndiff
