#include "elue/ndiff/mlp.hpp"

#include <cmath>

#include "eigen_view.hpp"
#include "elue/error.hpp"

namespace elue::ndiff {

using detail::view;

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::none:
      return "none";
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
  }
  return "none";
}

Activation parse_activation(std::string_view text) {
  if (text == "none") return Activation::none;
  if (text == "relu") return Activation::relu;
  if (text == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + std::string(text) + "'");
}

void MlpSpec::validate() const {
  if (widths.size() < 2) throw ShapeError("mlp '" + name + "': needs at least two widths");
  for (auto w : widths) {
    if (w == 0) throw ShapeError("mlp '" + name + "': widths must be positive");
  }
}

std::string MlpSpec::weight_name(std::size_t layer) const { return name + ".w" + std::to_string(layer); }
std::string MlpSpec::bias_name(std::size_t layer) const { return name + ".b" + std::to_string(layer); }

void init_mlp(ParameterSet& params, const MlpSpec& spec, Rng& rng) {
  spec.validate();
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const std::size_t in = spec.widths[l];
    const std::size_t out = spec.widths[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor w = Tensor::zeros(in, out);
    for (auto& v : w.values()) v = dist(rng);
    params.add(spec.weight_name(l), std::move(w));
    params.add(spec.bias_name(l), Tensor::zeros(1, out));
  }
}

namespace {

void check_input(const MlpSpec& spec, std::size_t layer, const Tensor& weight, std::size_t got) {
  if (weight.rows() != got) {
    throw ShapeError("mlp '" + spec.name + "' layer " + std::to_string(layer) + ": expected input width " +
                     std::to_string(weight.rows()) + ", got " + std::to_string(got));
  }
}

Var activate(Var x, Activation a) {
  switch (a) {
    case Activation::relu:
      return relu(x);
    case Activation::tanh:
      return tanh(x);
    case Activation::none:
      break;
  }
  return x;
}

void activate_in_place(Tensor& x, Activation a) {
  switch (a) {
    case Activation::relu:
      for (auto& v : x.values()) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::tanh:
      for (auto& v : x.values()) v = std::tanh(v);
      break;
    case Activation::none:
      break;
  }
}

}  // namespace

Var mlp_forward(Tape& tape, const MlpSpec& spec, const ParameterSet& params, Var input, bool trainable) {
  spec.validate();
  Var h = input;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const Tensor& w = params.value(spec.weight_name(l));
    check_input(spec, l, w, h.value().cols());
    Var wv = trainable ? tape.parameter(params, spec.weight_name(l)) : tape.constant(w);
    Var bv = trainable ? tape.parameter(params, spec.bias_name(l))
                       : tape.constant(params.value(spec.bias_name(l)));
    h = linear(h, wv, bv);
    h = activate(h, l + 1 == spec.layer_count() ? spec.output_activation : spec.activation);
  }
  return h;
}

Tensor mlp_forward(const MlpSpec& spec, const ParameterSet& params, const Tensor& input) {
  spec.validate();
  Tensor h = input;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const Tensor& w = params.value(spec.weight_name(l));
    const Tensor& b = params.value(spec.bias_name(l));
    check_input(spec, l, w, h.cols());
    Tensor out = Tensor::zeros(h.rows(), w.cols());
    auto o = view(out);
    o.noalias() = view(h) * view(w);
    o.rowwise() += view(b).row(0);
    activate_in_place(out, l + 1 == spec.layer_count() ? spec.output_activation : spec.activation);
    h = std::move(out);
  }
  return h;
}

}  // namespace elue::ndiff
