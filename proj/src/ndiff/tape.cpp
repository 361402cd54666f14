#include "elue/ndiff/tape.hpp"

#include "elue/error.hpp"

namespace elue::ndiff {

const Tensor& Var::value() const { return tape_->value(id_); }

Var Tape::push(Tensor value, bool requires_grad, Backward backward) {
  if (swept_) throw Error("tape: cannot record after backward()");
  nodes_.push_back(Node{std::move(value), Tensor(), requires_grad, std::move(backward)});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::parameter(const ParameterSet& set, std::string_view name) {
  auto key = std::make_pair(&set, std::string(name));
  if (auto it = params_.find(key); it != params_.end()) return Var(this, it->second);
  Var v = push(set.value(name), true, nullptr);
  params_.emplace(std::move(key), v.id());
  return v;
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape_ != this) throw Error("tape: input recorded on a different tape");
    needs = needs || nodes_[in.id_].requires_grad;
  }
  return push(std::move(value), needs, needs ? std::move(backward) : nullptr);
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, Backward backward) {
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape_ != this) throw Error("tape: input recorded on a different tape");
    needs = needs || nodes_[in.id_].requires_grad;
  }
  return push(std::move(value), needs, needs ? std::move(backward) : nullptr);
}

Tensor& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw Error("tape: loss recorded on a different tape");
  if (swept_) throw Error("tape: backward() already ran");
  if (nodes_[loss.id_].value.size() != 1) {
    throw ShapeError("tape: loss must be a scalar, got shape " +
                     shape_string(nodes_[loss.id_].value.shape()));
  }
  swept_ = true;
  grad(loss.id_)[0] = 1.0;
  for (std::size_t i = loss.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
    n.backward(*this, n.grad);
  }
}

Gradients Tape::gradients(const ParameterSet& set) const {
  Gradients out;
  for (const auto& e : set.entries()) {
    auto it = params_.find(std::make_pair(&set, e.name));
    if (it != params_.end() && !nodes_[it->second].grad.empty()) {
      out.emplace(e.name, nodes_[it->second].grad);
    } else {
      out.emplace(e.name, Tensor(e.value.shape()));
    }
  }
  return out;
}

Gradients grad(Var loss, const ParameterSet& params) {
  loss.tape().backward(loss);
  return loss.tape().gradients(params);
}

}  // namespace elue::ndiff
