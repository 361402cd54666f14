#include <cmath>
#include <string>

#include "eigen_view.hpp"
#include "elue/error.hpp"
#include "elue/ndiff/tape.hpp"

namespace elue::ndiff {

using detail::view;

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

Tensor like(const Tensor& t) { return Tensor::zeros(t.rows(), t.cols()); }

// Applies an elementwise function and records a backward pass of the form
// grad_in += grad_out * d(in, out).
template <class F, class D>
Var unary(Var a, F f, D d) {
  const Tensor& x = a.value();
  Tensor out = like(x);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  const auto ia = a.id();
  return a.tape().record(std::move(out), {a}, [ia, d](Tape& t, const Tensor& g) {
    const Tensor& xin = t.value(ia);
    Tensor& gx = t.grad(ia);
    for (std::size_t i = 0; i < xin.size(); ++i) gx[i] += g[i] * d(xin[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.cols() != y.rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + shape_string(x.shape()) + " * " +
                     shape_string(y.shape()));
  }
  Tensor out = Tensor::zeros(x.rows(), y.cols());
  view(out).noalias() = view(x) * view(y);
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, const Tensor& g) {
    if (t.requires_grad(ia)) view(t.grad(ia)).noalias() += view(g) * view(t.value(ib)).transpose();
    if (t.requires_grad(ib)) view(t.grad(ib)).noalias() += view(t.value(ia)).transpose() * view(g);
  });
}

Var linear(Var x, Var w, Var b) {
  const Tensor& in = x.value();
  const Tensor& wt = w.value();
  const Tensor& bt = b.value();
  if (in.cols() != wt.rows() || bt.rows() != 1 || bt.cols() != wt.cols()) {
    throw ShapeError("linear: incompatible shapes input " + shape_string(in.shape()) + ", weight " +
                     shape_string(wt.shape()) + ", bias " + shape_string(bt.shape()));
  }
  Tensor out = Tensor::zeros(in.rows(), wt.cols());
  auto o = view(out);
  o.noalias() = view(in) * view(wt);
  o.rowwise() += view(bt).row(0);
  const auto ix = x.id(), iw = w.id(), ibias = b.id();
  return x.tape().record(std::move(out), {x, w, b}, [ix, iw, ibias](Tape& t, const Tensor& g) {
    if (t.requires_grad(ix)) view(t.grad(ix)).noalias() += view(g) * view(t.value(iw)).transpose();
    if (t.requires_grad(iw)) view(t.grad(iw)).noalias() += view(t.value(ix)).transpose() * view(g);
    if (t.requires_grad(ibias)) view(t.grad(ibias)).row(0) += view(g).colwise().sum();
  });
}

Var add(Var a, Var b) {
  require_same_shape("add", a.value(), b.value());
  Tensor out = a.value();
  view(out) += view(b.value());
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, const Tensor& g) {
    if (t.requires_grad(ia)) view(t.grad(ia)) += view(g);
    if (t.requires_grad(ib)) view(t.grad(ib)) += view(g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a.value(), b.value());
  Tensor out = a.value();
  view(out) -= view(b.value());
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, const Tensor& g) {
    if (t.requires_grad(ia)) view(t.grad(ia)) += view(g);
    if (t.requires_grad(ib)) view(t.grad(ib)) -= view(g);
  });
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a.value(), b.value());
  Tensor out = a.value();
  view(out).array() *= view(b.value()).array();
  const auto ia = a.id(), ib = b.id();
  return a.tape().record(std::move(out), {a, b}, [ia, ib](Tape& t, const Tensor& g) {
    if (t.requires_grad(ia)) view(t.grad(ia)).array() += view(g).array() * view(t.value(ib)).array();
    if (t.requires_grad(ib)) view(t.grad(ib)).array() += view(g).array() * view(t.value(ia)).array();
  });
}

Var scale(Var a, double factor) {
  return unary(
      a, [factor](double x) { return factor * x; }, [factor](double) { return factor; });
}

Var add_scalar(Var a, double offset) {
  return unary(
      a, [offset](double x) { return x + offset; }, [](double) { return 1.0; });
}

Var neg(Var a) { return scale(a, -1.0); }

Var relu(Var a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double x) {
        const double y = std::tanh(x);
        return 1.0 - y * y;
      });
}

Var exp(Var a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var softplus(Var a) {
  return unary(
      a, [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
      [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

Var square(Var a) {
  return unary(
      a, [](double x) { return x * x; }, [](double x) { return 2.0 * x; });
}

Var clamp(Var a, double lo, double hi) {
  return unary(
      a, [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
      [lo, hi](double x) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var sum(Var a) {
  const Tensor& x = a.value();
  double s = 0.0;
  for (double v : x.values()) s += v;
  const auto ia = a.id();
  return a.tape().record(Tensor::scalar(s), {a}, [ia](Tape& t, const Tensor& g) {
    view(t.grad(ia)).array() += g[0];
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var sum_rows(Var a) {
  const Tensor& x = a.value();
  Tensor out = Tensor::zeros(1, x.cols());
  // Row-by-row accumulation fixes the summation order.
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) out[c] += x(r, c);
  }
  const auto ia = a.id();
  return a.tape().record(std::move(out), {a}, [ia](Tape& t, const Tensor& g) {
    view(t.grad(ia)).rowwise() += view(g).row(0);
  });
}

Var sum_cols(Var a) {
  const Tensor& x = a.value();
  Tensor out = Tensor::zeros(x.rows(), 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) s += x(r, c);
    out[r] = s;
  }
  const auto ia = a.id();
  return a.tape().record(std::move(out), {a}, [ia](Tape& t, const Tensor& g) {
    view(t.grad(ia)).colwise() += view(g).col(0);
  });
}

Var broadcast_rows(Var a, std::size_t n) {
  const Tensor& x = a.value();
  if (x.rows() != 1) throw ShapeError("broadcast_rows: expected a single row, got " + shape_string(x.shape()));
  if (n == 0) throw ShapeError("broadcast_rows: row count must be positive");
  Tensor out = Tensor::zeros(n, x.cols());
  view(out).rowwise() = view(x).row(0);
  const auto ia = a.id();
  return a.tape().record(std::move(out), {a}, [ia](Tape& t, const Tensor& g) {
    auto gx = view(t.grad(ia));
    const auto gv = view(g);
    for (Eigen::Index r = 0; r < gv.rows(); ++r) gx.row(0) += gv.row(r);
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t n = parts.front().value().rows();
  std::size_t width = 0;
  for (const Var& p : parts) {
    if (p.value().rows() != n) {
      throw ShapeError("concat_cols: row count mismatch, " + std::to_string(n) + " vs " +
                       std::to_string(p.value().rows()));
    }
    width += p.value().cols();
  }
  Tensor out = Tensor::zeros(n, width);
  std::vector<std::size_t> ids;
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const auto w = static_cast<Eigen::Index>(p.value().cols());
    view(out).middleCols(static_cast<Eigen::Index>(offset), w) = view(p.value());
    ids.push_back(p.id());
    offsets.push_back(offset);
    offset += p.value().cols();
  }
  return parts.front().tape().record(std::move(out), parts, [ids, offsets](Tape& t, const Tensor& g) {
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!t.requires_grad(ids[k])) continue;
      Tensor& gk = t.grad(ids[k]);
      view(gk) += view(g).middleCols(static_cast<Eigen::Index>(offsets[k]),
                                     static_cast<Eigen::Index>(gk.cols()));
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  const Tensor& x = a.value();
  if (begin >= end || end > x.cols()) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") outside " + shape_string(x.shape()));
  }
  Tensor out = Tensor::zeros(x.rows(), end - begin);
  view(out) = view(x).middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
  const auto ia = a.id();
  return a.tape().record(std::move(out), {a}, [ia, begin](Tape& t, const Tensor& g) {
    view(t.grad(ia)).middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(g.cols())) +=
        view(g);
  });
}

}  // namespace elue::ndiff

namespace elue::ndiff {

namespace {

std::size_t total_rows(const std::vector<std::size_t>& lengths, const char* op) {
  std::size_t n = 0;
  for (auto l : lengths) {
    if (l == 0) throw ShapeError(std::string(op) + ": empty segment");
    n += l;
  }
  return n;
}

}  // namespace

Var segment_sum_rows(Var a, const std::vector<std::size_t>& lengths) {
  const Tensor& x = a.value();
  if (total_rows(lengths, "segment_sum_rows") != x.rows()) {
    throw ShapeError("segment_sum_rows: segments cover a different row count than " + shape_string(x.shape()));
  }
  Tensor out = Tensor::zeros(lengths.size(), x.cols());
  std::size_t r = 0;
  for (std::size_t g = 0; g < lengths.size(); ++g) {
    for (std::size_t k = 0; k < lengths[g]; ++k, ++r) {
      for (std::size_t c = 0; c < x.cols(); ++c) out(g, c) += x(r, c);
    }
  }
  const auto ia = a.id();
  return a.tape().record(std::move(out), {a}, [ia, lengths](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad(ia);
    std::size_t row = 0;
    for (std::size_t s = 0; s < lengths.size(); ++s) {
      for (std::size_t k = 0; k < lengths[s]; ++k, ++row) {
        for (std::size_t c = 0; c < gx.cols(); ++c) gx(row, c) += g(s, c);
      }
    }
  });
}

Var repeat_rows(Var a, const std::vector<std::size_t>& lengths) {
  const Tensor& x = a.value();
  if (lengths.size() != x.rows()) {
    throw ShapeError("repeat_rows: " + std::to_string(lengths.size()) + " counts for " + shape_string(x.shape()));
  }
  Tensor out = Tensor::zeros(total_rows(lengths, "repeat_rows"), x.cols());
  std::size_t r = 0;
  for (std::size_t g = 0; g < lengths.size(); ++g) {
    for (std::size_t k = 0; k < lengths[g]; ++k, ++r) {
      for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = x(g, c);
    }
  }
  const auto ia = a.id();
  return a.tape().record(std::move(out), {a}, [ia, lengths](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad(ia);
    std::size_t row = 0;
    for (std::size_t s = 0; s < lengths.size(); ++s) {
      for (std::size_t k = 0; k < lengths[s]; ++k, ++row) {
        for (std::size_t c = 0; c < gx.cols(); ++c) gx(s, c) += g(row, c);
      }
    }
  });
}

}  // namespace elue::ndiff
