#include "elue/ndiff/gaussian.hpp"

#include <cmath>
#include <numbers>

#include "elue/error.hpp"

namespace elue::ndiff {

namespace {

void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (a.size() != b.size() || a.rows() != b.rows()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

double softplus_scalar(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

double clamp_log_std(double v) { return v < kLogStdMin ? kLogStdMin : (v > kLogStdMax ? kLogStdMax : v); }

DiagGaussian::DiagGaussian(Tensor m, Tensor ls) : mean(std::move(m)), log_std(std::move(ls)) {
  require_same("gaussian", mean, log_std);
  for (auto& v : log_std.values()) v = clamp_log_std(v);
}

DiagGaussian DiagGaussian::standard(std::size_t rows, std::size_t cols) {
  return DiagGaussian(Tensor::zeros(rows, cols), Tensor::zeros(rows, cols));
}

double gaussian_log_prob(const DiagGaussian& d, const Tensor& x) {
  require_same("gaussian_log_prob", d.mean, x);
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = (x[i] - d.mean[i]) / std::exp(d.log_std[i]);
    total += -kHalfLog2Pi - d.log_std[i] - 0.5 * z * z;
  }
  return total;
}

Tensor sample_reparam(const DiagGaussian& d, const Tensor& noise) {
  require_same("sample_reparam", d.mean, noise);
  Tensor out = d.mean;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += std::exp(d.log_std[i]) * noise[i];
  return out;
}

double kl_diag_gaussians(const DiagGaussian& p, const DiagGaussian& q) {
  require_same("kl_diag_gaussians", p.mean, q.mean);
  double total = 0.0;
  for (std::size_t i = 0; i < p.mean.size(); ++i) {
    const double var_p = std::exp(2.0 * p.log_std[i]);
    const double var_q = std::exp(2.0 * q.log_std[i]);
    const double dm = p.mean[i] - q.mean[i];
    total += (q.log_std[i] - p.log_std[i]) + (var_p + dm * dm) / (2.0 * var_q) - 0.5;
  }
  return total;
}

double tanh_log_det(const Tensor& u) {
  double total = 0.0;
  for (double v : u.values()) total += 2.0 * (std::numbers::ln2 - v - softplus_scalar(-2.0 * v));
  return total;
}

Squashed tanh_squash(const Tensor& u, double log_prob_u) {
  Squashed out{u, log_prob_u - tanh_log_det(u)};
  for (auto& v : out.action.values()) v = std::tanh(v);
  return out;
}

GaussianVar gaussian_head(Var head) {
  const std::size_t width = head.value().cols();
  if (width % 2 != 0) throw ShapeError("gaussian_head: odd head width " + std::to_string(width));
  const std::size_t d = width / 2;
  return {slice_cols(head, 0, d), clamp(slice_cols(head, d, width), kLogStdMin, kLogStdMax)};
}

Var gaussian_log_prob_rows(const GaussianVar& d, Var x) {
  // -0.5 ln(2 pi) - log_std - 0.5 ((x - mean) / std)^2
  Var z = mul(sub(x, d.mean), exp(neg(d.log_std)));
  Var per = add_scalar(neg(add(d.log_std, scale(square(z), 0.5))), -kHalfLog2Pi);
  return sum_cols(per);
}

Var sample_reparam(const GaussianVar& d, Var noise) { return add(d.mean, mul(exp(d.log_std), noise)); }

Var kl_to_standard_rows(const GaussianVar& d) {
  // 0.5 (sigma^2 + mu^2 - 1) - log_std
  Var var = exp(scale(d.log_std, 2.0));
  Var per = sub(scale(add_scalar(add(var, square(d.mean)), -1.0), 0.5), d.log_std);
  return sum_cols(per);
}

Var tanh_log_det_rows(Var u) {
  Var per = scale(add_scalar(neg(add(u, softplus(scale(u, -2.0)))), std::numbers::ln2), 2.0);
  return sum_cols(per);
}

}  // namespace elue::ndiff
