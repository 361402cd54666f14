#pragma once

#include "elue/ndiff/tape.hpp"
#include "elue/ndiff/tensor.hpp"

namespace elue::ndiff {

inline constexpr double kLogStdMin = -10.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

double clamp_log_std(double v);

/// Diagonal Gaussian; log_std is clamped to [kLogStdMin, kLogStdMax] on construction.
struct DiagGaussian {
  Tensor mean;
  Tensor log_std;

  DiagGaussian() = default;
  DiagGaussian(Tensor mean, Tensor log_std);

  static DiagGaussian standard(std::size_t rows, std::size_t cols);
};

/// Sum over all elements of the elementwise log-density.
double gaussian_log_prob(const DiagGaussian& d, const Tensor& x);
/// mean + exp(log_std) * noise.
Tensor sample_reparam(const DiagGaussian& d, const Tensor& noise);
/// Closed-form KL(p || q), summed over elements.
double kl_diag_gaussians(const DiagGaussian& p, const DiagGaussian& q);

/// sum_i log(1 - tanh(u_i)^2), evaluated as sum_i 2 (ln 2 - u_i - softplus(-2 u_i)).
double tanh_log_det(const Tensor& u);

struct Squashed {
  Tensor action;
  double log_prob = 0.0;
};
Squashed tanh_squash(const Tensor& u, double log_prob_u);

// Taped counterparts. Rows are independent samples.
struct GaussianVar {
  Var mean;
  Var log_std;
};

/// Splits a head output (n x 2d) into mean (first d columns) and clamped log_std.
GaussianVar gaussian_head(Var head);
/// Per-row log-density, n x 1.
Var gaussian_log_prob_rows(const GaussianVar& d, Var x);
Var sample_reparam(const GaussianVar& d, Var noise);
/// Per-row KL(d || N(0, I)), n x 1.
Var kl_to_standard_rows(const GaussianVar& d);
/// Per-row sum_i log(1 - tanh(u_i)^2), n x 1.
Var tanh_log_det_rows(Var u);

}  // namespace elue::ndiff
