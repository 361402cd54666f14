#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace elue::harness {

/// Joint table p(x, y, z) with a variational table q(x | z).
struct DiscreteJoint {
  std::size_t nx = 0, ny = 0, nz = 0;
  std::vector<double> p;  // index (x * ny + y) * nz + z
  std::vector<double> q;  // index x * nz + z; each z column sums to 1

  double P(std::size_t x, std::size_t y, std::size_t z) const { return p[(x * ny + y) * nz + z]; }
  double Q(std::size_t x, std::size_t z) const { return q[x * nz + z]; }

  /// Throws ConfigError on bad sizes, negative entries or unnormalized tables.
  void validate() const;
};

struct IbBound {
  double lhs = 0.0;    // I(X; Y | Z)
  double rhs = 0.0;    // E[log p(x|y,z) / q(x|z)]
  double slack = 0.0;  // rhs - lhs
};

IbBound verify_ib_bound(const DiscreteJoint& j);
/// E_z KL(p(. | z) || q(. | z)) computed directly from the marginals.
double expected_kl(const DiscreteJoint& j);

/// Strictly positive random tables (normalized exponential draws).
DiscreteJoint random_joint(std::size_t nx, std::size_t ny, std::size_t nz, std::mt19937_64& rng);
/// Same joint with q set to the true conditional p(x | z).
DiscreteJoint with_exact_q(DiscreteJoint j);

struct IbTrials {
  std::size_t trials = 0;
  double min_slack = 0.0;
  double max_kl_gap = 0.0;  // max |slack - expected_kl|
};
IbTrials run_ib_trials(std::size_t trials, std::uint64_t seed);

}  // namespace elue::harness
