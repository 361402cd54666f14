#include "elue/harness/ib_bound.hpp"

#include <algorithm>
#include <cmath>

#include "elue/error.hpp"

namespace elue::harness {

namespace {

struct Marginals {
  std::vector<double> z;   // p(z)
  std::vector<double> xz;  // p(x, z), index x * nz + z
  std::vector<double> yz;  // p(y, z), index y * nz + z
};

Marginals marginals(const DiscreteJoint& j) {
  Marginals m{std::vector<double>(j.nz, 0.0), std::vector<double>(j.nx * j.nz, 0.0),
              std::vector<double>(j.ny * j.nz, 0.0)};
  for (std::size_t x = 0; x < j.nx; ++x)
    for (std::size_t y = 0; y < j.ny; ++y)
      for (std::size_t z = 0; z < j.nz; ++z) {
        const double p = j.P(x, y, z);
        m.z[z] += p;
        m.xz[x * j.nz + z] += p;
        m.yz[y * j.nz + z] += p;
      }
  return m;
}

}  // namespace

void DiscreteJoint::validate() const {
  if (nx == 0 || ny == 0 || nz == 0) throw ConfigError("joint table needs non-empty alphabets");
  if (p.size() != nx * ny * nz || q.size() != nx * nz) throw ConfigError("joint table sizes disagree with alphabets");
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("joint table entries must be finite and non-negative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError("joint table must sum to 1 (within 1e-12)");
  for (std::size_t z = 0; z < nz; ++z) {
    double col = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
      const double v = Q(x, z);
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("q table entries must be finite and non-negative");
      col += v;
    }
    if (std::abs(col - 1.0) > 1e-12) throw ConfigError("q(. | z) must sum to 1 for every z");
  }
}

IbBound verify_ib_bound(const DiscreteJoint& j) {
  j.validate();
  const Marginals m = marginals(j);
  IbBound b;
  for (std::size_t x = 0; x < j.nx; ++x)
    for (std::size_t y = 0; y < j.ny; ++y)
      for (std::size_t z = 0; z < j.nz; ++z) {
        const double p = j.P(x, y, z);
        if (p == 0.0) continue;
        const double p_x_yz = p / m.yz[y * j.nz + z];
        const double p_x_z = m.xz[x * j.nz + z] / m.z[z];
        const double q = j.Q(x, z);
        if (q == 0.0) throw ConfigError("q(x|z) is zero where p(x,y,z) > 0; the bound is infinite");
        b.lhs += p * std::log(p_x_yz / p_x_z);
        b.rhs += p * std::log(p_x_yz / q);
      }
  b.slack = b.rhs - b.lhs;
  return b;
}

double expected_kl(const DiscreteJoint& j) {
  j.validate();
  const Marginals m = marginals(j);
  double kl = 0.0;
  for (std::size_t z = 0; z < j.nz; ++z) {
    if (m.z[z] == 0.0) continue;
    double kz = 0.0;
    for (std::size_t x = 0; x < j.nx; ++x) {
      const double px = m.xz[x * j.nz + z] / m.z[z];
      if (px > 0.0) kz += px * std::log(px / j.Q(x, z));
    }
    kl += m.z[z] * kz;
  }
  return kl;
}

DiscreteJoint random_joint(std::size_t nx, std::size_t ny, std::size_t nz, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  DiscreteJoint j{nx, ny, nz, std::vector<double>(nx * ny * nz), std::vector<double>(nx * nz)};
  double total = 0.0;
  for (auto& v : j.p) total += (v = e(rng) + 1e-3);
  for (auto& v : j.p) v /= total;
  for (std::size_t z = 0; z < nz; ++z) {
    double col = 0.0;
    for (std::size_t x = 0; x < nx; ++x) col += (j.q[x * nz + z] = e(rng) + 1e-3);
    for (std::size_t x = 0; x < nx; ++x) j.q[x * nz + z] /= col;
  }
  return j;
}

DiscreteJoint with_exact_q(DiscreteJoint j) {
  const Marginals m = marginals(j);
  for (std::size_t x = 0; x < j.nx; ++x)
    for (std::size_t z = 0; z < j.nz; ++z) j.q[x * j.nz + z] = m.xz[x * j.nz + z] / m.z[z];
  return j;
}

IbTrials run_ib_trials(std::size_t trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> size(2, 4);
  IbTrials out;
  out.trials = trials;
  out.min_slack = trials ? INFINITY : 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t nx = size(rng), ny = size(rng), nz = size(rng);
    const DiscreteJoint j = random_joint(nx, ny, nz, rng);
    const IbBound b = verify_ib_bound(j);
    out.min_slack = std::min(out.min_slack, b.slack);
    out.max_kl_gap = std::max(out.max_kl_gap, std::abs(b.slack - expected_kl(j)));
  }
  return out;
}

}  // namespace elue::harness
