#pragma once

// Shared helpers for the unit and acceptance suites: seeded random states
// (G G^dag / Tr, complex Gaussian G), permutation symmetrization, and small
// comparison utilities. Test-only code; the library does not depend on it.

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "spinbath/meanfield.hpp"
#include "spinbath/qops.hpp"

namespace testsupport {

using spinbath::cmat;
using spinbath::cplx;

inline cmat random_density(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  cmat g(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) g(r, c) = cplx(gauss(rng), gauss(rng));
  cmat rho = g * g.adjoint();
  rho /= rho.trace().real();
  return rho;
}

inline cmat random_matrix(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  cmat g(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c) g(r, c) = cplx(gauss(rng), gauss(rng));
  return g;
}

// Uniform physical Bloch state, optionally bounded away from the poles of
// the closed-form solution (|s0|/R <= max_axis_ratio).
inline spinbath::meanfield::BlochState random_bloch(std::mt19937_64& rng,
                                                    double max_axis_ratio = 1.0) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (;;) {
    const double s0 = 2.0 * uni(rng) - 1.0;
    const double phi = 2.0 * M_PI * uni(rng);
    const double r = 0.5 * uni(rng) * std::sqrt(std::max(0.0, 1.0 - s0 * s0));
    spinbath::meanfield::BlochState s{s0, r * cplx(std::cos(phi), std::sin(phi))};
    const double radius = std::sqrt(s.radius_squared());
    if (radius == 0.0) continue;
    if (std::abs(s0) / radius <= max_axis_ratio) return s;
  }
}

// Relabels the particles: new site j carries the bit of old site perm[j-1].
inline cmat permute_sites(const cmat& m, const std::vector<int>& perm, int n) {
  const Eigen::Index d = Eigen::Index(1) << n;
  std::vector<Eigen::Index> map(d);
  for (Eigen::Index old = 0; old < d; ++old) {
    Eigen::Index idx = 0;
    for (int j = 1; j <= n; ++j) {
      const Eigen::Index bit = (old >> (n - perm[j - 1])) & 1;
      idx |= bit << (n - j);
    }
    map[old] = idx;
  }
  cmat out(d, d);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c) out(map[r], map[c]) = m(r, c);
  return out;
}

// Average over all n! particle relabelings; the result is exchange-symmetric
// and still a valid density matrix. The reduced K-equation assumes identical
// particles, so its random test states must come symmetrized.
inline cmat symmetrize(const cmat& rho, int n) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 1);
  cmat acc = cmat::Zero(rho.rows(), rho.cols());
  int count = 0;
  do {
    acc += permute_sites(rho, perm, n);
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return acc / static_cast<double>(count);
}

inline cmat random_symmetric_density(int n_sites, std::mt19937_64& rng) {
  return symmetrize(random_density(1 << n_sites, rng), n_sites);
}

inline double max_abs_diff(const cmat& a, const cmat& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testsupport
