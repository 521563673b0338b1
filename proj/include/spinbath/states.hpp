#pragma once

// Initial-state builders shared by the CLI and the test suites: product
// states in the full 2^N space and the matching spin-coherent states on the
// Dicke ladder.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "spinbath/qops.hpp"

namespace spinbath::states {

// Pure qubit a|e> + b|g> as a density matrix. Normalizes the amplitudes.
inline cmat qubit_pure(cplx a, cplx b) {
  const double norm = std::sqrt(std::norm(a) + std::norm(b));
  if (norm == 0.0) throw std::invalid_argument("qubit_pure: zero state");
  a /= norm;
  b /= norm;
  cmat rho(2, 2);
  rho << a * std::conj(a), a * std::conj(b), b * std::conj(a), b * std::conj(b);
  return rho;
}

// Excited probability 1 - eps on the pure sphere, phase 0.
inline cmat near_excited_qubit(double eps) {
  if (eps <= 0.0 || eps >= 1.0)
    throw std::invalid_argument("near_excited: eps must lie in (0, 1)");
  return qubit_pure(std::sqrt(1.0 - eps), std::sqrt(eps));
}

inline cmat product_state(const cmat& rho1, int n) {
  if (n < 1) throw std::invalid_argument("product_state: n must be >= 1");
  cmat out = rho1;
  for (int i = 1; i < n; ++i) out = qops::kron(out, rho1);
  return out;
}

inline cmat full_all_excited(int n) {
  const Eigen::Index d = Eigen::Index(1) << n;
  cmat rho = cmat::Zero(d, d);
  rho(0, 0) = 1.0;  // |e...e> is the first basis vector
  return rho;
}

inline cmat dicke_all_excited(int n) {
  cmat rho = cmat::Zero(n + 1, n + 1);
  rho(0, 0) = 1.0;  // m = +j
  return rho;
}

// The symmetric product state (a|e> + b|g>)^{tensor N} expressed on the Dicke
// ladder: amplitude sqrt(C(n,k)) a^(n-k) b^k on the level with k spins down.
// Binomial weights are evaluated in log space so large n stays finite.
inline cmat dicke_coherent(int n, cplx a, cplx b) {
  const double norm = std::sqrt(std::norm(a) + std::norm(b));
  if (norm == 0.0) throw std::invalid_argument("dicke_coherent: zero state");
  a /= norm;
  b /= norm;
  Eigen::VectorXcd amps(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double log_binom =
        0.5 * (std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
    const double mag_a = std::abs(a), mag_b = std::abs(b);
    double log_mag = log_binom;
    log_mag += (mag_a > 0.0) ? (n - k) * std::log(mag_a) : ((n - k) > 0 ? -1e300 : 0.0);
    log_mag += (mag_b > 0.0) ? k * std::log(mag_b) : (k > 0 ? -1e300 : 0.0);
    const double phase = (n - k) * std::arg(a) + k * std::arg(b);
    amps(k) = std::exp(log_mag) * cplx(std::cos(phase), std::sin(phase));
  }
  amps /= amps.norm();
  return amps * amps.adjoint();
}

}  // namespace spinbath::states
