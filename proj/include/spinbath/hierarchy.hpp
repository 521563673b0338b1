#pragma once

// The reduced-hierarchy layer: evaluates the exact K-particle equation of
// motion from the (K+1)-particle state and certifies, against the full-space
// generator, the trace identities that derive it. The K-equation is the one
// obtained for identical particles; its cross term assumes the state is
// symmetric under permutations of the traced particles.

#include <cmath>
#include <string>
#include <vector>

#include "spinbath/liouville.hpp"
#include "spinbath/qops.hpp"

namespace spinbath::hierarchy {

struct ReducedState {
  int k = 1;                      // particle count of the reduced state
  DensityMatrix rho;              // dim 2^k
  int n_total = 2;                // N of the underlying system
  liouville::SystemParams params; // omega0, gamma, nbar, volume

  void validate() const {
    params.validate();
    if (k < 1 || k > n_total - 1)
      throw std::invalid_argument("reduced state: require 1 <= K <= N-1");
    if (rho.dim() != (1 << k))
      throw std::invalid_argument("reduced state: rho dimension does not match K");
  }
};

enum class SpinLabel { minus, zero, plus };

inline cmat spin_label_matrix(SpinLabel lambda) {
  switch (lambda) {
    case SpinLabel::minus: return qops::pauli(qops::Pauli::sigma_minus);
    case SpinLabel::zero: return qops::pauli(qops::Pauli::sigma0);
    case SpinLabel::plus: return qops::pauli(qops::Pauli::sigma_plus);
  }
  throw std::invalid_argument("unknown spin label");
}

// Tr_{K+1..N}([S_lambda, rho_N]) collapses onto the first K particles:
// returns sum_{i<=K} [sigma_lambda(i), rho_K] after asserting that it equals
// the directly traced left-hand side. A violation above tol signals an
// algebra bug, not bad input.
inline cmat trace_identity_lambda(const DensityMatrix& rho_n, SpinLabel lambda, int k,
                                  double tol = 1e-12) {
  const int n = qops::detail::log2_dim(rho_n.rho.rows(), "trace_identity");
  if (k < 1 || k >= n) throw std::invalid_argument("trace_identity: require 1 <= K <= N-1");
  const cmat op = spin_label_matrix(lambda);

  std::vector<int> keep(k);
  for (int i = 0; i < k; ++i) keep[i] = i + 1;

  const cmat s_lambda = [&] {
    cmat s = cmat::Zero(rho_n.rho.rows(), rho_n.rho.cols());
    for (int i = 1; i <= n; ++i) s += qops::embed(op, {i, n});
    return s;
  }();
  const cmat lhs = qops::partial_trace(qops::commutator(s_lambda, rho_n.rho), keep, n);

  const cmat rho_k = qops::partial_trace(rho_n.rho, keep, n);
  cmat rhs = cmat::Zero(rho_k.rows(), rho_k.cols());
  for (int i = 1; i <= k; ++i) rhs += qops::commutator(qops::embed(op, {i, k}), rho_k);

  const double residual = max_abs(lhs - rhs);
  if (residual > tol)
    throw numerical_error("trace identity violated: residual " + std::to_string(residual));
  return rhs;
}

// Exact equation of motion for rho_K given rho_{K+1}:
//   d rho_K/dt = -i (omega0/2) sum_i [sigma_0(i), rho_K]
//     - (N-K) Gamma/(2V) sum_i ( [sigma_+(i), T_-] + h.c. )
//     - Gamma/(2V) sum_{i,i'} ( (nbar+1) [sigma_+(i), sigma_-(i') rho_K]
//                             + nbar    [sigma_-(i), sigma_+(i') rho_K] + h.c. )
// with T_- = Tr_{K+1}(sigma_-(K+1) rho_{K+1}). The h.c. of [A, B rho] is
// -[A^dag, rho B^dag]. marginal_tol bounds the allowed mismatch between
// rho_K and the trace of rho_{K+1}; closures that intentionally decouple the
// two (linear response) may relax it.
inline cmat bbgky_rhs(const ReducedState& state, const cmat& rho_k_plus_1,
                      double marginal_tol = 1e-10) {
  state.validate();
  const int k = state.k;
  const int n = state.n_total;
  const Eigen::Index dk = Eigen::Index(1) << k;
  if (rho_k_plus_1.rows() != 2 * dk || rho_k_plus_1.cols() != 2 * dk)
    throw std::invalid_argument("bbgky_rhs: rho_{K+1} must have dim 2^{K+1}");

  std::vector<int> keep(k);
  for (int i = 0; i < k; ++i) keep[i] = i + 1;
  const cmat marginal = qops::partial_trace(rho_k_plus_1, keep, k + 1);
  if (max_abs(marginal - state.rho.rho) > marginal_tol)
    throw std::invalid_argument("bbgky_rhs: inconsistent marginals between rho_K and rho_{K+1}");

  const cmat& rho_k = state.rho.rho;
  const double g2v = state.params.gamma / (2.0 * state.params.volume);
  const double nb = state.params.nbar;

  std::vector<cmat> sp(k), sm(k);
  for (int i = 0; i < k; ++i) {
    sp[i] = qops::embed(qops::pauli(qops::Pauli::sigma_plus), {i + 1, k});
    sm[i] = qops::embed(qops::pauli(qops::Pauli::sigma_minus), {i + 1, k});
  }

  const cplx minus_i(0.0, -1.0);
  cmat out = cmat::Zero(dk, dk);
  for (int i = 0; i < k; ++i) {
    const cmat s0_i = qops::embed(qops::pauli(qops::Pauli::sigma0), {i + 1, k});
    out += minus_i * (0.5 * state.params.omega0) * qops::commutator(s0_i, rho_k);
  }

  // Cross term: thermal weights cancel between the emission and absorption
  // channels, leaving the unweighted pair.
  const cmat t_minus = qops::partial_trace(
      qops::embed(qops::pauli(qops::Pauli::sigma_minus), {k + 1, k + 1}) * rho_k_plus_1, keep,
      k + 1);
  const cmat t_minus_dag = t_minus.adjoint();
  const double cross = (n - k) * g2v;
  for (int i = 0; i < k; ++i)
    out -= cross * (qops::commutator(sp[i], t_minus) - qops::commutator(sm[i], t_minus_dag));

  for (int i = 0; i < k; ++i)
    for (int ip = 0; ip < k; ++ip) {
      out -= g2v * (nb + 1.0) *
             (qops::commutator(sp[i], sm[ip] * rho_k) - qops::commutator(sm[i], rho_k * sp[ip]));
      out -= g2v * nb *
             (qops::commutator(sm[i], sp[ip] * rho_k) - qops::commutator(sp[i], rho_k * sm[ip]));
    }
  return out;
}

struct ConsistencyReport {
  int n = 0;
  int k = 0;
  double residual = 0.0;
  double tolerance = 1e-10;
  bool pass = false;
};

// || Tr_{K+1..N}(full-space RHS) - bbgky_rhs(rho_K, rho_{K+1}) ||_max.
// Passing for symmetric states certifies the whole derivation chain from the
// N-particle generator down to the K-equation.
inline ConsistencyReport reduction_consistency_check(const liouville::SystemParams& params,
                                                     const DensityMatrix& rho_n, int k) {
  params.validate();
  const int n = params.n_particles;
  if (n > 4) throw std::invalid_argument("reduction check: limited to N <= 4");
  if (rho_n.dim() != (1 << n))
    throw std::invalid_argument("reduction check: state dimension does not match N");
  if (k < 1 || k > n - 1) throw std::invalid_argument("reduction check: require 1 <= K <= N-1");

  const liouville::LindbladModel model = liouville::build_model_full(params);
  const cmat full_rhs = liouville::lindblad_rhs(model, rho_n.rho);

  std::vector<int> keep_k(k), keep_k1(k + 1);
  for (int i = 0; i < k; ++i) keep_k[i] = i + 1;
  for (int i = 0; i <= k; ++i) keep_k1[i] = i + 1;

  const cmat lhs = qops::partial_trace(full_rhs, keep_k, n);
  ReducedState st{k, DensityMatrix{qops::partial_trace(rho_n.rho, keep_k, n), rho_n.tolerance}, n,
                  params};
  const cmat rhs = bbgky_rhs(st, qops::partial_trace(rho_n.rho, keep_k1, n));

  ConsistencyReport report;
  report.n = n;
  report.k = k;
  report.residual = max_abs(lhs - rhs);
  report.pass = report.residual <= report.tolerance;
  return report;
}

}  // namespace spinbath::hierarchy
