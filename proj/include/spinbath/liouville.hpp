#pragma once

// Exact Sudarshan-Lindblad evolution of N spins coupled to a thermal bath:
// the full 2^N space for small N and the (N+1)-dimensional symmetric Dicke
// ladder for large N. This layer is the ground-truth oracle for the reduced
// and mean-field layers.
//
// Generator convention: with jump list [(A_k, rate_k)],
//   drho/dt = -i[H, rho] - sum_k (rate_k/2) * ( [A_k, A_k^dag rho] - [A_k^dag, rho A_k] ).
// The emission channel stores A = S_+ at rate (nbar+1)*Gamma/V, so the gain
// term carries S_- rho S_+ and the zero-temperature stationary state is the
// ground state.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "spinbath/errors.hpp"
#include "spinbath/integrate.hpp"
#include "spinbath/packing.hpp"
#include "spinbath/qops.hpp"

namespace spinbath::liouville {

struct SystemParams {
  int n_particles = 1;
  double omega0 = 1.0;  // transition frequency
  double gamma = 1.0;   // decay rate
  double nbar = 0.0;    // thermal occupation of the bath
  double volume = 1.0;  // container volume entering the collective rates

  void validate() const {
    if (n_particles < 1) throw std::invalid_argument("params: n_particles must be >= 1");
    if (omega0 < 0.0) throw std::invalid_argument("params: omega0 must be >= 0");
    if (gamma < 0.0) throw std::invalid_argument("params: gamma must be >= 0");
    if (nbar < 0.0) throw std::invalid_argument("params: nbar must be >= 0");
    if (volume <= 0.0) throw std::invalid_argument("params: volume must be > 0");
  }
};

struct Jump {
  cmat op;
  double rate = 0.0;
};

struct LindbladModel {
  cmat hamiltonian;
  std::vector<Jump> jumps;

  int dim() const { return static_cast<int>(hamiltonian.rows()); }

  void validate() const {
    if (hamiltonian.rows() != hamiltonian.cols() || hamiltonian.rows() < 1)
      throw std::invalid_argument("model: hamiltonian must be square");
    if (hermiticity_error(hamiltonian) > 1e-12)
      throw std::invalid_argument("model: hamiltonian is not hermitian to 1e-12");
    for (const Jump& j : jumps) {
      if (j.rate < 0.0) throw std::invalid_argument("model: jump rates must be >= 0");
      if (j.op.rows() != hamiltonian.rows() || j.op.cols() != hamiltonian.cols())
        throw std::invalid_argument("model: jump operator dimension mismatch");
    }
  }
};

// H = (omega0/2) S_0 with collective jumps (S_+, (nbar+1)Gamma/V) and
// (S_-, nbar*Gamma/V) on the full 2^N space.
inline LindbladModel build_model_full(const SystemParams& p, int n_max = kDefaultNMax) {
  p.validate();
  using qops::Collective;
  LindbladModel m;
  m.hamiltonian = 0.5 * p.omega0 * qops::collective(Collective::S_0, p.n_particles, n_max);
  m.jumps.push_back({qops::collective(Collective::S_plus, p.n_particles, n_max),
                     (p.nbar + 1.0) * p.gamma / p.volume});
  m.jumps.push_back({qops::collective(Collective::S_minus, p.n_particles, n_max),
                     p.nbar * p.gamma / p.volume});
  return m;
}

// Collective operators restricted to the permutation-symmetric sector with
// total spin j = N/2. Basis index k corresponds to m = j - k, so s_0 is
// diagonal with entries N, N-2, ..., -N.
struct DickeLadder {
  int n_particles = 1;
  int dim = 2;
  cmat s_plus, s_minus, s_0;
};

inline DickeLadder dicke_ladder(int n_particles) {
  if (n_particles < 1 || n_particles > 10'000)
    throw std::invalid_argument("dicke ladder: n_particles must be in [1, 10000]");
  const int d = n_particles + 1;
  const double j = 0.5 * n_particles;
  DickeLadder l;
  l.n_particles = n_particles;
  l.dim = d;
  l.s_plus = cmat::Zero(d, d);
  l.s_0 = cmat::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    const double m = j - k;
    l.s_0(k, k) = 2.0 * m;
    if (k > 0) l.s_plus(k - 1, k) = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
  }
  l.s_minus = l.s_plus.adjoint();
  return l;
}

inline LindbladModel build_model_dicke(const SystemParams& p) {
  p.validate();
  DickeLadder l = dicke_ladder(p.n_particles);
  LindbladModel m;
  m.hamiltonian = 0.5 * p.omega0 * l.s_0;
  m.jumps.push_back({std::move(l.s_plus), (p.nbar + 1.0) * p.gamma / p.volume});
  m.jumps.push_back({std::move(l.s_minus), p.nbar * p.gamma / p.volume});
  return m;
}

// drho/dt applied directly as matrix products; no superoperator is formed.
inline cmat lindblad_rhs(const LindbladModel& model, const cmat& rho) {
  if (rho.rows() != model.hamiltonian.rows() || rho.cols() != model.hamiltonian.cols())
    throw std::invalid_argument("lindblad_rhs: dimension mismatch");
  const cplx minus_i(0.0, -1.0);
  cmat out = minus_i * (model.hamiltonian * rho - rho * model.hamiltonian);
  for (const Jump& j : model.jumps) {
    if (j.rate == 0.0) continue;
    const cmat adag = j.op.adjoint();
    const cmat aadag = j.op * adag;
    out += j.rate * (adag * rho * j.op - 0.5 * (aadag * rho + rho * aadag));
  }
  return out;
}

// Dense superoperator L with vec(drho/dt) = L vec(rho), columns stacked.
// Only for dim <= 16; used to validate the RHS against matrix exponentials.
inline cmat superoperator(const LindbladModel& model) {
  const int d = model.dim();
  if (d > 16)
    throw std::invalid_argument("superoperator: dense builder limited to dim <= 16");
  const cmat id = identity(d);
  const cplx i_unit(0.0, 1.0);
  const cmat& h = model.hamiltonian;
  cmat sup = -i_unit * (qops::kron(id, h) - qops::kron(h.transpose(), id));
  for (const Jump& j : model.jumps) {
    if (j.rate == 0.0) continue;
    const cmat adag = j.op.adjoint();
    const cmat aadag = j.op * adag;
    sup += j.rate * (qops::kron(j.op.transpose(), adag) -
                     0.5 * (qops::kron(id, aadag) + qops::kron(aadag.transpose(), id)));
  }
  return sup;
}

// Prepared form of lindblad_rhs for repeated evaluation. Operators are held
// sparse: the collective and ladder operators are banded, which turns each
// RHS evaluation into O(dim^2) work instead of dense products.
class LindbladRhsEvaluator {
 public:
  explicit LindbladRhsEvaluator(const LindbladModel& model) : dim_(model.dim()) {
    h_ = model.hamiltonian.sparseView();
    for (const Jump& j : model.jumps) {
      if (j.rate == 0.0) continue;
      Channel c;
      c.rate = j.rate;
      c.a = j.op.sparseView();
      c.a_dag = j.op.adjoint().sparseView();
      c.aa_dag = (j.op * j.op.adjoint()).sparseView();
      channels_.push_back(std::move(c));
    }
    t1_.resize(dim_, dim_);
    t2_.resize(dim_, dim_);
  }

  int dim() const { return dim_; }

  void apply(const cmat& rho, cmat& out) {
    const cplx minus_i(0.0, -1.0);
    t1_.noalias() = h_ * rho;
    t1_.noalias() -= rho * h_;
    out = minus_i * t1_;
    for (const Channel& c : channels_) {
      t1_.noalias() = rho * c.a;
      t2_.noalias() = c.a_dag * t1_;
      out.noalias() += c.rate * t2_;
      t1_.noalias() = c.aa_dag * rho;
      t1_.noalias() += rho * c.aa_dag;
      out.noalias() -= (0.5 * c.rate) * t1_;
    }
  }

 private:
  struct Channel {
    Eigen::SparseMatrix<cplx> a, a_dag, aa_dag;
    double rate = 0.0;
  };
  int dim_;
  Eigen::SparseMatrix<cplx> h_;
  std::vector<Channel> channels_;
  cmat t1_, t2_;
};

struct Evolution {
  std::vector<double> times;
  std::vector<cmat> states;
  std::vector<double> trace_drifts;     // |Tr - 1| before renormalization, per sample
  std::vector<double> min_eigenvalues;  // smallest eigenvalue, per sample
};

// Integrates the master equation from t = 0 to t1 and returns the density
// matrix at each requested sample. The state is hermitized after every
// accepted step; samples are renormalized when the trace drift is below
// 1e-8 and rejected otherwise, and positivity is enforced to positivity_tol.
inline Evolution evolve(const LindbladModel& model, const DensityMatrix& rho0, double t1,
                        const ode::IntegratorConfig& config, const std::vector<double>& samples,
                        double positivity_tol = 1e-8) {
  model.validate();
  if (rho0.dim() != model.dim()) throw std::invalid_argument("evolve: state/model dimension mismatch");
  const int d = model.dim();

  auto evaluator = std::make_shared<LindbladRhsEvaluator>(model);
  auto rho_buf = std::make_shared<cmat>(cmat::Zero(d, d));
  auto drho_buf = std::make_shared<cmat>(cmat::Zero(d, d));

  ode::OdeProblem problem;
  problem.dimension = 2 * d * d;
  problem.t0 = 0.0;
  problem.t1 = t1;
  problem.y0 = pack_complex(rho0.rho);
  problem.rhs = [evaluator, rho_buf, drho_buf, d](double, const std::vector<double>& y,
                                                  std::vector<double>& dydt) {
    unpack_complex(y, *rho_buf);
    evaluator->apply(*rho_buf, *drho_buf);
    dydt.assign(reinterpret_cast<const double*>(drho_buf->data()),
                reinterpret_cast<const double*>(drho_buf->data()) + 2 * d * d);
  };
  problem.post_step = [d](double, std::vector<double>& y) { hermitize_packed(y, d); };

  ode::Trajectory traj = ode::integrate(problem, config, samples);

  Evolution out;
  out.times = traj.times;
  out.states.reserve(traj.states.size());
  for (size_t i = 0; i < traj.states.size(); ++i) {
    cmat rho = unpack_complex(traj.states[i], d);
    const double tr_drift = std::abs(rho.trace() - cplx(1.0, 0.0));
    if (tr_drift >= 1e-8)
      throw numerical_error("evolve: trace drift " + std::to_string(tr_drift) + " at t = " +
                            std::to_string(traj.times[i]) + " exceeds the renormalization bound");
    rho /= rho.trace().real();
    const double min_eig = min_eigenvalue(rho);
    if (min_eig < -positivity_tol)
      throw numerical_error("evolve: positivity violation, min eigenvalue " +
                            std::to_string(min_eig) + " at t = " + std::to_string(traj.times[i]));
    out.trace_drifts.push_back(tr_drift);
    out.min_eigenvalues.push_back(min_eig);
    out.states.push_back(std::move(rho));
  }
  return out;
}

struct ExpectationTable {
  std::vector<double> times;
  std::vector<std::string> names;
  std::vector<std::vector<cplx>> values;  // values[sample][op]
};

inline ExpectationTable observables(const Evolution& evolution,
                                    const std::vector<std::pair<std::string, cmat>>& ops) {
  ExpectationTable out;
  out.times = evolution.times;
  for (const auto& [name, op] : ops) out.names.push_back(name);
  out.values.reserve(evolution.states.size());
  for (const cmat& rho : evolution.states) {
    std::vector<cplx> row;
    row.reserve(ops.size());
    for (const auto& [name, op] : ops) row.push_back(qops::expectation(rho, op));
    out.values.push_back(std::move(row));
  }
  return out;
}

// Excited-state probability of one representative particle, from the
// per-particle inversion <S_0>/N.
inline double excited_probability(double s0_per_particle) {
  return 0.5 * (1.0 + s0_per_particle);
}

}  // namespace spinbath::liouville
