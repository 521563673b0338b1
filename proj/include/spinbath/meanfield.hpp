#pragma once

// Nonlinear single-particle layer obtained from the pair-factorized
// hierarchy: effective Hamiltonian, Bloch mean-value equations with and
// without dissipation, the tanh/sech closed form of the dissipation-free
// flow, the N = 1 linear solutions and the thermal stationary state.

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "spinbath/integrate.hpp"
#include "spinbath/liouville.hpp"
#include "spinbath/qops.hpp"

namespace spinbath::meanfield {

// Mean-value triple (<sigma_0>, <sigma_+>) with <sigma_-> implied as the
// conjugate; a physical single-particle state satisfies s0^2 + 4|s+|^2 <= 1.
struct BlochState {
  double s0 = 0.0;
  cplx s_plus = 0.0;

  double radius_squared() const { return s0 * s0 + 4.0 * std::norm(s_plus); }
  bool physical(double slack = 1e-12) const { return radius_squared() <= 1.0 + slack; }
};

// R^2 = 4 <sigma_+><sigma_-> + <sigma_0>^2, conserved by the
// dissipation-free flow.
inline double constant_of_motion(const BlochState& s) { return s.radius_squared(); }

struct MeanFieldParams {
  liouville::SystemParams base;
  double coupling = 0.0;  // (N-1) * gamma / volume

  static MeanFieldParams from(const liouville::SystemParams& p) {
    p.validate();
    return MeanFieldParams{p, (p.n_particles - 1) * p.gamma / p.volume};
  }
};

// H_ef = (omega0/2) sigma_0 + i (g/2) (<sigma_+> sigma_- - <sigma_-> sigma_+),
// hermitian by construction.
inline cmat effective_hamiltonian(const BlochState& state, const MeanFieldParams& p) {
  const cplx i_unit(0.0, 1.0);
  cmat h = 0.5 * p.base.omega0 * qops::pauli(qops::Pauli::sigma0);
  h += i_unit * (0.5 * p.coupling) *
       (state.s_plus * qops::pauli(qops::Pauli::sigma_minus) -
        std::conj(state.s_plus) * qops::pauli(qops::Pauli::sigma_plus));
  return h;
}

struct BlochDerivative {
  double ds0 = 0.0;
  cplx ds_plus = 0.0;
};

// d<sigma_0>/dt = -2 g |<sigma_->|^2 - Gamma [(2 nbar + 1) <sigma_0> + 1]
// d<sigma_+>/dt = +i omega0 <sigma_+> + (g/2) <sigma_0><sigma_+>
//                 - Gamma (2 nbar + 1)/2 <sigma_+>
// with dissipation = false the Gamma-proportional relaxation terms drop.
inline BlochDerivative meanfield_rhs(const BlochState& s, const MeanFieldParams& p,
                                     bool dissipation) {
  const cplx i_unit(0.0, 1.0);
  BlochDerivative d;
  d.ds0 = -2.0 * p.coupling * std::norm(s.s_plus);
  d.ds_plus = i_unit * p.base.omega0 * s.s_plus + 0.5 * p.coupling * s.s0 * s.s_plus;
  if (dissipation) {
    const double thermal = 2.0 * p.base.nbar + 1.0;
    d.ds0 -= p.base.gamma * (thermal * s.s0 + 1.0);
    d.ds_plus -= 0.5 * p.base.gamma * thermal * s.s_plus;
  }
  return d;
}

// Dissipation-free closed form:
//   <sigma_0(t)> = -R tanh(g R t / 2 - A),  A = atanh(<sigma_0(0)>/R)
//   <sigma_+(t)> = <sigma_+(0)> e^{+i omega0 t} cosh(A) sech(g R t / 2 - A).
// R = 0 is a fixed point and returns the initial state; |<sigma_0(0)>| = R
// is the pole of A and is rejected (the flow is constant there).
inline BlochState closed_form_no_dissipation(double t, const BlochState& init,
                                             const MeanFieldParams& p) {
  const double r = std::sqrt(constant_of_motion(init));
  if (r == 0.0) return init;
  const double ratio = init.s0 / r;
  if (std::abs(ratio) >= 1.0 - 1e-12)
    throw std::invalid_argument(
        "closed form: |<sigma_0(0)>| = R is an equilibrium point of the dissipation-free flow; "
        "the solution is the constant initial state");
  const double a = std::atanh(ratio);
  const double arg = 0.5 * p.coupling * r * t - a;
  BlochState out;
  out.s0 = -r * std::tanh(arg);
  const cplx phase = std::exp(cplx(0.0, p.base.omega0 * t));
  out.s_plus = init.s_plus * phase * (std::cosh(a) / std::cosh(arg));
  return out;
}

// N = 1 linear solutions:
//   <sigma_0(t)> = <sigma_0(0)> e^{-(2n+1)Gamma t} + (e^{-(2n+1)Gamma t} - 1)/(2n+1)
//   <sigma_+(t)> = <sigma_+(0)> e^{+i omega0 t} e^{-(2n+1)Gamma t/2}.
inline BlochState n1_solution(double t, const BlochState& init,
                              const liouville::SystemParams& p) {
  const double thermal = 2.0 * p.nbar + 1.0;
  const double decay = std::exp(-thermal * p.gamma * t);
  BlochState out;
  out.s0 = init.s0 * decay + (decay - 1.0) / thermal;
  out.s_plus = init.s_plus * std::exp(cplx(0.0, p.omega0 * t)) *
               std::exp(-0.5 * thermal * p.gamma * t);
  return out;
}

// (-1/(2 nbar + 1), 0): independent of N, set by the bath temperature alone.
inline BlochState stationary(const liouville::SystemParams& p) {
  p.validate();
  if (p.gamma == 0.0)
    throw std::invalid_argument("stationary: gamma = 0 gives no relaxation and no unique "
                                "stationary state");
  return BlochState{-1.0 / (2.0 * p.nbar + 1.0), 0.0};
}

// Excited probability 1 - eps on the pure sphere with phase 0; the standard
// figure-reproduction initial condition.
inline BlochState near_excited(double eps) {
  if (eps <= 0.0 || eps >= 1.0)
    throw std::invalid_argument("near_excited: eps must lie in (0, 1)");
  return BlochState{1.0 - 2.0 * eps, std::sqrt(eps * (1.0 - eps))};
}

inline BlochState all_excited() { return BlochState{1.0, 0.0}; }

struct Sample {
  double t = 0.0;
  BlochState state;
  double rho_ee = 0.0;
  double r_squared = 0.0;
};

struct MeanFieldTrajectory {
  std::vector<Sample> samples;
};

inline MeanFieldTrajectory evolve_meanfield(const BlochState& init, const MeanFieldParams& p,
                                            double t1, const ode::IntegratorConfig& config,
                                            const std::vector<double>& samples,
                                            bool dissipation = true) {
  if (!init.physical())
    throw std::invalid_argument("evolve_meanfield: initial state is unphysical");

  ode::OdeProblem problem;
  problem.dimension = 3;
  problem.t0 = 0.0;
  problem.t1 = t1;
  problem.y0 = {init.s0, init.s_plus.real(), init.s_plus.imag()};
  problem.rhs = [&p, dissipation](double, const std::vector<double>& y,
                                  std::vector<double>& dydt) {
    const BlochState s{y[0], cplx(y[1], y[2])};
    const BlochDerivative d = meanfield_rhs(s, p, dissipation);
    dydt = {d.ds0, d.ds_plus.real(), d.ds_plus.imag()};
  };

  ode::Trajectory traj = ode::integrate(problem, config, samples);

  MeanFieldTrajectory out;
  out.samples.reserve(traj.times.size());
  for (size_t i = 0; i < traj.times.size(); ++i) {
    Sample s;
    s.t = traj.times[i];
    s.state = BlochState{traj.states[i][0], cplx(traj.states[i][1], traj.states[i][2])};
    if (!s.state.physical(1e-6))
      throw numerical_error("evolve_meanfield: physicality violation at t = " +
                            std::to_string(s.t) + ", s0^2 + 4|s+|^2 = " +
                            std::to_string(s.state.radius_squared()));
    s.rho_ee = 0.5 * (1.0 + s.state.s0);
    s.r_squared = constant_of_motion(s.state);
    out.samples.push_back(s);
  }
  return out;
}

}  // namespace spinbath::meanfield
