#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "spinbath/liouville.hpp"
#include "spinbath/meanfield.hpp"
#include "spinbath/packing.hpp"
#include "spinbath/states.hpp"
#include "support.hpp"

using namespace spinbath;
using liouville::SystemParams;
using meanfield::BlochState;
using meanfield::MeanFieldParams;
using qops::Pauli;
using testsupport::max_abs_diff;

namespace {

MeanFieldParams params_for(int n, double gamma = 1.0, double nbar = 0.0, double omega0 = 1.0) {
  return MeanFieldParams::from(SystemParams{n, omega0, gamma, nbar, 1.0});
}

}  // namespace

TEST_CASE("effective hamiltonian", "[meanfield]") {
  SECTION("vanishing dipole leaves the free Hamiltonian") {
    const cmat h = meanfield::effective_hamiltonian({0.4, 0.0}, params_for(10));
    CHECK(max_abs_diff(h, 0.5 * qops::pauli(Pauli::sigma0)) == 0.0);
  }

  SECTION("N = 1 has no mean-field term for any state") {
    const cmat h = meanfield::effective_hamiltonian({0.1, cplx(0.3, -0.2)}, params_for(1));
    CHECK(max_abs_diff(h, 0.5 * qops::pauli(Pauli::sigma0)) == 0.0);
  }

  SECTION("hand-computed matrix at g = 2, omega0 = 0") {
    const cmat h = meanfield::effective_hamiltonian({0.0, 0.5}, params_for(3, 1.0, 0.0, 0.0));
    cmat expected(2, 2);
    expected << 0.0, cplx(0.0, -0.5), cplx(0.0, 0.5), 0.0;
    CHECK(max_abs_diff(h, expected) <= 1e-16);
    CHECK(hermiticity_error(h) == 0.0);
  }
}

TEST_CASE("mean-field equations of motion", "[meanfield]") {
  SECTION("the stationary state is an exact fixed point, independent of N") {
    for (int n : {1, 2, 20, 40}) {
      for (double nbar : {0.0, 0.5, 2.0}) {
        const auto p = params_for(n, 1.0, nbar);
        const BlochState st = meanfield::stationary(p.base);
        const auto d = meanfield::meanfield_rhs(st, p, true);
        CHECK(std::abs(d.ds0) <= 1e-15);
        CHECK(std::abs(d.ds_plus) == 0.0);
      }
    }
  }

  SECTION("no dipole, no dissipation: frozen") {
    const auto d = meanfield::meanfield_rhs({0.77, 0.0}, params_for(15), false);
    CHECK(d.ds0 == 0.0);
    CHECK(std::abs(d.ds_plus) == 0.0);
  }

  SECTION("fully excited N = 1 decays at rate 2 Gamma from the pole") {
    const auto d = meanfield::meanfield_rhs({1.0, 0.0}, params_for(1), true);
    CHECK(d.ds0 == -2.0);
  }
}

TEST_CASE("constant of motion", "[meanfield]") {
  CHECK(meanfield::constant_of_motion({1.0, 0.0}) == 1.0);
  CHECK(meanfield::constant_of_motion({0.6, 0.4}) == Catch::Approx(1.0).margin(1e-15));
  CHECK(meanfield::constant_of_motion({-1.0 / 3.0, 0.0}) ==
        Catch::Approx(1.0 / 9.0).margin(1e-16));
}

TEST_CASE("closed-form dissipation-free solution", "[meanfield]") {
  const auto p = params_for(20);
  const BlochState init = meanfield::near_excited(1e-3);

  SECTION("t = 0 returns the initial state") {
    const BlochState s = meanfield::closed_form_no_dissipation(0.0, init, p);
    CHECK(std::abs(s.s0 - init.s0) <= 1e-14);
    CHECK(std::abs(s.s_plus - init.s_plus) <= 1e-14);
  }

  SECTION("the flow relaxes to (-R, 0)") {
    const double r = std::sqrt(meanfield::constant_of_motion(init));
    const BlochState s = meanfield::closed_form_no_dissipation(1e3, init, p);
    CHECK(std::abs(s.s0 + r) <= 1e-12);
    CHECK(std::abs(s.s_plus) <= 1e-12);
  }

  SECTION("matches an independent integration of the dissipation-free equations") {
    const BlochState start{0.998, std::sqrt((1.0 - 0.998 * 0.998) / 4.0)};
    ode::OdeProblem prob;
    prob.dimension = 3;
    prob.t0 = 0.0;
    prob.t1 = 2.0;
    prob.y0 = {start.s0, start.s_plus.real(), start.s_plus.imag()};
    prob.rhs = [&p](double, const std::vector<double>& y, std::vector<double>& dydt) {
      const auto d = meanfield::meanfield_rhs({y[0], cplx(y[1], y[2])}, p, false);
      dydt = {d.ds0, d.ds_plus.real(), d.ds_plus.imag()};
    };
    ode::IntegratorConfig cfg;
    cfg.rtol = 1e-11;
    cfg.atol = 1e-13;
    const auto traj = ode::integrate(prob, cfg, {0.5, 1.0, 2.0});
    for (size_t i = 0; i < traj.times.size(); ++i) {
      const BlochState s = meanfield::closed_form_no_dissipation(traj.times[i], start, p);
      CHECK(std::abs(s.s0 - traj.states[i][0]) <= 1e-6);
      CHECK(std::abs(s.s_plus - cplx(traj.states[i][1], traj.states[i][2])) <= 1e-6);
    }
  }

  SECTION("closed form satisfies the equations of motion (finite differences)") {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> tdist(0.05, 3.0);
    const double h = 1e-5;
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const BlochState s0 = testsupport::random_bloch(rng, 0.99);
      const double t = tdist(rng);
      const BlochState before = meanfield::closed_form_no_dissipation(t - h, s0, p);
      const BlochState at = meanfield::closed_form_no_dissipation(t, s0, p);
      const BlochState after = meanfield::closed_form_no_dissipation(t + h, s0, p);
      const auto d = meanfield::meanfield_rhs(at, p, false);
      CHECK(std::abs((after.s0 - before.s0) / (2.0 * h) - d.ds0) <= 1e-6);
      CHECK(std::abs((after.s_plus - before.s_plus) / (2.0 * h) - d.ds_plus) <= 1e-6);
      ++checked;
    }
    CHECK(checked == 100);
  }

  SECTION("edge cases") {
    const BlochState origin{0.0, 0.0};
    const BlochState back = meanfield::closed_form_no_dissipation(3.0, origin, p);
    CHECK(back.s0 == 0.0);
    CHECK(std::abs(back.s_plus) == 0.0);
    CHECK_THROWS_AS(meanfield::closed_form_no_dissipation(1.0, {0.5, 0.0}, p),
                    std::invalid_argument);
  }
}

TEST_CASE("N = 1 analytic solution", "[meanfield]") {
  const SystemParams p{1, 1.0, 1.0, 0.5, 1.0};

  SECTION("long-time limit") {
    const BlochState s = meanfield::n1_solution(60.0, meanfield::near_excited(0.1), p);
    CHECK(std::abs(s.s0 + 0.5) <= 1e-12);
    CHECK(std::abs(s.s_plus) <= 1e-12);
  }

  SECTION("zero temperature decay of the excited state") {
    const SystemParams p0{1, 1.0, 1.0, 0.0, 1.0};
    for (double t : {0.0, 0.5, 1.0, 3.0}) {
      const BlochState s = meanfield::n1_solution(t, {1.0, 0.0}, p0);
      CHECK(std::abs(0.5 * (1.0 + s.s0) - std::exp(-t)) <= 1e-14);
    }
  }

  SECTION("matches the exact single-particle master equation") {
    const BlochState init = meanfield::near_excited(0.1);
    const cmat rho0 = states::near_excited_qubit(0.1);
    const auto samples = ode::linspace(0.0, 6.0, 20);
    ode::IntegratorConfig cfg;
    cfg.rtol = 1e-11;
    cfg.atol = 1e-13;
    const auto evo = liouville::evolve(liouville::build_model_full(p),
                                       DensityMatrix::checked(rho0), 6.0, cfg, samples);
    for (size_t i = 0; i < samples.size(); ++i) {
      const BlochState s = meanfield::n1_solution(samples[i], init, p);
      const double s0 = qops::expectation(evo.states[i], qops::pauli(Pauli::sigma0)).real();
      const cplx sp = qops::expectation(evo.states[i], qops::pauli(Pauli::sigma_plus));
      CHECK(std::abs(s.s0 - s0) <= 1e-8);
      CHECK(std::abs(s.s_plus - sp) <= 1e-8);
    }
  }
}

TEST_CASE("stationary state", "[meanfield]") {
  CHECK(meanfield::stationary({5, 1.0, 1.0, 0.0, 1.0}).s0 == -1.0);
  CHECK(meanfield::stationary({5, 1.0, 1.0, 0.5, 1.0}).s0 == -0.5);
  CHECK(std::abs(meanfield::stationary({5, 1.0, 1.0, 1e6, 1.0}).s0) <= 1e-6);
  CHECK_THROWS_AS(meanfield::stationary({5, 1.0, 0.0, 0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("mean-field evolution", "[meanfield]") {
  SECTION("the exactly excited state is an unstable equilibrium: constant trajectory") {
    const auto traj = meanfield::evolve_meanfield({1.0, 0.0}, params_for(40), 5.0,
                                                  ode::IntegratorConfig{},
                                                  ode::linspace(0.0, 5.0, 11), false);
    for (const auto& s : traj.samples) {
      CHECK(s.state.s0 == 1.0);
      CHECK(std::abs(s.state.s_plus) == 0.0);
      CHECK(s.rho_ee == 1.0);
    }
  }

  SECTION("larger N collapses earlier in the dissipation-free flow") {
    const BlochState init = meanfield::near_excited(1e-3);
    auto first_drop = [&](int n) {
      const auto samples = ode::linspace(0.0, 5.0, 501);
      const auto traj = meanfield::evolve_meanfield(init, params_for(n), 5.0,
                                                    ode::IntegratorConfig{}, samples, false);
      for (const auto& s : traj.samples)
        if (s.rho_ee < 0.5) return s.t;
      return 1e9;
    };
    const double t40 = first_drop(40);
    const double t20 = first_drop(20);
    const double t1 = first_drop(1);
    CHECK(t40 < t20);
    CHECK(t20 < 5.0);
    CHECK(t1 == 1e9);
  }

  SECTION("Bloch route agrees with the self-consistent density-matrix route") {
    const auto p = params_for(20, 1.0, 0.3);
    const BlochState init = meanfield::near_excited(0.05);

    // independent formulation: 2x2 master equation with H_ef rebuilt from
    // the instantaneous state
    cmat rho0(2, 2);
    rho0 << 0.5 * (1.0 + init.s0), init.s_plus, std::conj(init.s_plus), 0.5 * (1.0 - init.s0);
    auto rho_buf = std::make_shared<cmat>(cmat::Zero(2, 2));
    ode::OdeProblem prob;
    prob.dimension = 8;
    prob.t0 = 0.0;
    prob.t1 = 4.0;
    prob.y0 = pack_complex(rho0);
    prob.rhs = [&p, rho_buf](double, const std::vector<double>& y, std::vector<double>& dydt) {
      unpack_complex(y, *rho_buf);
      meanfield::BlochState s;
      s.s0 = qops::expectation(*rho_buf, qops::pauli(Pauli::sigma0)).real();
      s.s_plus = qops::expectation(*rho_buf, qops::pauli(Pauli::sigma_plus));
      liouville::LindbladModel m;
      m.hamiltonian = meanfield::effective_hamiltonian(s, p);
      m.jumps.push_back({qops::pauli(Pauli::sigma_plus), (p.base.nbar + 1.0) * p.base.gamma});
      m.jumps.push_back({qops::pauli(Pauli::sigma_minus), p.base.nbar * p.base.gamma});
      dydt = pack_complex(liouville::lindblad_rhs(m, *rho_buf));
    };
    ode::IntegratorConfig cfg;
    cfg.rtol = 1e-11;
    cfg.atol = 1e-13;
    const auto samples = ode::linspace(0.0, 4.0, 9);
    const auto matrix_route = ode::integrate(prob, cfg, samples);

    const auto bloch_route = meanfield::evolve_meanfield(init, p, 4.0, cfg, samples, true);
    for (size_t i = 0; i < samples.size(); ++i) {
      const cmat rho = unpack_complex(matrix_route.states[i], 2);
      const double s0 = qops::expectation(rho, qops::pauli(Pauli::sigma0)).real();
      const cplx sp = qops::expectation(rho, qops::pauli(Pauli::sigma_plus));
      CHECK(std::abs(bloch_route.samples[i].state.s0 - s0) <= 1e-8);
      CHECK(std::abs(bloch_route.samples[i].state.s_plus - sp) <= 1e-8);
    }
  }

  SECTION("R^2 is conserved by the dissipation-free flow") {
    std::mt19937_64 rng(102);
    for (int n : {2, 20}) {
      for (int trial = 0; trial < 4; ++trial) {
        const BlochState init = testsupport::random_bloch(rng);
        const auto traj = meanfield::evolve_meanfield(init, params_for(n), 20.0,
                                                      ode::IntegratorConfig{},
                                                      ode::linspace(0.0, 20.0, 21), false);
        const double r2_0 = meanfield::constant_of_motion(init);
        for (const auto& s : traj.samples) CHECK(std::abs(s.r_squared - r2_0) <= 1e-9);
      }
    }
  }

  SECTION("rho_ee decays monotonically at zero temperature") {
    const auto traj = meanfield::evolve_meanfield(meanfield::near_excited(1e-3), params_for(20),
                                                  8.0, ode::IntegratorConfig{},
                                                  ode::linspace(0.0, 8.0, 81), true);
    for (size_t i = 1; i < traj.samples.size(); ++i)
      CHECK(traj.samples[i].rho_ee <= traj.samples[i - 1].rho_ee + 1e-12);
  }

  SECTION("dipole phase advances as omega0 t") {
    const double omega0 = 1.7;
    const auto p = params_for(2, 1.0, 0.0, omega0);
    const BlochState init = meanfield::near_excited(0.2);
    const auto samples = ode::linspace(0.0, 6.0, 13);
    const auto traj = meanfield::evolve_meanfield(init, p, 6.0, ode::IntegratorConfig{}, samples,
                                                  false);
    int resolved = 0;
    for (const auto& s : traj.samples) {
      if (std::abs(s.state.s_plus) < 1e-6) continue;  // phase of a vanishing dipole is noise
      const cplx rotated = s.state.s_plus * std::exp(cplx(0.0, -omega0 * s.t));
      CHECK(std::abs(std::arg(rotated * std::conj(init.s_plus))) <= 1e-6);
      ++resolved;
    }
    CHECK(resolved >= 10);
  }

  SECTION("unphysical initial state is rejected") {
    CHECK_THROWS_AS(meanfield::evolve_meanfield({1.5, 0.0}, params_for(2), 1.0,
                                                ode::IntegratorConfig{}, {1.0}, true),
                    std::invalid_argument);
  }

  SECTION("N = 1 evolution equals the analytic solution") {
    const SystemParams base{1, 1.0, 1.0, 0.4, 1.0};
    const BlochState init = meanfield::near_excited(0.2);
    const auto samples = ode::linspace(0.0, 8.0, 17);
    const auto traj = meanfield::evolve_meanfield(init, MeanFieldParams::from(base), 8.0,
                                                  ode::IntegratorConfig{}, samples, true);
    for (const auto& s : traj.samples) {
      const BlochState exact = meanfield::n1_solution(s.t, init, base);
      CHECK(std::abs(s.state.s0 - exact.s0) <= 1e-8);
      CHECK(std::abs(s.state.s_plus - exact.s_plus) <= 1e-8);
    }
  }
}
