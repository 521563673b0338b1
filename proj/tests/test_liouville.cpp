#include <catch2/catch_amalgamated.hpp>

#include <unsupported/Eigen/MatrixFunctions>

#include <random>

#include "spinbath/liouville.hpp"
#include "spinbath/meanfield.hpp"
#include "spinbath/states.hpp"
#include "support.hpp"

using namespace spinbath;
using liouville::LindbladModel;
using liouville::SystemParams;
using qops::Pauli;
using testsupport::max_abs_diff;

TEST_CASE("full-space model construction", "[liouville]") {
  SECTION("N = 1 jumps are the single-particle ladder operators") {
    const auto m = liouville::build_model_full({1, 1.0, 2.0, 0.5, 1.0});
    REQUIRE(m.jumps.size() == 2);
    CHECK(max_abs_diff(m.jumps[0].op, qops::pauli(Pauli::sigma_plus)) == 0.0);
    CHECK(m.jumps[0].rate == Catch::Approx(1.5 * 2.0).epsilon(1e-15));
    CHECK(max_abs_diff(m.jumps[1].op, qops::pauli(Pauli::sigma_minus)) == 0.0);
    CHECK(m.jumps[1].rate == Catch::Approx(0.5 * 2.0).epsilon(1e-15));
  }

  SECTION("zero temperature kills the absorption channel") {
    const auto m = liouville::build_model_full({1, 1.0, 1.0, 0.0, 1.0});
    CHECK(m.jumps[1].rate == 0.0);
  }

  SECTION("N = 2 Hamiltonian spectrum") {
    const auto m = liouville::build_model_full({2, 1.0, 1.0, 0.0, 1.0});
    // oracle: diagonalize (omega0/2)(sigma0 x I + I x sigma0) directly
    const cmat h = 0.5 * (qops::kron(qops::pauli(Pauli::sigma0), identity(2)) +
                          qops::kron(identity(2), qops::pauli(Pauli::sigma0)));
    Eigen::SelfAdjointEigenSolver<cmat> direct(h, Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<cmat> built(m.hamiltonian, Eigen::EigenvaluesOnly);
    CHECK((built.eigenvalues() - direct.eigenvalues()).cwiseAbs().maxCoeff() <= 1e-14);
    const Eigen::Vector4d expected{-1.0, 0.0, 0.0, 1.0};
    CHECK((built.eigenvalues() - expected).cwiseAbs().maxCoeff() <= 1e-14);
  }

  SECTION("volume rescales the rates") {
    const auto m = liouville::build_model_full({1, 1.0, 1.0, 0.0, 4.0});
    CHECK(m.jumps[0].rate == Catch::Approx(0.25).epsilon(1e-15));
  }
}

TEST_CASE("Dicke ladder", "[liouville]") {
  SECTION("N = 1 reproduces the Pauli operators") {
    const auto l = liouville::dicke_ladder(1);
    CHECK(max_abs_diff(l.s_plus, qops::pauli(Pauli::sigma_plus)) == 0.0);
    CHECK(max_abs_diff(l.s_minus, qops::pauli(Pauli::sigma_minus)) == 0.0);
    CHECK(max_abs_diff(l.s_0, qops::pauli(Pauli::sigma0)) == 0.0);
  }

  SECTION("N = 2 matrix elements are sqrt(2)") {
    const auto l = liouville::dicke_ladder(2);
    CHECK(std::abs(l.s_plus(0, 1) - std::sqrt(2.0)) <= 1e-15);
    CHECK(std::abs(l.s_plus(1, 2) - std::sqrt(2.0)) <= 1e-15);
    CHECK(l.s_plus(0, 2) == cplx(0.0));
    const Eigen::Vector3d diag{2.0, 0.0, -2.0};
    CHECK(max_abs_diff(l.s_0, cmat(diag.cast<cplx>().asDiagonal())) == 0.0);
  }

  SECTION("ladder commutators hold at N = 100") {
    const auto l = liouville::dicke_ladder(100);
    CHECK(max_abs_diff(qops::commutator(l.s_plus, l.s_minus), l.s_0) <= 1e-10);
    CHECK(max_abs_diff(qops::commutator(l.s_0, l.s_plus), 2.0 * l.s_plus) <= 1e-10);
  }
}

TEST_CASE("lindblad_rhs", "[liouville]") {
  SECTION("ground state is dark under the emission channel") {
    LindbladModel m;
    m.hamiltonian = cmat::Zero(2, 2);
    m.jumps.push_back({qops::pauli(Pauli::sigma_plus), 1.0});
    cmat ground = cmat::Zero(2, 2);
    ground(1, 1) = 1.0;
    CHECK(max_abs(liouville::lindblad_rhs(m, ground)) <= 1e-15);
  }

  SECTION("generator is trace-free on random states") {
    std::mt19937_64 rng(81);
    const auto m = liouville::build_model_full({2, 1.0, 1.0, 0.7, 1.0});
    for (int trial = 0; trial < 5; ++trial) {
      const cmat rho = testsupport::random_density(4, rng);
      CHECK(std::abs(liouville::lindblad_rhs(m, rho).trace()) <= 1e-13);
    }
  }

  SECTION("hand-evaluated value at the maximally mixed state") {
    const auto m = liouville::build_model_full({1, 0.0, 1.0, 0.0, 1.0});
    const cmat rhs = liouville::lindblad_rhs(m, 0.5 * identity(2));
    cmat expected = cmat::Zero(2, 2);
    expected(0, 0) = -0.5;
    expected(1, 1) = 0.5;
    CHECK(max_abs_diff(rhs, expected) <= 1e-15);
  }

  SECTION("dimension mismatch") {
    const auto m = liouville::build_model_full({2, 1.0, 1.0, 0.0, 1.0});
    CHECK_THROWS_AS(liouville::lindblad_rhs(m, identity(2)), std::invalid_argument);
  }
}

TEST_CASE("prepared evaluator matches the direct RHS", "[liouville]") {
  std::mt19937_64 rng(82);
  for (int n : {1, 2, 3}) {
    const auto m = liouville::build_model_full({n, 1.3, 0.8, 0.4, 1.0});
    liouville::LindbladRhsEvaluator eval(m);
    const cmat rho = testsupport::random_density(1 << n, rng);
    cmat out(1 << n, 1 << n);
    eval.apply(rho, out);
    CHECK(max_abs_diff(out, liouville::lindblad_rhs(m, rho)) <= 1e-13);
  }
}

TEST_CASE("superoperator agrees with the matrix exponential", "[liouville]") {
  std::mt19937_64 rng(83);
  for (const SystemParams p : {SystemParams{1, 1.0, 1.0, 0.3, 1.0},
                               SystemParams{2, 0.7, 1.2, 0.5, 1.0}}) {
    const auto model = liouville::build_model_full(p);
    const int d = model.dim();
    const cmat sup = liouville::superoperator(model);
    const cmat rho0 = testsupport::random_density(d, rng);

    // route 1: evolve through the integrator
    ode::IntegratorConfig cfg;
    cfg.rtol = 1e-11;
    cfg.atol = 1e-13;
    const auto evo = liouville::evolve(model, DensityMatrix::checked(rho0), 1.5, cfg, {0.5, 1.5});

    // route 2: rho(t) = unvec(exp(L t) vec(rho0))
    for (size_t i = 0; i < evo.times.size(); ++i) {
      const cmat propagator = (sup * evo.times[i]).exp();
      Eigen::VectorXcd vec = Eigen::Map<const Eigen::VectorXcd>(rho0.data(), d * d);
      Eigen::VectorXcd vt = propagator * vec;
      const cmat expected = Eigen::Map<const cmat>(vt.data(), d, d);
      CHECK(max_abs_diff(evo.states[i], expected) <= 1e-9);
    }
  }
  CHECK_THROWS_AS(liouville::superoperator(liouville::build_model_full({5, 1, 1, 0, 1})),
                  std::invalid_argument);
}

TEST_CASE("evolve", "[liouville]") {
  SECTION("gamma = 0 evolution is isospectral") {
    std::mt19937_64 rng(84);
    const auto m = liouville::build_model_full({2, 1.0, 0.0, 0.0, 1.0});
    const cmat rho0 = testsupport::random_density(4, rng);
    const auto evo =
        liouville::evolve(m, DensityMatrix::checked(rho0), 5.0, ode::IntegratorConfig{}, {2.5, 5.0});
    Eigen::SelfAdjointEigenSolver<cmat> init(rho0, Eigen::EigenvaluesOnly);
    for (const cmat& rho : evo.states) {
      Eigen::SelfAdjointEigenSolver<cmat> now(rho, Eigen::EigenvaluesOnly);
      CHECK((now.eigenvalues() - init.eigenvalues()).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }

  SECTION("N = 1 spontaneous decay is exponential") {
    const auto m = liouville::build_model_full({1, 1.0, 1.0, 0.0, 1.0});
    const auto samples = ode::linspace(0.0, 5.0, 21);
    const auto evo = liouville::evolve(m, DensityMatrix::checked(states::full_all_excited(1)),
                                       5.0, ode::IntegratorConfig{}, samples);
    for (size_t i = 0; i < samples.size(); ++i) {
      const double rho_ee = evo.states[i](0, 0).real();
      CHECK(std::abs(rho_ee - std::exp(-samples[i])) <= 1e-8);
    }
  }

  SECTION("gamma = 0 keeps <S_0> constant") {
    const auto m = liouville::build_model_full({3, 1.0, 0.0, 0.0, 1.0});
    const cmat rho0 = states::product_state(states::near_excited_qubit(0.2), 3);
    const auto evo = liouville::evolve(m, DensityMatrix::checked(rho0), 8.0,
                                       ode::IntegratorConfig{}, ode::linspace(0.0, 8.0, 9));
    const cmat s0 = qops::collective(qops::Collective::S_0, 3);
    const double initial = qops::expectation(rho0, s0).real();
    for (const cmat& rho : evo.states)
      CHECK(std::abs(qops::expectation(rho, s0).real() - initial) <= 1e-9);
  }

  SECTION("full space and Dicke ladder agree for symmetric states") {
    for (int n : {2, 3, 4}) {
      const SystemParams p{n, 1.0, 1.0, 0.25, 1.0};
      const auto samples = ode::linspace(0.0, 3.0, 7);

      const auto full = liouville::evolve(
          liouville::build_model_full(p),
          DensityMatrix::checked(states::product_state(states::near_excited_qubit(0.05), n)),
          3.0, ode::IntegratorConfig{}, samples);
      const cmat s0_full = qops::collective(qops::Collective::S_0, n);

      const auto ladder = liouville::dicke_ladder(n);
      const auto dicke = liouville::evolve(
          liouville::build_model_dicke(p),
          DensityMatrix::checked(
              states::dicke_coherent(n, std::sqrt(0.95), std::sqrt(0.05))),
          3.0, ode::IntegratorConfig{}, samples);

      for (size_t i = 0; i < samples.size(); ++i) {
        const double a = qops::expectation(full.states[i], s0_full).real();
        const double b = qops::expectation(dicke.states[i], ladder.s_0).real();
        CHECK(std::abs(a - b) <= 1e-7);
      }
    }
  }

  SECTION("trace and positivity diagnostics stay within bounds") {
    const SystemParams p{3, 1.0, 1.0, 0.5, 1.0};
    const auto evo = liouville::evolve(
        liouville::build_model_full(p),
        DensityMatrix::checked(states::product_state(states::near_excited_qubit(0.001), 3)),
        20.0, ode::IntegratorConfig{}, ode::linspace(0.0, 20.0, 21));
    for (size_t i = 0; i < evo.times.size(); ++i) {
      CHECK(evo.trace_drifts[i] <= 1e-10);
      CHECK(evo.min_eigenvalues[i] >= -1e-8);
    }
  }

  SECTION("state/model dimension mismatch") {
    const auto m = liouville::build_model_full({2, 1.0, 1.0, 0.0, 1.0});
    CHECK_THROWS_AS(liouville::evolve(m, DensityMatrix::checked(0.5 * identity(2)), 1.0,
                                      ode::IntegratorConfig{}, {1.0}),
                    std::invalid_argument);
  }
}

TEST_CASE("observables", "[liouville]") {
  SECTION("all-excited Dicke state has <S_0> = N and rho_ee = 1") {
    const int n = 7;
    const auto ladder = liouville::dicke_ladder(n);
    const cmat rho = states::dicke_all_excited(n);
    const double s0 = qops::expectation(rho, ladder.s_0).real();
    CHECK(s0 == Catch::Approx(static_cast<double>(n)).margin(1e-14));
    CHECK(liouville::excited_probability(s0 / n) == Catch::Approx(1.0).margin(1e-14));
  }

  SECTION("N = 1 thermal stationary value of <sigma_0>") {
    const SystemParams p{1, 1.0, 1.0, 0.5, 1.0};
    const auto evo = liouville::evolve(liouville::build_model_full(p),
                                       DensityMatrix::checked(states::full_all_excited(1)), 30.0,
                                       ode::IntegratorConfig{}, {30.0});
    const auto table = liouville::observables(
        evo, {{"s0", qops::pauli(Pauli::sigma0)}, {"sp", qops::pauli(Pauli::sigma_plus)}});
    REQUIRE(table.names.size() == 2);
    CHECK(std::abs(table.values[0][0].real() + 0.5) <= 1e-6);
    CHECK(std::abs(table.values[0][1]) <= 1e-8);
  }
}
