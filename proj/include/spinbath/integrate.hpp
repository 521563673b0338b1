#pragma once

// Explicit Runge-Kutta integration over flat real vectors: classic fixed-step
// RK4 and an embedded Dormand-Prince 5(4) adaptive pair. Complex states are
// carried as interleaved real/imaginary doubles; the packing adapters live in
// the caller modules.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spinbath/errors.hpp"

namespace spinbath::ode {

enum class Method { rk4_fixed, rk45_adaptive };

struct IntegratorConfig {
  Method method = Method::rk45_adaptive;
  double step = 1e-3;   // fixed mode
  double rtol = 1e-9;   // adaptive mode
  double atol = 1e-12;  // adaptive mode
  long max_steps = 1'000'000;

  void validate() const {
    if (step <= 0.0) throw std::invalid_argument("integrator: step must be > 0");
    if (rtol <= 0.0 || atol <= 0.0) throw std::invalid_argument("integrator: rtol, atol must be > 0");
    if (max_steps < 1) throw std::invalid_argument("integrator: max_steps must be >= 1");
  }
};

using RhsFn = std::function<void(double t, const std::vector<double>& y, std::vector<double>& dydt)>;
// Optional projection applied to the state after every accepted step
// (e.g. hermitization of a packed density matrix).
using PostStepFn = std::function<void(double t, std::vector<double>& y)>;

struct OdeProblem {
  int dimension = 0;
  RhsFn rhs;
  double t0 = 0.0;
  double t1 = 1.0;
  std::vector<double> y0;
  PostStepFn post_step;

  void validate() const {
    if (dimension < 1) throw std::invalid_argument("ode problem: dimension must be >= 1");
    if (!(t1 > t0)) throw std::invalid_argument("ode problem: t1 must be > t0");
    if (static_cast<int>(y0.size()) != dimension)
      throw std::invalid_argument("ode problem: y0 length does not match dimension");
    if (!rhs) throw std::invalid_argument("ode problem: rhs is empty");
  }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
};

namespace detail {

inline void check_finite(const std::vector<double>& v, double t) {
  Eigen::Map<const Eigen::ArrayXd> a(v.data(), static_cast<Eigen::Index>(v.size()));
  if (a.allFinite()) return;
  for (size_t i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i]))
      throw numerical_error("non-finite RHS value at t = " + std::to_string(t) + ", component " +
                            std::to_string(i));
}

class StepBudget {
 public:
  explicit StepBudget(long max_steps) : remaining_(max_steps) {}
  void spend(double t) {
    if (--remaining_ < 0)
      throw numerical_error("integrator step budget exhausted at t = " + std::to_string(t));
  }

 private:
  long remaining_;
};

// One classic RK4 step of size h; work buffers supplied by the caller.
struct Rk4Workspace {
  std::vector<double> k1, k2, k3, k4, ytmp;
  explicit Rk4Workspace(int n) : k1(n), k2(n), k3(n), k4(n), ytmp(n) {}
};

inline void rk4_step(const OdeProblem& p, double t, double h, std::vector<double>& y,
                     Rk4Workspace& w) {
  const int n = p.dimension;
  p.rhs(t, y, w.k1);
  check_finite(w.k1, t);
  for (int i = 0; i < n; ++i) w.ytmp[i] = y[i] + 0.5 * h * w.k1[i];
  p.rhs(t + 0.5 * h, w.ytmp, w.k2);
  check_finite(w.k2, t + 0.5 * h);
  for (int i = 0; i < n; ++i) w.ytmp[i] = y[i] + 0.5 * h * w.k2[i];
  p.rhs(t + 0.5 * h, w.ytmp, w.k3);
  check_finite(w.k3, t + 0.5 * h);
  for (int i = 0; i < n; ++i) w.ytmp[i] = y[i] + h * w.k3[i];
  p.rhs(t + h, w.ytmp, w.k4);
  check_finite(w.k4, t + h);
  for (int i = 0; i < n; ++i)
    y[i] += h / 6.0 * (w.k1[i] + 2.0 * w.k2[i] + 2.0 * w.k3[i] + w.k4[i]);
}

inline Trajectory integrate_fixed(const OdeProblem& p, const IntegratorConfig& cfg,
                                  const std::vector<double>& samples) {
  Trajectory out;
  std::vector<double> y = p.y0;
  Rk4Workspace w(p.dimension);
  StepBudget budget(cfg.max_steps);
  double t = p.t0;
  for (double s : samples) {
    if (s > t) {
      // Uniform sub-steps no longer than cfg.step that land exactly on s.
      const double span = s - t;
      const long nsteps = std::max<long>(1, static_cast<long>(std::ceil(span / cfg.step - 1e-12)));
      const double h = span / static_cast<double>(nsteps);
      for (long k = 0; k < nsteps; ++k) {
        budget.spend(t);
        rk4_step(p, t, h, y, w);
        t = (k + 1 == nsteps) ? s : t + h;
        if (p.post_step) p.post_step(t, y);
      }
    }
    out.times.push_back(s);
    out.states.push_back(y);
  }
  return out;
}

// Dormand-Prince 5(4) coefficients.
struct Dopri {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // 5th-order minus embedded 4th-order weights (error estimate).
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

inline Trajectory integrate_adaptive(const OdeProblem& p, const IntegratorConfig& cfg,
                                     const std::vector<double>& samples) {
  using D = Dopri;
  const int n = p.dimension;
  std::vector<double> y = p.y0;
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n);

  Trajectory out;
  StepBudget budget(cfg.max_steps);
  double t = p.t0;
  double h = std::min(1e-2 * (p.t1 - p.t0), samples.empty() ? (p.t1 - p.t0) : 1.0);
  bool k1_valid = false;

  const double hmin_rel = 1e-14;

  for (double s : samples) {
    while (t < s) {
      budget.spend(t);
      double htry = std::min(h, s - t);
      if (htry < hmin_rel * std::max(1.0, std::abs(t)))
        throw numerical_error("integrator step size underflow at t = " + std::to_string(t));

      if (!k1_valid) {
        p.rhs(t, y, k1);
        check_finite(k1, t);
      }
      for (int i = 0; i < n; ++i) ytmp[i] = y[i] + htry * D::a21 * k1[i];
      p.rhs(t + D::c2 * htry, ytmp, k2);
      check_finite(k2, t);
      for (int i = 0; i < n; ++i) ytmp[i] = y[i] + htry * (D::a31 * k1[i] + D::a32 * k2[i]);
      p.rhs(t + D::c3 * htry, ytmp, k3);
      check_finite(k3, t);
      for (int i = 0; i < n; ++i)
        ytmp[i] = y[i] + htry * (D::a41 * k1[i] + D::a42 * k2[i] + D::a43 * k3[i]);
      p.rhs(t + D::c4 * htry, ytmp, k4);
      check_finite(k4, t);
      for (int i = 0; i < n; ++i)
        ytmp[i] = y[i] + htry * (D::a51 * k1[i] + D::a52 * k2[i] + D::a53 * k3[i] + D::a54 * k4[i]);
      p.rhs(t + D::c5 * htry, ytmp, k5);
      check_finite(k5, t);
      for (int i = 0; i < n; ++i)
        ytmp[i] = y[i] + htry * (D::a61 * k1[i] + D::a62 * k2[i] + D::a63 * k3[i] +
                                 D::a64 * k4[i] + D::a65 * k5[i]);
      p.rhs(t + htry, ytmp, k6);
      check_finite(k6, t);
      for (int i = 0; i < n; ++i)
        ynew[i] = y[i] + htry * (D::b1 * k1[i] + D::b3 * k3[i] + D::b4 * k4[i] + D::b5 * k5[i] +
                                 D::b6 * k6[i]);
      p.rhs(t + htry, ynew, k7);  // FSAL stage
      check_finite(k7, t + htry);

      // Scaled RMS error of the embedded pair.
      double err_sq = 0.0;
      for (int i = 0; i < n; ++i) {
        const double e = htry * (D::e1 * k1[i] + D::e3 * k3[i] + D::e4 * k4[i] + D::e5 * k5[i] +
                                 D::e6 * k6[i] + D::e7 * k7[i]);
        const double scale = cfg.atol + cfg.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        const double r = e / scale;
        err_sq += r * r;
      }
      const double err = std::sqrt(err_sq / n);

      if (!std::isfinite(err) || err > 1.0) {
        // Reject: shrink and retry from the same point.
        const double factor = std::isfinite(err)
                                  ? std::max(0.2, 0.9 * std::pow(err, -0.2))
                                  : 0.2;
        h = htry * std::min(factor, 1.0);
        k1_valid = true;  // k1 still matches (t, y)
        continue;
      }

      // Accept.
      t = (htry == s - t) ? s : t + htry;
      y.swap(ynew);
      if (p.post_step) {
        p.post_step(t, y);
        k1_valid = false;  // projection invalidates the FSAL stage
      } else {
        k1.swap(k7);
        k1_valid = true;
      }
      const double factor = (err == 0.0) ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
      h = htry * factor;
    }
    out.times.push_back(s);
    out.states.push_back(y);
  }
  return out;
}

}  // namespace detail

// States at exactly the requested sample times; deterministic for a fixed
// config. sample_times must be ascending and contained in [t0, t1].
inline Trajectory integrate(const OdeProblem& problem, const IntegratorConfig& config,
                            const std::vector<double>& sample_times) {
  problem.validate();
  config.validate();
  if (sample_times.empty()) throw std::invalid_argument("integrate: no sample times requested");
  for (size_t i = 0; i < sample_times.size(); ++i) {
    if (sample_times[i] < problem.t0 || sample_times[i] > problem.t1)
      throw std::invalid_argument("integrate: sample time outside [t0, t1]");
    if (i > 0 && sample_times[i] <= sample_times[i - 1])
      throw std::invalid_argument("integrate: sample times must be ascending");
  }
  switch (config.method) {
    case Method::rk4_fixed:
      return detail::integrate_fixed(problem, config, sample_times);
    case Method::rk45_adaptive:
      return detail::integrate_adaptive(problem, config, sample_times);
  }
  throw std::invalid_argument("integrate: unknown method");
}

inline std::vector<double> linspace(double a, double b, int count) {
  if (count < 2) throw std::invalid_argument("linspace: need at least two points");
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i)
    out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1);
  out.back() = b;
  return out;
}

}  // namespace spinbath::ode
