#pragma once

// Dense complex matrix algebra for few-qubit operators: Pauli and ladder
// matrices, Kronecker embedding into the N-particle space, collective spin
// operators, expectations and partial traces. Site 1 is the leftmost tensor
// factor throughout.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinbath/errors.hpp"

namespace spinbath {

using cplx = std::complex<double>;
using cmat = Eigen::MatrixXcd;

inline constexpr int kDefaultNMax = 12;       // full-space cap, dim 2^12 = 4096
inline constexpr double kDensityTol = 1e-9;   // default density-matrix validation slack

inline cmat identity(int dim) { return cmat::Identity(dim, dim); }

inline cplx trace_of_product(const cmat& a, const cmat& b) {
  // Tr(a*b) without forming the product.
  return a.cwiseProduct(b.transpose()).sum();
}

inline double hermiticity_error(const cmat& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline double max_abs(const cmat& m) { return m.cwiseAbs().maxCoeff(); }

// Smallest eigenvalue of the hermitized matrix (m + m^dag)/2.
inline double min_eigenvalue(const cmat& m) {
  cmat h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<cmat> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

struct ValidationReport {
  double trace_error = 0.0;
  double hermiticity_error = 0.0;
  double min_eigenvalue = 0.0;
  bool pass(double tol) const {
    return trace_error <= tol && hermiticity_error <= tol && min_eigenvalue >= -tol;
  }
};

inline ValidationReport validate_density(const cmat& rho) {
  ValidationReport r;
  r.trace_error = std::abs(rho.trace() - cplx(1.0, 0.0));
  r.hermiticity_error = spinbath::hermiticity_error(rho);
  r.min_eigenvalue = spinbath::min_eigenvalue(rho);
  return r;
}

// A square complex matrix constrained to unit trace, hermiticity and positive
// semidefiniteness, each up to `tolerance`. Aggregate construction does not
// validate; use checked() to enforce the invariants.
struct DensityMatrix {
  cmat rho;
  double tolerance = kDensityTol;

  int dim() const { return static_cast<int>(rho.rows()); }

  static DensityMatrix checked(cmat m, double tolerance = kDensityTol) {
    if (m.rows() != m.cols() || m.rows() < 1)
      throw std::invalid_argument("density matrix must be square with dim >= 1");
    ValidationReport r = validate_density(m);
    if (!r.pass(tolerance))
      throw std::invalid_argument(
          "density matrix validation failed: |trace-1| = " + std::to_string(r.trace_error) +
          ", hermiticity error = " + std::to_string(r.hermiticity_error) +
          ", min eigenvalue = " + std::to_string(r.min_eigenvalue) +
          " (tolerance " + std::to_string(tolerance) + ")");
    return DensityMatrix{std::move(m), tolerance};
  }
};

namespace qops {

// 1-based particle label inside an n_sites register.
struct SiteIndex {
  int index = 1;
  int n_sites = 1;

  void validate() const {
    if (n_sites < 1 || index < 1 || index > n_sites)
      throw std::invalid_argument("site index " + std::to_string(index) + " outside [1, " +
                                  std::to_string(n_sites) + "]");
  }
};

enum class Pauli { sigma0, sigma_plus, sigma_minus, sigma_x, sigma_y, sigma_z, identity };

// sigma0 is identified with sigma_z = diag(1,-1), which makes
// [sigma+, sigma-] = sigma0 hold with sigma± = (sigma_x ± i sigma_y)/2.
inline cmat pauli(Pauli which) {
  cmat m = cmat::Zero(2, 2);
  switch (which) {
    case Pauli::sigma_x:
      m(0, 1) = 1.0;
      m(1, 0) = 1.0;
      break;
    case Pauli::sigma_y:
      m(0, 1) = cplx(0.0, -1.0);
      m(1, 0) = cplx(0.0, 1.0);
      break;
    case Pauli::sigma0:
    case Pauli::sigma_z:
      m(0, 0) = 1.0;
      m(1, 1) = -1.0;
      break;
    case Pauli::sigma_plus:
      m(0, 1) = 1.0;
      break;
    case Pauli::sigma_minus:
      m(1, 0) = 1.0;
      break;
    case Pauli::identity:
      m.setIdentity();
      break;
  }
  return m;
}

inline cmat commutator(const cmat& a, const cmat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("commutator: dimension mismatch");
  return a * b - b * a;
}

inline cmat kron(const cmat& a, const cmat& b) {
  cmat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

namespace detail {

inline int log2_dim(Eigen::Index dim, const char* what) {
  int n = 0;
  Eigen::Index d = 1;
  while (d < dim) {
    d <<= 1;
    ++n;
  }
  if (d != dim)
    throw std::invalid_argument(std::string(what) + ": dimension " + std::to_string(dim) +
                                " is not a power of two");
  return n;
}

}  // namespace detail

// Identity on every site except `site`, where `op` acts. Site 1 is the
// leftmost (most significant) tensor factor.
inline cmat embed(const cmat& op, SiteIndex site) {
  site.validate();
  if (op.rows() != 2 || op.cols() != 2)
    throw std::invalid_argument("embed expects a single-qubit (2x2) operator");
  const int n = site.n_sites;
  cmat out = (site.index == 1) ? op : identity(1 << (site.index - 1));
  if (site.index != 1) out = kron(out, op);
  if (site.index < n) out = kron(out, identity(1 << (n - site.index)));
  return out;
}

enum class Collective { S_plus, S_minus, S_0 };

// S_lambda = sum over sites of the embedded single-particle operator.
inline cmat collective(Collective which, int n_sites, int n_max = kDefaultNMax) {
  if (n_sites < 1) throw std::invalid_argument("collective: n_sites must be >= 1");
  if (n_sites > n_max)
    throw std::invalid_argument("collective: n_sites = " + std::to_string(n_sites) +
                                " exceeds the full-space cap n_max = " + std::to_string(n_max) +
                                " (dim 2^n overflow)");
  Pauli p = Pauli::sigma0;
  if (which == Collective::S_plus) p = Pauli::sigma_plus;
  if (which == Collective::S_minus) p = Pauli::sigma_minus;
  const cmat op = pauli(p);
  cmat out = cmat::Zero(Eigen::Index(1) << n_sites, Eigen::Index(1) << n_sites);
  for (int i = 1; i <= n_sites; ++i) out += embed(op, SiteIndex{i, n_sites});
  return out;
}

// Trace over every site not in `keep`. Kept sites are reported in ascending
// site order, so the first kept site becomes the leftmost factor of the
// result. Works on arbitrary operators, not only density matrices.
inline cmat partial_trace(const cmat& m, const std::vector<int>& keep, int n_sites) {
  if (m.rows() != m.cols()) throw std::invalid_argument("partial_trace: matrix must be square");
  const int n = n_sites;
  if ((Eigen::Index(1) << n) != m.rows())
    throw std::invalid_argument("partial_trace: dimension does not match n_sites");
  if (keep.empty()) throw std::invalid_argument("partial_trace: keep set must be nonempty");
  for (size_t j = 0; j < keep.size(); ++j) {
    if (keep[j] < 1 || keep[j] > n)
      throw std::invalid_argument("partial_trace: invalid site " + std::to_string(keep[j]));
    if (j > 0 && keep[j] <= keep[j - 1])
      throw std::invalid_argument("partial_trace: keep set must be strictly increasing");
  }

  const int nk = static_cast<int>(keep.size());
  std::vector<int> traced;
  {
    std::vector<bool> kept(n + 1, false);
    for (int s : keep) kept[s] = true;
    for (int s = 1; s <= n; ++s)
      if (!kept[s]) traced.push_back(s);
  }
  const int nt = n - nk;
  const Eigen::Index dk = Eigen::Index(1) << nk;
  const Eigen::Index dt = Eigen::Index(1) << nt;

  // Site s occupies bit (n - s) of the full index. Precompute the full-index
  // bit pattern contributed by each reduced index value.
  auto masks = [n](const std::vector<int>& sites) {
    const int ns = static_cast<int>(sites.size());
    std::vector<Eigen::Index> out(Eigen::Index(1) << ns, 0);
    for (Eigen::Index v = 0; v < static_cast<Eigen::Index>(out.size()); ++v) {
      Eigen::Index full = 0;
      for (int j = 0; j < ns; ++j)
        if ((v >> (ns - 1 - j)) & 1) full |= Eigen::Index(1) << (n - sites[j]);
      out[v] = full;
    }
    return out;
  };
  const std::vector<Eigen::Index> kmask = masks(keep);
  const std::vector<Eigen::Index> tmask = masks(traced);

  cmat out = cmat::Zero(dk, dk);
  for (Eigen::Index r = 0; r < dk; ++r)
    for (Eigen::Index c = 0; c < dk; ++c) {
      cplx sum = 0.0;
      for (Eigen::Index t = 0; t < dt; ++t) sum += m(kmask[r] | tmask[t], kmask[c] | tmask[t]);
      out(r, c) = sum;
    }
  return out;
}

inline cmat partial_trace(const DensityMatrix& rho, const std::vector<int>& keep, int n_sites) {
  return partial_trace(rho.rho, keep, n_sites);
}

// Tr(rho * op) == <op>.
inline cplx expectation(const cmat& rho, const cmat& op) {
  if (rho.rows() != op.rows() || rho.cols() != op.cols())
    throw std::invalid_argument("expectation: dimension mismatch");
  return trace_of_product(rho, op);
}

inline cplx expectation(const DensityMatrix& rho, const cmat& op) {
  return expectation(rho.rho, op);
}

}  // namespace qops
}  // namespace spinbath
