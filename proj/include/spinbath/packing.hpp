#pragma once

// Adapters between complex matrices and the flat interleaved re/im vectors
// the integrator works on. std::complex<double> is layout-compatible with
// double[2], so packing is a straight copy in Eigen's column-major order.

#include <cstring>
#include <vector>

#include "spinbath/qops.hpp"

namespace spinbath {

inline std::vector<double> pack_complex(const cmat& m) {
  std::vector<double> out(2 * m.size());
  std::memcpy(out.data(), m.data(), out.size() * sizeof(double));
  return out;
}

inline void unpack_complex(const std::vector<double>& y, cmat& m) {
  std::memcpy(m.data(), y.data(), y.size() * sizeof(double));
}

inline cmat unpack_complex(const std::vector<double>& y, int dim) {
  cmat m(dim, dim);
  unpack_complex(y, m);
  return m;
}

// In-place (m + m^dag)/2 on a packed square matrix.
inline void hermitize_packed(std::vector<double>& y, int dim) {
  auto re = [&](int r, int c) -> double& { return y[2 * (static_cast<size_t>(c) * dim + r)]; };
  auto im = [&](int r, int c) -> double& { return y[2 * (static_cast<size_t>(c) * dim + r) + 1]; };
  for (int r = 0; r < dim; ++r) {
    im(r, r) = 0.0;
    for (int c = r + 1; c < dim; ++c) {
      const double avg_re = 0.5 * (re(r, c) + re(c, r));
      const double avg_im = 0.5 * (im(r, c) - im(c, r));
      re(r, c) = avg_re;
      im(r, c) = avg_im;
      re(c, r) = avg_re;
      im(c, r) = -avg_im;
    }
  }
}

}  // namespace spinbath
