#pragma once

#include <cmath>
#include <iostream>
#include <numbers>

#include "lrwi/grid.hpp"
#include "lrwi/hash.hpp"
#include "lrwi/sparse.hpp"

namespace lrwi {

inline double angular_frequency(double f_hz) {
  return 2.0 * std::numbers::pi * f_hz;
}

// Discrete Laplacian with first-order radiating boundary rows.
//
// Interior rows carry the standard 5-point stencil. A boundary row keeps,
// for each grid side the node touches, a one-sided radiating condition
// (u_b - u_nbr)/h - i*omega*sqrt(m_b)*u_b = 0 written toward the interior
// neighbor and scaled by -1/h so off-diagonal entries match the interior
// stencil; the resulting matrix is symmetric (non-Hermitian) apart from the
// four corner rows, which no other row references. The wavenumber uses
// bc_slowness, passed separately so the matrix can be held fixed while the
// diagonal mass term varies.
inline SparseComplexMatrix laplacian_radiating(
    const Grid2D& grid, double omega, const Eigen::VectorXd& bc_slowness) {
  if (bc_slowness.size() != grid.size())
    throw ShapeError("laplacian_radiating: slowness length mismatch");
  if (!(omega >= 0.0) || !std::isfinite(omega))
    throw DomainError("laplacian_radiating: omega must be finite and >= 0");

  const int n = grid.size();
  const double ax = 1.0 / (grid.dx * grid.dx);
  const double az = 1.0 / (grid.dz * grid.dz);
  std::vector<TripletC> ts;
  ts.reserve(static_cast<std::size_t>(5 * n));

  // Each direction contributes independently: the full second difference
  // where the node is interior to that direction, otherwise the one-sided
  // radiating row -1/h^2 + ik/h with a 1/h^2 coupling to the inward
  // neighbor (outgoing waves under the e^{-i omega t} convention). Keeping
  // the tangential second difference on edge rows makes the matrix
  // complex-symmetric, so discrete reciprocity holds exactly.
  for (int iz = 0; iz < grid.nz; ++iz) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      const int i = grid.index(ix, iz);
      cd diag(0.0, 0.0);
      double k = -1.0;  // boundary wavenumber, computed on first use
      const auto boundary_k = [&]() {
        if (k < 0.0) {
          const double mb = bc_slowness[i];
          if (!(mb > 0.0))
            throw DomainError(
                "laplacian_radiating: boundary slowness must be positive");
          k = omega * std::sqrt(mb);
        }
        return k;
      };
      if (ix > 0 && ix < grid.nx - 1) {
        diag += cd(-2.0 * ax, 0.0);
        ts.emplace_back(i, grid.index(ix - 1, iz), cd(ax, 0.0));
        ts.emplace_back(i, grid.index(ix + 1, iz), cd(ax, 0.0));
      } else {
        diag += cd(-ax, boundary_k() / grid.dx);
        ts.emplace_back(i, grid.index(ix == 0 ? 1 : grid.nx - 2, iz),
                        cd(ax, 0.0));
      }
      if (iz > 0 && iz < grid.nz - 1) {
        diag += cd(-2.0 * az, 0.0);
        ts.emplace_back(i, grid.index(ix, iz - 1), cd(az, 0.0));
        ts.emplace_back(i, grid.index(ix, iz + 1), cd(az, 0.0));
      } else {
        diag += cd(-az, boundary_k() / grid.dz);
        ts.emplace_back(i, grid.index(ix, iz == 0 ? 1 : grid.nz - 2),
                        cd(az, 0.0));
      }
      ts.emplace_back(i, i, diag);
    }
  }
  return SparseComplexMatrix::from_triplets(n, n, ts);
}

struct HelmholtzOperator {
  Grid2D grid;
  double f_hz = 0.0;
  double omega = 0.0;
  SparseComplexMatrix matrix;
  std::uint64_t model_hash = 0;
};

inline std::uint64_t helmholtz_hash(const SlownessModel& m, double omega) {
  std::uint64_t h =
      fnv1a_bytes(m.values.data(),
                  sizeof(double) * static_cast<std::size_t>(m.values.size()));
  h = fnv1a_append(h, omega);
  h = fnv1a_append(h, m.grid.dx);
  h = fnv1a_append(h, m.grid.dz);
  return h;
}

inline double points_per_wavelength(const SlownessModel& m, double f_hz) {
  const double v_min = 1.0 / std::sqrt(m.values.maxCoeff());
  const double h_max = std::max(m.grid.dx, m.grid.dz);
  return v_min / (f_hz * h_max);
}

// A(m) = Laplacian-with-radiating-rows + omega^2 diag(m). The mass term is
// kept on every row, boundary included, so A is affine in m with constant
// derivative omega^2 per entry once the radiating wavenumber is fixed.
inline HelmholtzOperator assemble(const SlownessModel& m, double f_hz) {
  if (!(f_hz >= 0.0) || !std::isfinite(f_hz))
    throw DomainError("assemble: frequency must be finite and >= 0");
  HelmholtzOperator op;
  op.grid = m.grid;
  op.f_hz = f_hz;
  op.omega = angular_frequency(f_hz);
  if (f_hz > 0.0) {
    const double ppw = points_per_wavelength(m, f_hz);
    if (ppw < 6.0)
      std::cerr << "warning: " << ppw
                << " grid points per minimum wavelength at " << f_hz
                << " Hz (below 6); expect dispersion error\n";
  }

  SparseComplexMatrix lap = laplacian_radiating(m.grid, op.omega, m.values);
  BlockBuilder b(m.grid.size(), m.grid.size());
  b.add_block(0, 0, lap);
  b.add_diagonal_block(
      0, 0, (op.omega * op.omega * m.values).cast<cd>(), cd(1.0, 0.0));
  op.matrix = b.build();
  op.model_hash = helmholtz_hash(m, op.omega);
  return op;
}

// Single solve A u = q; factors once. Callers with many right-hand sides
// should factorize op.matrix themselves and reuse the factors.
inline Eigen::VectorXcd solve(const HelmholtzOperator& op,
                              const Eigen::VectorXcd& q) {
  Factorization f(op.matrix);
  return f.solve(q);
}

}  // namespace lrwi
