#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "lrwi/errors.hpp"

namespace lrwi {

// Regular 2-D grid. x is the fast (contiguous) direction, z the slow one:
// flat index = iz*nx + ix. Distances in km.
struct Grid2D {
  int nx = 0;
  int nz = 0;
  double dx = 0.0;
  double dz = 0.0;

  Grid2D() = default;
  Grid2D(int nx_, int nz_, double dx_, double dz_)
      : nx(nx_), nz(nz_), dx(dx_), dz(dz_) {
    if (nx < 2 || nz < 2)
      throw DomainError("Grid2D: nx and nz must be at least 2, got nx=" +
                        std::to_string(nx) + " nz=" + std::to_string(nz));
    if (!(dx > 0.0) || !(dz > 0.0) || !std::isfinite(dx) || !std::isfinite(dz))
      throw DomainError("Grid2D: spacings must be positive finite");
  }

  int size() const { return nx * nz; }
  int index(int ix, int iz) const { return iz * nx + ix; }
  int ix_of(int idx) const { return idx % nx; }
  int iz_of(int idx) const { return idx / nx; }
  double x_of(int ix) const { return ix * dx; }
  double z_of(int iz) const { return iz * dz; }
  double width() const { return (nx - 1) * dx; }
  double depth() const { return (nz - 1) * dz; }

  bool interior(int ix, int iz) const {
    return ix > 0 && ix < nx - 1 && iz > 0 && iz < nz - 1;
  }

  bool operator==(const Grid2D& o) const {
    return nx == o.nx && nz == o.nz && dx == o.dx && dz == o.dz;
  }
  bool operator!=(const Grid2D& o) const { return !(*this == o); }
};

inline void require_same_grid(const Grid2D& a, const Grid2D& b,
                              const char* who) {
  if (a != b) throw ShapeError(std::string(who) + ": grid mismatch");
}

// Squared slowness field m in s^2/km^2, strictly positive entries.
struct SlownessModel {
  Grid2D grid;
  Eigen::VectorXd values;  // length grid.size(), flattened x-fastest

  SlownessModel() = default;
  SlownessModel(const Grid2D& g, Eigen::VectorXd v)
      : grid(g), values(std::move(v)) {
    if (values.size() != grid.size())
      throw ShapeError("SlownessModel: expected " +
                       std::to_string(grid.size()) + " values, got " +
                       std::to_string(values.size()));
    for (Eigen::Index i = 0; i < values.size(); ++i)
      if (!(values[i] > 0.0) || !std::isfinite(values[i]))
        throw DomainError("SlownessModel: entry " + std::to_string(i) +
                          " is not strictly positive finite");
  }
};

// Velocity field v in km/s, strictly positive entries.
struct VelocityModel {
  Grid2D grid;
  Eigen::VectorXd values;

  VelocityModel() = default;
  VelocityModel(const Grid2D& g, Eigen::VectorXd v)
      : grid(g), values(std::move(v)) {
    if (values.size() != grid.size())
      throw ShapeError("VelocityModel: expected " +
                       std::to_string(grid.size()) + " values, got " +
                       std::to_string(values.size()));
    for (Eigen::Index i = 0; i < values.size(); ++i)
      if (!(values[i] > 0.0) || !std::isfinite(values[i]))
        throw DomainError("VelocityModel: entry " + std::to_string(i) +
                          " is not strictly positive finite");
  }
};

inline SlownessModel velocity_to_slowness(const VelocityModel& v) {
  return SlownessModel(v.grid, v.values.array().square().inverse().matrix());
}

inline VelocityModel slowness_to_velocity(const SlownessModel& m) {
  return VelocityModel(m.grid, m.values.array().rsqrt().matrix());
}

// Rank-2 split of a squared-slowness field: the represented model is
// sin(theta)*m1 + cos(theta)*m2. Components are unconstrained in sign;
// theta is unconstrained in R (radians).
struct Rank2Model {
  Grid2D grid;
  Eigen::VectorXd m1;
  Eigen::VectorXd m2;
  double theta = 0.0;

  Rank2Model() = default;
  Rank2Model(const Grid2D& g, Eigen::VectorXd a, Eigen::VectorXd b, double th)
      : grid(g), m1(std::move(a)), m2(std::move(b)), theta(th) {
    if (m1.size() != grid.size() || m2.size() != grid.size())
      throw ShapeError("Rank2Model: component length mismatch");
    if (!m1.allFinite() || !m2.allFinite() || !std::isfinite(theta))
      throw DomainError("Rank2Model: nonfinite entries");
  }
};

// Raw combined values sin(theta)*m1 + cos(theta)*m2; may be nonpositive
// mid-iteration, which is why this does not construct a SlownessModel.
inline Eigen::VectorXd combine_values(const Rank2Model& r) {
  return std::sin(r.theta) * r.m1 + std::cos(r.theta) * r.m2;
}

// Combined model as a SlownessModel; throws DomainError when the
// combination leaves the positive cone.
inline SlownessModel combine(const Rank2Model& r) {
  return SlownessModel(r.grid, combine_values(r));
}

inline Rank2Model split(const SlownessModel& m, double theta) {
  return Rank2Model(m.grid, std::sin(theta) * m.values,
                    std::cos(theta) * m.values, theta);
}

inline double relative_values_error(const Eigen::VectorXd& truth,
                                    const Eigen::VectorXd& found) {
  if (truth.size() != found.size())
    throw ShapeError("relative_values_error: length mismatch");
  double denom = truth.norm();
  if (!(denom > 0.0))
    throw DomainError("relative_values_error: reference has zero norm");
  return (truth - found).norm() / denom;
}

// ||m_true - m_found||_2 / ||m_true||_2 on squared slowness.
inline double relative_model_error(const SlownessModel& truth,
                                   const SlownessModel& found) {
  require_same_grid(truth.grid, found.grid, "relative_model_error");
  return relative_values_error(truth.values, found.values);
}

}  // namespace lrwi
