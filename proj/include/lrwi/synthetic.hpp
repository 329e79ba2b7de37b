#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrwi/grid.hpp"
#include "lrwi/rng.hpp"

namespace lrwi {

enum class SyntheticKind { linear_gradient, layered, wedge };

inline SyntheticKind synthetic_kind_from_string(const std::string& s) {
  if (s == "linear-gradient") return SyntheticKind::linear_gradient;
  if (s == "layered") return SyntheticKind::layered;
  if (s == "wedge") return SyntheticKind::wedge;
  throw DomainError("unknown synthetic model kind '" + s + "'");
}

struct SyntheticParams {
  // linear-gradient: v varies linearly with depth, constant along x.
  double v_top = 1.5;
  double v_bottom = 4.5;

  // layered: layer k occupies z < layer_depths[k] (last layer extends to the
  // bottom); layer_velocities needs exactly one more entry than layer_depths.
  std::vector<double> layer_depths;
  std::vector<double> layer_velocities;

  // wedge: layered background, then v = wedge_velocity wherever
  // z >= wedge_z0 + wedge_slope * x.
  double wedge_z0 = 0.0;
  double wedge_slope = 0.0;
  double wedge_velocity = 0.0;

  // optional zero-mean Gaussian perturbation of the velocities
  double perturb_std = 0.0;
  std::uint64_t perturb_seed = 0;
};

inline VelocityModel make_synthetic(SyntheticKind kind, const Grid2D& grid,
                                    const SyntheticParams& p) {
  Eigen::VectorXd v(grid.size());
  switch (kind) {
    case SyntheticKind::linear_gradient: {
      for (int iz = 0; iz < grid.nz; ++iz) {
        const double frac =
            grid.nz > 1 ? static_cast<double>(iz) / (grid.nz - 1) : 0.0;
        const double vz = p.v_top + (p.v_bottom - p.v_top) * frac;
        for (int ix = 0; ix < grid.nx; ++ix) v[grid.index(ix, iz)] = vz;
      }
      break;
    }
    case SyntheticKind::layered:
    case SyntheticKind::wedge: {
      if (p.layer_velocities.size() != p.layer_depths.size() + 1)
        throw DomainError(
            "make_synthetic: need one more layer velocity than interface "
            "depth");
      for (std::size_t k = 1; k < p.layer_depths.size(); ++k)
        if (!(p.layer_depths[k] > p.layer_depths[k - 1]))
          throw DomainError("make_synthetic: layer depths must ascend");
      for (int iz = 0; iz < grid.nz; ++iz) {
        const double z = grid.z_of(iz);
        std::size_t layer = 0;
        while (layer < p.layer_depths.size() && z >= p.layer_depths[layer])
          ++layer;
        const double vz = p.layer_velocities[layer];
        for (int ix = 0; ix < grid.nx; ++ix) v[grid.index(ix, iz)] = vz;
      }
      if (kind == SyntheticKind::wedge) {
        if (!(p.wedge_velocity > 0.0))
          throw DomainError("make_synthetic: wedge_velocity must be positive");
        for (int iz = 0; iz < grid.nz; ++iz)
          for (int ix = 0; ix < grid.nx; ++ix)
            if (grid.z_of(iz) >= p.wedge_z0 + p.wedge_slope * grid.x_of(ix))
              v[grid.index(ix, iz)] = p.wedge_velocity;
      }
      break;
    }
  }
  if (p.perturb_std > 0.0) {
    GaussianRng rng(p.perturb_seed);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += p.perturb_std * rng();
  }
  return VelocityModel(grid, std::move(v));
}

}  // namespace lrwi
