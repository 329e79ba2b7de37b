#pragma once

#include <numbers>
#include <set>
#include <utility>
#include <vector>

#include "lrwi/grid.hpp"
#include "lrwi/helmholtz.hpp"
#include "lrwi/rng.hpp"
#include "lrwi/sparse.hpp"

namespace lrwi {

struct Coord {
  double x = 0.0;
  double z = 0.0;
};

// Source and receiver positions in km. Positions must fall inside the grid
// footprint; they are snapped to the nearest node when used.
struct Geometry {
  std::vector<Coord> sources;
  std::vector<Coord> receivers;
};

inline int snap_to_node(const Grid2D& grid, const Coord& c,
                        const char* what) {
  if (c.x < -0.5 * grid.dx || c.x > grid.width() + 0.5 * grid.dx ||
      c.z < -0.5 * grid.dz || c.z > grid.depth() + 0.5 * grid.dz)
    throw DomainError(std::string(what) + " at (" + std::to_string(c.x) +
                      ", " + std::to_string(c.z) + ") lies outside the grid");
  int ix = static_cast<int>(std::lround(c.x / grid.dx));
  int iz = static_cast<int>(std::lround(c.z / grid.dz));
  ix = std::min(std::max(ix, 0), grid.nx - 1);
  iz = std::min(std::max(iz, 0), grid.nz - 1);
  return grid.index(ix, iz);
}

struct SnappedGeometry {
  std::vector<int> source_nodes;
  std::vector<int> receiver_nodes;
};

inline SnappedGeometry snap_geometry(const Grid2D& grid, const Geometry& g) {
  if (g.sources.empty() || g.receivers.empty())
    throw DomainError("geometry needs at least one source and one receiver");
  SnappedGeometry s;
  for (const auto& c : g.sources)
    s.source_nodes.push_back(snap_to_node(grid, c, "source"));
  std::set<int> seen;
  for (const auto& c : g.receivers) {
    const int node = snap_to_node(grid, c, "receiver");
    if (!seen.insert(node).second)
      throw DomainError("two receivers snap to the same grid node " +
                        std::to_string(node));
    s.receiver_nodes.push_back(node);
  }
  return s;
}

// P: n_r x n_g selection of receiver nodes (one unit entry per row).
inline SparseComplexMatrix projection_matrix(const Grid2D& grid,
                                             const std::vector<int>& nodes) {
  std::vector<TripletC> ts;
  ts.reserve(nodes.size());
  for (std::size_t r = 0; r < nodes.size(); ++r) {
    if (nodes[r] < 0 || nodes[r] >= grid.size())
      throw ShapeError("projection_matrix: node index out of range");
    ts.emplace_back(static_cast<int>(r), nodes[r], cd(1.0, 0.0));
  }
  return SparseComplexMatrix::from_triplets(static_cast<int>(nodes.size()),
                                            grid.size(), ts);
}

// Frequency-domain Ricker amplitude, peaked at f0:
//   w(f) = (2/sqrt(pi)) * f^2/f0^3 * exp(-f^2/f0^2)
inline double ricker_weight(double f_hz, double f0_hz) {
  if (!(f0_hz > 0.0)) throw DomainError("ricker_weight: f0 must be positive");
  const double r = f_hz / f0_hz;
  return 2.0 / std::sqrt(std::numbers::pi) * (r * r / f0_hz) *
         std::exp(-r * r);
}

struct SourceSpectrum {
  double f0 = 15.0;       // center frequency, Hz
  double amplitude = 1.0; // overall scale; 0 silences the source

  cd weight(double f_hz) const {
    return cd(amplitude * ricker_weight(f_hz, f0), 0.0);
  }
};

// Point source at one node, delta-normalized by the cell area so solutions
// approximate the continuum Green's function.
inline Eigen::VectorXcd source_vector(const Grid2D& grid, int node,
                                      cd weight) {
  if (node < 0 || node >= grid.size())
    throw ShapeError("source_vector: node index out of range");
  Eigen::VectorXcd q = Eigen::VectorXcd::Zero(grid.size());
  q[node] = weight / cd(grid.dx * grid.dz, 0.0);
  return q;
}

// Complex seismograms indexed (source, receiver, frequency), stored
// lexicographically with frequency fastest.
struct ObservedData {
  int ns = 0;
  int nr = 0;
  std::vector<double> freqs;
  Eigen::VectorXcd values;

  ObservedData() = default;
  ObservedData(int ns_, int nr_, std::vector<double> freqs_)
      : ns(ns_), nr(nr_), freqs(std::move(freqs_)) {
    if (ns <= 0 || nr <= 0 || freqs.empty())
      throw ShapeError("ObservedData: empty axis");
    values = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(ns) * nr *
                                    static_cast<Eigen::Index>(freqs.size()));
  }

  int nf() const { return static_cast<int>(freqs.size()); }
  Eigen::Index flat(int s, int r, int f) const {
    if (s < 0 || s >= ns || r < 0 || r >= nr || f < 0 || f >= nf())
      throw ShapeError("ObservedData: index out of range");
    return (static_cast<Eigen::Index>(s) * nr + r) * nf() + f;
  }
  cd at(int s, int r, int f) const { return values[flat(s, r, f)]; }
  cd& at(int s, int r, int f) { return values[flat(s, r, f)]; }

  // Receiver column for one (source, frequency) pair.
  Eigen::VectorXcd gather(int s, int f) const {
    Eigen::VectorXcd d(nr);
    for (int r = 0; r < nr; ++r) d[r] = at(s, r, f);
    return d;
  }
};

inline void check_frequencies(const std::vector<double>& freqs) {
  for (double f : freqs)
    if (!(f > 0.0) || !std::isfinite(f))
      throw DomainError("frequencies must be positive finite");
}

// Synthesizes data with one factorization per frequency, reused across all
// sources.
inline ObservedData forward_model(const SlownessModel& m, const Geometry& g,
                                  const std::vector<double>& freqs,
                                  const SourceSpectrum& spectrum) {
  check_frequencies(freqs);
  const SnappedGeometry snap = snap_geometry(m.grid, g);
  ObservedData data(static_cast<int>(snap.source_nodes.size()),
                    static_cast<int>(snap.receiver_nodes.size()), freqs);
  const SparseComplexMatrix P = projection_matrix(m.grid, snap.receiver_nodes);
  for (int jf = 0; jf < data.nf(); ++jf) {
    const HelmholtzOperator op = assemble(m, freqs[jf]);
    const Factorization lu(op.matrix);
    const cd w = spectrum.weight(freqs[jf]);
    for (int js = 0; js < data.ns; ++js) {
      const Eigen::VectorXcd q =
          source_vector(m.grid, snap.source_nodes[js], w);
      const Eigen::VectorXcd u = lu.solve(q);
      const Eigen::VectorXcd d = P.apply(u);
      for (int r = 0; r < data.nr; ++r) data.at(js, r, jf) = d[r];
    }
  }
  return data;
}

// Additive complex Gaussian noise, std per real/imag part.
inline void add_noise(ObservedData& data, double std_dev,
                      std::uint64_t seed) {
  if (std_dev < 0.0) throw DomainError("add_noise: negative std");
  if (std_dev == 0.0) return;
  GaussianRng rng(seed);
  for (Eigen::Index i = 0; i < data.values.size(); ++i)
    data.values[i] += cd(std_dev * rng(), std_dev * rng());
}

}  // namespace lrwi
