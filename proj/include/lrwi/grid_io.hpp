#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "lrwi/grid.hpp"

namespace lrwi {

enum class GridUnit { velocity, slowness2 };

inline const char* grid_unit_name(GridUnit u) {
  return u == GridUnit::velocity ? "velocity" : "slowness2";
}

struct GridFileContents {
  Grid2D grid;
  GridUnit unit = GridUnit::velocity;
  Eigen::VectorXd values;

  SlownessModel as_slowness() const {
    if (unit == GridUnit::slowness2) return SlownessModel(grid, values);
    return velocity_to_slowness(VelocityModel(grid, values));
  }
  VelocityModel as_velocity() const {
    if (unit == GridUnit::velocity) return VelocityModel(grid, values);
    return slowness_to_velocity(SlownessModel(grid, values));
  }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Accepts "key=value", throws otherwise.
inline std::string header_field(const std::string& token, const char* key) {
  const std::string prefix = std::string(key) + "=";
  if (token.rfind(prefix, 0) != 0)
    throw ConfigError("grid file header: expected '" + prefix +
                      "...', got '" + token + "'");
  return token.substr(prefix.size());
}

inline int parse_int(const std::string& s, const char* what) {
  std::size_t pos = 0;
  int v = 0;
  try {
    v = std::stoi(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError(std::string("grid file header: bad ") + what + " '" +
                      s + "'");
  }
  if (pos != s.size())
    throw ConfigError(std::string("grid file header: bad ") + what + " '" +
                      s + "'");
  return v;
}

inline double parse_double(const std::string& s, const char* what) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError(std::string("bad ") + what + " '" + s + "'");
  }
  if (pos != s.size())
    throw ConfigError(std::string("bad ") + what + " '" + s + "'");
  return v;
}

}  // namespace detail

// LRWI-GRID v1:
//   LRWI-GRID v1 nx=<int> nz=<int> dx=<float> dz=<float> unit=<u>
//   then nz lines with nx whitespace-separated floats (row iz per line).
inline GridFileContents read_grid_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open grid file " + path.string());

  std::string header;
  if (!std::getline(in, header))
    throw ConfigError("grid file " + path.string() + ": empty file");
  std::istringstream hs(header);
  std::string magic, version, t_nx, t_nz, t_dx, t_dz, t_unit, extra;
  hs >> magic >> version >> t_nx >> t_nz >> t_dx >> t_dz >> t_unit;
  if (!hs || magic != "LRWI-GRID" || version != "v1")
    throw ConfigError("grid file " + path.string() +
                      ": header must start with 'LRWI-GRID v1'");
  if (hs >> extra)
    throw ConfigError("grid file " + path.string() +
                      ": trailing tokens in header");

  const int nx = detail::parse_int(detail::header_field(t_nx, "nx"), "nx");
  const int nz = detail::parse_int(detail::header_field(t_nz, "nz"), "nz");
  const double dx =
      detail::parse_double(detail::header_field(t_dx, "dx"), "dx");
  const double dz =
      detail::parse_double(detail::header_field(t_dz, "dz"), "dz");
  const std::string unit_s = detail::header_field(t_unit, "unit");

  GridFileContents out;
  if (unit_s == "velocity")
    out.unit = GridUnit::velocity;
  else if (unit_s == "slowness2")
    out.unit = GridUnit::slowness2;
  else
    throw ConfigError("grid file " + path.string() + ": unknown unit '" +
                      unit_s + "'");
  out.grid = Grid2D(nx, nz, dx, dz);
  out.values.resize(out.grid.size());

  std::string line;
  for (int iz = 0; iz < nz; ++iz) {
    if (!std::getline(in, line))
      throw ConfigError("grid file " + path.string() + ": expected " +
                        std::to_string(nz) + " data rows, got " +
                        std::to_string(iz));
    std::istringstream ls(line);
    for (int ix = 0; ix < nx; ++ix) {
      double v;
      if (!(ls >> v))
        throw ConfigError("grid file " + path.string() + ": row " +
                          std::to_string(iz) + " has fewer than " +
                          std::to_string(nx) + " values");
      out.values[out.grid.index(ix, iz)] = v;
    }
    std::string rest;
    if (ls >> rest)
      throw ConfigError("grid file " + path.string() + ": row " +
                        std::to_string(iz) + " has more than " +
                        std::to_string(nx) + " values");
  }
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos)
      throw ConfigError("grid file " + path.string() +
                        ": unexpected content after data rows");
  }
  return out;
}

inline void write_grid_file(const std::filesystem::path& path,
                            const Grid2D& grid, GridUnit unit,
                            const Eigen::VectorXd& values) {
  if (values.size() != grid.size())
    throw ShapeError("write_grid_file: value count mismatch");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write grid file " + path.string());
  out << "LRWI-GRID v1 nx=" << grid.nx << " nz=" << grid.nz
      << " dx=" << detail::format_double(grid.dx)
      << " dz=" << detail::format_double(grid.dz)
      << " unit=" << grid_unit_name(unit) << "\n";
  for (int iz = 0; iz < grid.nz; ++iz) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      if (ix) out << ' ';
      out << detail::format_double(values[grid.index(ix, iz)]);
    }
    out << '\n';
  }
  if (!out) throw IoError("failed while writing " + path.string());
}

inline void write_grid_file(const std::filesystem::path& path,
                            const SlownessModel& m) {
  write_grid_file(path, m.grid, GridUnit::slowness2, m.values);
}

inline void write_grid_file(const std::filesystem::path& path,
                            const VelocityModel& v) {
  write_grid_file(path, v.grid, GridUnit::velocity, v.values);
}

}  // namespace lrwi
