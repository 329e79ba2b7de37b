#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lrwi/config.hpp"
#include "lrwi/errors.hpp"
#include "lrwi/grid_io.hpp"
#include "lrwi/hash.hpp"
#include "lrwi/version.hpp"

namespace lrwi {

// ---------------------------------------------------------------------------
// CSV: fixed column set, full-precision numbers, bytes deterministic.

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  explicit CsvTable(std::vector<std::string> cols)
      : columns(std::move(cols)) {}

  static std::string cell(double v) { return detail::format_double(v); }
  static std::string cell(int v) { return std::to_string(v); }

  void add_row(std::vector<std::string> cells) {
    if (cells.size() != columns.size())
      throw ShapeError("csv row has " + std::to_string(cells.size()) +
                       " cells, table has " + std::to_string(columns.size()) +
                       " columns");
    rows.push_back(std::move(cells));
  }

  std::string to_string() const {
    std::string out;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out += ',';
      out += columns[c];
    }
    out += '\n';
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out += ',';
        out += row[c];
      }
      out += '\n';
    }
    return out;
  }
};

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

inline void write_csv(const std::filesystem::path& path,
                      const CsvTable& table) {
  write_text_file(path, table.to_string());
}

// ---------------------------------------------------------------------------
// Manifest: enough to rerun a command exactly. No timestamps, by design.

inline void write_manifest(const std::filesystem::path& out_dir,
                           const std::string& command, const Config& cfg,
                           std::uint64_t seed,
                           const std::vector<std::string>& outputs) {
  std::string text = "LRWI-MANIFEST v1\n";
  text += "command = " + command + "\n";
  text += "version = " + std::string(kVersion) + "\n";
  text += "config_hash = " + hex64(cfg.hash()) + "\n";
  text += "seed = " + std::to_string(seed) + "\n";
  for (const auto& o : outputs) text += "output = " + o + "\n";
  write_text_file(out_dir / "manifest.txt", text);
}

// ---------------------------------------------------------------------------
// 8-bit binary PGM (P5) heat maps; the only image format emitted.

inline void write_pgm(const std::filesystem::path& path, int width,
                      int height, const std::vector<std::uint8_t>& gray) {
  if (width < 1 || height < 1 ||
      gray.size() != static_cast<std::size_t>(width) *
                         static_cast<std::size_t>(height))
    throw ShapeError("write_pgm: pixel count does not match dimensions");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(gray.data()),
            static_cast<std::streamsize>(gray.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

// Linear gray map of values into [0, 255] over [lo, hi]; nonfinite values
// saturate to white so failures stand out in the image.
inline std::vector<std::uint8_t> gray_map(const std::vector<double>& values,
                                          double lo, double hi) {
  std::vector<std::uint8_t> gray(values.size(), 0);
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v)) {
      gray[i] = 255;
      continue;
    }
    double t = (v - lo) / span;
    t = t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
    gray[i] = static_cast<std::uint8_t>(t * 255.0 + 0.5);
  }
  return gray;
}

}  // namespace lrwi
