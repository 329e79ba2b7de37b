#pragma once

#include <stdexcept>
#include <string>

namespace lrwi {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Mismatched grid shapes, vector lengths, block dimensions.
struct ShapeError : Error {
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Values outside their physical or numerical domain (nonpositive slowness,
// nonfinite entries, coordinates off the grid, bad parameter ranges).
struct DomainError : Error {
  explicit DomainError(const std::string& msg) : Error(msg) {}
};

// A factorization or least-squares solve that cannot be trusted.
struct SingularityError : Error {
  explicit SingularityError(const std::string& msg) : Error(msg) {}
};

// Malformed config files, unknown keys, malformed grid/data files.
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Filesystem trouble: missing files, unwritable outputs.
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace lrwi
