#pragma once

#include <stdexcept>
#include <string>

namespace cavlab {

/// Malformed or infeasible geometry (bad radius, self-intersecting polygon,
/// cavity touching the outer boundary).
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The mesher could not meet its quality contract within the insertion budget.
class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear algebra failure or a violated solver precondition.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Boundary datum that cannot be constructed or corrected (unknown preset,
/// empty support).
class DatumError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration (unknown key, out-of-range value).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cavlab
