#pragma once

#include <array>
#include <span>
#include <string>

#include "cavlab/datum.hpp"
#include "cavlab/fem.hpp"

namespace cavlab {

struct BalanceResult {
  std::array<double, 3> lambda{};  // unit norm, largest component positive
  std::array<Point, 3> forces{};   // outer net force of each input datum
  DatumSpec spec;                  // sum lambda_i g_i
  BoundaryDatum datum;             // combined datum sampled on the balancing mesh
  bool degenerate = false;
  std::string warning;
};

/// Unit null vector of the 2x3 force matrix [v1 v2 v3]. A vanishing v_i gives
/// e_i; near-parallel rows give e_i for the smallest |v_i| and set `degenerate`.
std::array<double, 3> force_null_vector(const std::array<Point, 3>& v, bool* degenerate = nullptr);

/// Zero-net-force combination of exactly three data, using the forces of the
/// cavity problem on `cavity_system`.
BalanceResult balance(std::span<const DatumSpec> data, const FESystem& cavity_system, const DomainSpec& domain,
                      SolverKind kind = SolverKind::Direct);

/// Convenience form that meshes Omega \ D at size h first.
BalanceResult balance(std::span<const DatumSpec> data, const DomainSpec& domain, const CavityShape& cavity,
                      double h, double min_angle = 25.0);

}  // namespace cavlab
