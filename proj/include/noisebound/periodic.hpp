#pragma once

#include <optional>
#include <vector>

#include "noisebound/boundary_map.hpp"
#include "noisebound/eigen.hpp"

namespace noisebound {

enum class Stability { stable, saddle_1u, saddle_2u, unstable };

std::string to_string(Stability s);

struct PeriodicOrbit {
  std::vector<BoundaryPoint> points;
  int period = 1;
  // Jacobian of map^period at points[0].
  Jacobian3 monodromy = Jacobian3::Identity();
  EigenStructure eigen;
  Stability stability = Stability::stable;
  double residual = 0.0;
  int iterations = 0;
};

struct NewtonOptions {
  double tol = 1e-10;
  int max_iterations = 50;
  int max_halvings = 8;
};

// Residual of the cyclic system map(z_i) - z_{i+1}, stacked.
Eigen::VectorXd cyclic_residual(const ChartMap& map, const std::vector<BoundaryPoint>& points);

// Product of the per-point Jacobians along the orbit, starting at points[start].
Jacobian3 orbit_monodromy(const ChartMap& map, const std::vector<BoundaryPoint>& points, std::size_t start = 0);

// Fills monodromy, eigen and stability. When the map is a BoundaryMap the
// normal-contraction product is used as the lambda1 hint.
void analyse_orbit(const ChartMap& map, PeriodicOrbit& orbit);

// Multi-point Newton on the cyclic system with backtracking. Rank-deficient
// Newton matrices fall back to a minimum-norm least-squares step, so maps with
// no periodic points end in no-convergence.
PeriodicOrbit find_periodic_orbit(const ChartMap& map, const std::vector<BoundaryPoint>& guess,
                                  const NewtonOptions& opts = {});

BoundaryPoint find_fixed_point(const ChartMap& map, const BoundaryPoint& guess, const NewtonOptions& opts = {});
BoundaryPoint find_fixed_point(const BoundaryPoint& guess, const Params& params, const PlanarMap& map,
                               const NewtonOptions& opts = {});

// Seeds a period-p guess by iterating the map from a single point.
std::vector<BoundaryPoint> orbit_guess(const ChartMap& map, const BoundaryPoint& start, int period);

// Every fixed point of the Henon boundary map: on a fixed point the position
// solves x - f(x) = eps n(theta), which is a quadratic in x for each theta; a
// sign change of the angular residual along theta brackets each solution,
// which Newton then polishes.
std::vector<BoundaryPoint> henon_fixed_points(const Params& params, int theta_samples = 4096);

struct SearchRegion {
  Point2 lo{-2.0, -2.0};
  Point2 hi{2.0, 2.0};
  int samples_xy = 9;
  int samples_theta = 12;
};

// Multistart Newton for orbits of exact minimal period, deduplicated.
std::vector<PeriodicOrbit> search_periodic_orbits(const ChartMap& map, int period, const SearchRegion& region,
                                                  const NewtonOptions& opts = {});

struct EigenRelationReport {
  double lambda1 = 0.0;             // product of |(f'(x_i)^T)^{-1} n_i|^{-1}
  EigenStructure eigen;
  double eigenvalue_residual = 0.0;  // min |mu - lambda1| over the spectrum
  double product_residual = 0.0;     // |lambda1 - lambda2 lambda3| (complex pair), else NaN
  double projection_ratio = 0.0;     // sigma_min / sigma_max of pi(V)
  double projection_angle = 0.0;     // angle between pi(V) and the tangent u_n
};

// Requires a fixed (or periodic) point with residual below 1e-9.
EigenRelationReport check_eigen_relations(const BoundaryMap& map, const PeriodicOrbit& orbit);
EigenRelationReport check_eigen_relations(const BoundaryPoint& fp, const Params& params, const PlanarMap& map);

}  // namespace noisebound
