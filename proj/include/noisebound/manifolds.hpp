#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "noisebound/periodic.hpp"
#include "noisebound/set_valued.hpp"

namespace noisebound {

enum class ManifoldKind { unstable, stable };
enum class Side { plus, minus };
enum class Termination { max_arc, max_points, reached_target, step_collapse, map_failure };

std::string to_string(ManifoldKind k);
std::string to_string(Side s);
std::string to_string(Termination t);

struct GrowthConfig {
  double delta0 = 1e-6;        // seed offset along the eigenvector (chart length)
  double max_arc = 10.0;
  std::size_t max_points = 20000;
  double min_step = 1e-9;
  double max_step = 5e-3;
  double max_turn = 0.15;      // radians between consecutive segments
  double theta_weight = 1.0;
  double target_tol = 1e-3;    // stop once this close to a target point

  void validate() const;
  // Chord deviation allowed by the step and turn bounds.
  double interpolation_tolerance() const { return max_step * max_turn; }
};

// An ordered polyline in the (x, y, theta) chart, theta lifted to be
// continuous along the branch.
struct ManifoldBranch {
  PeriodicOrbit base;
  std::size_t base_index = 0;   // which orbit point the branch emanates from
  Side side = Side::plus;
  ManifoldKind kind = ManifoldKind::unstable;
  // Set when the branch was grown for a planar map at these parameters.
  std::optional<Params> params;
  GrowthConfig config;
  // Eigenvalue and unit chart eigenvector of the growth map at the base point.
  double eigenvalue = 0.0;
  Vec3 eigenvector = Vec3::Zero();
  // Iterates of beta per growth step: period, doubled for a negative eigenvalue.
  int steps_per_iterate = 1;

  std::vector<Vec3> points;     // lifted chart coordinates
  std::vector<double> arc;      // cumulative chart arc length
  // Fractional number of growth-map iterates separating each vertex from the
  // seed fundamental domain (seed vertices lie in [0, 1]).
  std::vector<double> level;
  Termination termination = Termination::max_arc;
  bool truncated = false;
  std::optional<std::size_t> reached_target;  // index into the targets list

  std::size_t size() const { return points.size(); }
  BoundaryPoint point(std::size_t i) const { return BoundaryPoint::from_chart(points[i]); }
};

// Grows the branch of the one-dimensional unstable manifold of orbit point
// base_index. Requires exactly one multiplier of modulus > 1. The plus side
// is the eigenvector whose first nonzero component is positive.
ManifoldBranch grow_unstable(const PeriodicOrbit& orbit, const ChartMap& beta, const GrowthConfig& cfg,
                             Side side = Side::plus, std::size_t base_index = 0,
                             const std::vector<BoundaryPoint>& targets = {});
ManifoldBranch grow_unstable(const PeriodicOrbit& orbit, const Params& params, const PlanarMap& map,
                             const GrowthConfig& cfg, Side side = Side::plus, std::size_t base_index = 0,
                             const std::vector<BoundaryPoint>& targets = {});

// Stable manifold grown as the unstable manifold of the inverse boundary map.
// Requires exactly one multiplier of modulus < 1.
ManifoldBranch grow_stable(const PeriodicOrbit& orbit, const ChartMap& beta, const GrowthConfig& cfg,
                           Side side = Side::plus, std::size_t base_index = 0,
                           const std::vector<BoundaryPoint>& targets = {});
ManifoldBranch grow_stable(const PeriodicOrbit& orbit, const Params& params, const PlanarMap& map,
                           const GrowthConfig& cfg, Side side = Side::plus, std::size_t base_index = 0,
                           const std::vector<BoundaryPoint>& targets = {});

// Both sides of every orbit point.
std::vector<ManifoldBranch> grow_all(ManifoldKind kind, const PeriodicOrbit& orbit, const ChartMap& beta,
                                     const GrowthConfig& cfg, const std::vector<BoundaryPoint>& targets = {});
std::vector<ManifoldBranch> grow_all(ManifoldKind kind, const PeriodicOrbit& orbit, const Params& params,
                                     const PlanarMap& map, const GrowthConfig& cfg,
                                     const std::vector<BoundaryPoint>& targets = {});

struct Polyline2 {
  std::vector<Point2> points;
  std::vector<double> arc;

  static Polyline2 from_points(const std::vector<Point2>& pts);
  std::size_t size() const { return points.size(); }
  double length() const { return arc.empty() ? 0.0 : arc.back(); }
};

// Drops theta; consecutive duplicates are removed so no segment has zero length.
Polyline2 project(const ManifoldBranch& branch);

// Maximal runs of vertices within tol of the boundary boxes of the cover.
// tol <= 0 selects 1.5 box diagonals.
std::vector<Polyline2> prune_noncontributing(const Polyline2& proj, const BoxSet& cover, double tol = 0.0);

// Chart distance from a point to a lifted chart polyline.
double distance_to_polyline(const Vec3& q, const std::vector<Vec3>& poly, double theta_weight = 1.0);

// Max over branch points z (every stride-th point) of the chart distance from
// beta(z) to the union of branches.
double bundle_invariance_residual(const std::vector<ManifoldBranch>& branches, const ChartMap& beta,
                                  std::size_t stride = 1);
double bundle_invariance_residual(const std::vector<ManifoldBranch>& branches, const Params& params,
                                  const PlanarMap& map, std::size_t stride = 1);
// The same residual for plain lifted polylines (closed curves, synthetic data).
double bundle_invariance_residual(const std::vector<std::vector<Vec3>>& polylines, const ChartMap& beta,
                                  double theta_weight = 1.0, std::size_t stride = 1);

struct ClosestApproach {
  double distance = 0.0;
  Vec3 on_a = Vec3::Zero();
  Vec3 on_b = Vec3::Zero();  // lifted to the theta sheet nearest on_a
  std::size_t segment_a = 0;
  std::size_t segment_b = 0;
  // Unit chart tangents of the two segments at the witness points.
  Vec3 tangent_a = Vec3::Zero();
  Vec3 tangent_b = Vec3::Zero();
};

// Exact minimum over segment pairs, theta differences wrapped.
ClosestApproach manifold_min_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b,
                                      double theta_weight = 1.0);
ClosestApproach manifold_min_distance(const ManifoldBranch& a, const ManifoldBranch& b);

// CSV "s,x,y,theta" (theta wrapped) and the JSON sidecar.
void write_manifold_csv(std::ostream& out, const ManifoldBranch& branch);
void write_manifold_sidecar(std::ostream& out, const ManifoldBranch& branch);
void write_polyline_csv(std::ostream& out, const Polyline2& poly);

}  // namespace noisebound
