#pragma once

#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "noisebound/core.hpp"
#include "noisebound/manifolds.hpp"

namespace noisebound {

// Exact sign of the orientation determinant of (a, b, c): +1 for a left
// turn, -1 for a right turn, 0 when collinear.
int orient2d(const Point2& a, const Point2& b, const Point2& c);

// Proper crossing of two segments (interiors meet in a single point).
bool segments_cross(const Point2& a0, const Point2& a1, const Point2& b0, const Point2& b1);

struct Intersection {
  Point2 point;
  std::size_t seg_i = 0;  // seg_j > seg_i + 1
  std::size_t seg_j = 0;
  double t_i = 0.0;       // position within each segment, in (0, 1)
  double t_j = 0.0;
  double arc_i = 0.0;     // arc length along the polyline
  double arc_j = 0.0;
};

// Collinear segments sharing more than a point.
struct SegmentOverlap {
  std::size_t seg_i = 0;
  std::size_t seg_j = 0;
};

// All proper crossings between non-adjacent segments, ordered by (seg_i,
// seg_j). Collinear overlaps are not crossings; they go to *overlaps when
// given.
std::vector<Intersection> self_intersections(const Polyline2& poly, std::vector<SegmentOverlap>* overlaps = nullptr);

// O(n^2) reference implementation with the same contract.
std::vector<Intersection> self_intersections_brute_force(const Polyline2& poly,
                                                         std::vector<SegmentOverlap>* overlaps = nullptr);

struct Wedge {
  Intersection apex;       // segment indices refer to the deduplicated projection
  double lobe_span = 0.0;  // arc length of the loop closed by the apex
  int rank = 0;            // 0 = outermost
  double distance = 0.0;   // apex distance to the reference point, if any
  // Branch wedges only: the smaller of the two sines between one strand's
  // continuation into the loop and the other strand's inner normal, and the
  // growth level of the first strand.
  double sharpness = 0.0;
  double level = 0.0;
};

// One wedge per self-intersection. With a reference point wedges are ranked
// by decreasing apex distance; otherwise by position along the polyline.
std::vector<Wedge> detect_wedges(const Polyline2& poly, const std::optional<Point2>& reference = std::nullopt);

// Wedges of a lifted branch that are concave corners of the boundary: each
// strand enters the loop on the inner side of the other strand, with the
// outer normals read from theta. Crossings with sharpness at or below
// min_sharpness are dropped. Without a reference, rank follows the branch.
std::vector<Wedge> detect_wedges(const ManifoldBranch& branch, const std::optional<Point2>& reference = std::nullopt,
                                 double min_sharpness = 0.0);

// Wedges whose apex lies within radius of centre.
std::vector<Wedge> wedges_near(const std::vector<Wedge>& wedges, const Point2& centre, double radius);

struct CascadeFit {
  // Geometry: apex distances d_k ~ d_0 q^k, k = 0 outermost.
  Point2 accumulation;
  std::vector<Wedge> wedges;
  double ratio = 0.0;
  double geometry_residual = 0.0;  // RMS in log units
  bool geometric = false;

  // Parameters: log(a_i - a_{i+1}) ~ log(a_0 - a_1) + c i.
  std::vector<double> disappearances;
  double c = 0.0;
  double intercept = 0.0;
  double a0 = 0.0;
  double a1 = 0.0;
  double a_inf = 0.0;
  double residual = 0.0;      // RMS in log units
  double max_residual = 0.0;
};

inline constexpr double kGeometricResidualLimit = 0.5;

// Fits geometric decay of apex distances to the accumulation point. Needs at
// least three wedges; geometric is false when the residual exceeds the limit.
CascadeFit detect_cascade(const std::vector<Wedge>& wedges, const Point2& accumulation,
                          double residual_limit = kGeometricResidualLimit);

// a_inf = a1 - (a0 - a1) / (exp(-c) - 1); needs c < 0.
double accumulation_parameter(double a0, double a1, double c);

// Least-squares fit over strictly decreasing disappearance parameters
// (at least three). Throws non_monotone_input or divergent_series.
CascadeFit scaling_fit(const std::vector<double>& disappearances);
CascadeFit scaling_fit(const std::vector<std::pair<int, double>>& indexed);

void write_singularity_report(std::ostream& out, const std::vector<Intersection>& intersections,
                              const std::vector<Wedge>& wedges, const std::optional<CascadeFit>& cascade,
                              const std::optional<CascadeFit>& scaling);

}  // namespace noisebound
