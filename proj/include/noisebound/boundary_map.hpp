#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <numbers>

#include "noisebound/core.hpp"

namespace noisebound {

using Vec3 = Eigen::Vector3d;
using Jacobian3 = Eigen::Matrix3d;

// Wraps an angle into (-pi, pi].
double wrap_angle(double theta);

// A point of R^2 x S^1: position plus the unit normal n = (cos theta, sin theta).
struct BoundaryPoint {
  Point2 pos;
  double theta = 0.0;

  Point2 normal() const { return {std::cos(theta), std::sin(theta)}; }
  Vec3 chart() const { return {pos.x, pos.y, theta}; }
  static BoundaryPoint from_chart(const Vec3& v) { return {{v[0], v[1]}, wrap_angle(v[2])}; }
};

// b - a in the (x, y, theta) chart with the angle difference wrapped.
Vec3 chart_difference(const BoundaryPoint& b, const BoundaryPoint& a);
double chart_distance(const BoundaryPoint& a, const BoundaryPoint& b, double theta_weight = 1.0);

// A diffeomorphism of R^2 x S^1 in the theta chart. The boundary map is the
// main instance; synthetic linear and normal-form maps implement it in tests.
class ChartMap {
public:
  virtual ~ChartMap() = default;
  virtual BoundaryPoint apply(const BoundaryPoint& z) const = 0;
  virtual BoundaryPoint apply_inverse(const BoundaryPoint& z) const = 0;
  virtual Jacobian3 jacobian(const BoundaryPoint& z) const = 0;
};

// A one-parameter family of chart maps, used by continuation.
using MapFamily = std::function<std::shared_ptr<const ChartMap>(double)>;

// beta(x, n) = (f(x) + eps m, m), m = (f'(x)^T)^{-1} n / |(f'(x)^T)^{-1} n|.
class BoundaryMap final : public ChartMap {
public:
  BoundaryMap(std::shared_ptr<const PlanarMap> map, const Params& params);

  BoundaryPoint apply(const BoundaryPoint& z) const override;
  BoundaryPoint apply_inverse(const BoundaryPoint& z) const override;
  Jacobian3 jacobian(const BoundaryPoint& z) const override;

  // |(f'(x)^T)^{-1} n|^{-1}; at a fixed point this is an eigenvalue of the Jacobian.
  double normal_contraction(const BoundaryPoint& z) const;

  const Params& params() const { return params_; }
  const PlanarMap& planar_map() const { return *map_; }
  std::shared_ptr<const PlanarMap> planar_map_ptr() const { return map_; }

private:
  std::shared_ptr<const PlanarMap> map_;
  Params params_;
};

// Which Params field a family varies.
enum class ParamName { a, b, eps };
ParamName parse_param_name(const std::string& s);
std::string to_string(ParamName p);
Params with_param(Params base, ParamName name, double value);

MapFamily boundary_map_family(std::shared_ptr<const PlanarMap> map, const Params& base, ParamName name);

BoundaryPoint beta_apply(const BoundaryPoint& z, const Params& params, const PlanarMap& map);
BoundaryPoint beta_inverse_apply(const BoundaryPoint& z, const Params& params, const PlanarMap& map);
Jacobian3 beta_jacobian(const BoundaryPoint& z, const Params& params, const PlanarMap& map);

// Central finite differences of a chart map, theta differences wrapped.
Jacobian3 finite_difference_jacobian(const ChartMap& map, const BoundaryPoint& z, double h = 1e-6);

}  // namespace noisebound
