#pragma once

#include "noisebound/boundary_map.hpp"

namespace noisebound::testing {

// z -> M z + c on the (x, y, theta) chart, angle wrapped.
class LinearChartMap final : public ChartMap {
public:
  explicit LinearChartMap(const Jacobian3& m, const Vec3& c = Vec3::Zero()) : m_(m), inv_(m.inverse()), c_(c) {}

  BoundaryPoint apply(const BoundaryPoint& z) const override { return BoundaryPoint::from_chart(m_ * z.chart() + c_); }
  BoundaryPoint apply_inverse(const BoundaryPoint& z) const override {
    return BoundaryPoint::from_chart(inv_ * (z.chart() - c_));
  }
  Jacobian3 jacobian(const BoundaryPoint&) const override { return m_; }

private:
  Jacobian3 m_, inv_;
  Vec3 c_;
};

inline Jacobian3 diag3(double a, double b, double c) { return Vec3(a, b, c).asDiagonal(); }

}  // namespace noisebound::testing

namespace noisebound::testing {

// x -> x + (a - 0.5) + x^2 with y and theta halved: fixed points x = +-sqrt(0.5 - a)
// merge in a fold at a = 0.5 with multiplier 1 + 2x.
class FoldNormalForm final : public ChartMap {
public:
  explicit FoldNormalForm(double a) : a_(a) {}

  BoundaryPoint apply(const BoundaryPoint& z) const override {
    const double x = z.pos.x;
    return BoundaryPoint::from_chart(Vec3(x + (a_ - 0.5) + x * x, 0.5 * z.pos.y, 0.5 * z.theta));
  }
  BoundaryPoint apply_inverse(const BoundaryPoint& z) const override {
    const double x = 0.5 * (-1.0 + std::sqrt(1.0 + 4.0 * (z.pos.x - a_ + 0.5)));
    return BoundaryPoint::from_chart(Vec3(x, 2.0 * z.pos.y, 2.0 * z.theta));
  }
  Jacobian3 jacobian(const BoundaryPoint& z) const override { return diag3(1.0 + 2.0 * z.pos.x, 0.5, 0.5); }

private:
  double a_;
};

}  // namespace noisebound::testing
