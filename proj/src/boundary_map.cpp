#include "noisebound/boundary_map.hpp"

namespace noisebound {

namespace {

// Non-owning view so the free functions can reuse BoundaryMap without a copy.
std::shared_ptr<const PlanarMap> borrow(const PlanarMap& map) {
  return std::shared_ptr<const PlanarMap>(&map, [](const PlanarMap*) {});
}

}  // namespace

double wrap_angle(double theta) {
  constexpr double pi = std::numbers::pi;
  if (theta > -pi && theta <= pi) return theta;
  double r = std::remainder(theta, 2.0 * pi);  // [-pi, pi]
  if (r <= -pi) r += 2.0 * pi;
  return r;
}

Vec3 chart_difference(const BoundaryPoint& b, const BoundaryPoint& a) {
  return {b.pos.x - a.pos.x, b.pos.y - a.pos.y, wrap_angle(b.theta - a.theta)};
}

double chart_distance(const BoundaryPoint& a, const BoundaryPoint& b, double theta_weight) {
  Vec3 d = chart_difference(b, a);
  d[2] *= theta_weight;
  return d.norm();
}

BoundaryMap::BoundaryMap(std::shared_ptr<const PlanarMap> map, const Params& params)
    : map_(std::move(map)), params_(params) {}

BoundaryPoint BoundaryMap::apply(const BoundaryPoint& z) const {
  const auto act = inv_transpose_action(map_->jacobian(z.pos, params_), z.normal());
  const Point2 image = map_->eval(z.pos, params_) + params_.eps * act.direction;
  return {image, wrap_angle(std::atan2(act.direction.y, act.direction.x))};
}

BoundaryPoint BoundaryMap::apply_inverse(const BoundaryPoint& z) const {
  // beta^{-1} = h_f^{-1} o g_eps^{-1}, and h_f^{-1} uses f'(p)^T at the preimage p.
  const Point2 n = z.normal();
  const Point2 p = map_->inverse(z.pos - params_.eps * n, params_);
  const Mat2 jac = map_->jacobian(p, params_);
  if (std::abs(jac.det()) < kSingularDet) {
    throw Error(ErrorKind::singular_matrix, "map Jacobian singular at the pulled-back point");
  }
  const Point2 m = jac.transpose() * n;
  return {p, wrap_angle(std::atan2(m.y, m.x))};
}

double BoundaryMap::normal_contraction(const BoundaryPoint& z) const {
  return 1.0 / inv_transpose_action(map_->jacobian(z.pos, params_), z.normal()).scale;
}

Jacobian3 BoundaryMap::jacobian(const BoundaryPoint& z) const {
  // v = M n with M = (J^T)^{-1}; theta' = arg v. With u the unit normal to v
  // and r = |v|, d theta' = u^T dv / r, and the position picks up eps u d theta'.
  const Mat2 jac = map_->jacobian(z.pos, params_);
  if (std::abs(jac.det()) < kSingularDet) {
    throw Error(ErrorKind::singular_matrix, "map Jacobian singular");
  }
  const Mat2 m = jac.transpose().inverse();
  const Point2 n = z.normal();
  const Point2 v = m * n;
  const double r = v.norm();
  const Point2 u = (1.0 / r) * v.perp();

  const auto [djx, djy] = map_->jacobian_derivative(z.pos, params_);
  // d(M) = -M dJ^T M
  const Point2 dv_dx = (m * djx.transpose() * m) * n * -1.0;
  const Point2 dv_dy = (m * djy.transpose() * m) * n * -1.0;
  const Point2 dv_dt = m * n.perp();

  const double gx = u.dot(dv_dx) / r;
  const double gy = u.dot(dv_dy) / r;
  const double gt = u.dot(dv_dt) / r;
  const double e = params_.eps;

  Jacobian3 out;
  out << jac.a11 + e * u.x * gx, jac.a12 + e * u.x * gy, e * u.x * gt,
         jac.a21 + e * u.y * gx, jac.a22 + e * u.y * gy, e * u.y * gt,
         gx, gy, gt;
  return out;
}

ParamName parse_param_name(const std::string& s) {
  if (s == "a") return ParamName::a;
  if (s == "b") return ParamName::b;
  if (s == "eps") return ParamName::eps;
  throw Error(ErrorKind::invalid_argument, "unknown parameter name '" + s + "'");
}

std::string to_string(ParamName p) {
  switch (p) {
    case ParamName::a: return "a";
    case ParamName::b: return "b";
    case ParamName::eps: return "eps";
  }
  return "?";
}

Params with_param(Params base, ParamName name, double value) {
  switch (name) {
    case ParamName::a: base.a = value; break;
    case ParamName::b: base.b = value; break;
    case ParamName::eps: base.eps = value; break;
  }
  return base;
}

MapFamily boundary_map_family(std::shared_ptr<const PlanarMap> map, const Params& base, ParamName name) {
  return [map = std::move(map), base, name](double value) -> std::shared_ptr<const ChartMap> {
    return std::make_shared<BoundaryMap>(map, with_param(base, name, value));
  };
}

BoundaryPoint beta_apply(const BoundaryPoint& z, const Params& params, const PlanarMap& map) {
  return BoundaryMap(borrow(map), params).apply(z);
}

BoundaryPoint beta_inverse_apply(const BoundaryPoint& z, const Params& params, const PlanarMap& map) {
  return BoundaryMap(borrow(map), params).apply_inverse(z);
}

Jacobian3 beta_jacobian(const BoundaryPoint& z, const Params& params, const PlanarMap& map) {
  return BoundaryMap(borrow(map), params).jacobian(z);
}

Jacobian3 finite_difference_jacobian(const ChartMap& map, const BoundaryPoint& z, double h) {
  Jacobian3 out;
  for (int j = 0; j < 3; ++j) {
    Vec3 dp = z.chart();
    Vec3 dm = z.chart();
    dp[j] += h;
    dm[j] -= h;
    const BoundaryPoint fp = map.apply(BoundaryPoint::from_chart(dp));
    const BoundaryPoint fm = map.apply(BoundaryPoint::from_chart(dm));
    out.col(j) = chart_difference(fp, fm) / (2.0 * h);
  }
  return out;
}

}  // namespace noisebound
