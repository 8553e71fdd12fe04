#include "noisebound/core.hpp"

#include <random>
#include <sstream>

namespace noisebound {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::degenerate_parameter: return "degenerate-parameter";
    case ErrorKind::singular_matrix: return "singular-matrix";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::escape: return "escape";
    case ErrorKind::no_convergence: return "no-convergence";
    case ErrorKind::collapsed_orbit: return "collapsed-orbit";
    case ErrorKind::not_a_fixed_point: return "not-a-fixed-point";
    case ErrorKind::not_a_saddle: return "not-a-saddle";
    case ErrorKind::empty_input: return "empty-input";
    case ErrorKind::ill_conditioned: return "ill-conditioned";
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::no_transition: return "no-transition";
    case ErrorKind::no_fold: return "no-fold-in-range";
    case ErrorKind::indicator_not_monotone: return "indicator-not-monotone";
    case ErrorKind::non_monotone_input: return "non-monotone-input";
    case ErrorKind::divergent_series: return "divergent-series";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::lost_branch: return "lost-branch";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

Mat2 Mat2::inverse() const {
  const double d = det();
  if (std::abs(d) < kSingularDet) {
    throw Error(ErrorKind::singular_matrix, "2x2 determinant below threshold");
  }
  return {a22 / d, -a12 / d, -a21 / d, a11 / d};
}

double Mat2::spectral_norm() const {
  const double f = a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22;
  const double d = det();
  return std::sqrt(0.5 * (f + std::sqrt(std::max(0.0, f * f - 4.0 * d * d))));
}

void Params::validate() const {
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(eps)) {
    throw Error(ErrorKind::invalid_argument, "non-finite parameter");
  }
  if (b == 0.0) throw Error(ErrorKind::degenerate_parameter, "b must be non-zero");
  if (eps < 0.0) throw Error(ErrorKind::invalid_argument, "eps must be non-negative");
}

Point2 henon_eval(const Point2& p, const Params& params) {
  return {1.0 - params.a * p.x * p.x + p.y, params.b * p.x};
}

Point2 henon_inverse(const Point2& p, const Params& params) {
  if (params.b == 0.0) throw Error(ErrorKind::degenerate_parameter, "Henon inverse needs b != 0");
  const double x = p.y / params.b;
  return {x, p.x - 1.0 + params.a * x * x};
}

Mat2 henon_jacobian(const Point2& p, const Params& params) {
  return {-2.0 * params.a * p.x, 1.0, params.b, 0.0};
}

Point2 HenonMap::eval(const Point2& p, const Params& params) const { return henon_eval(p, params); }
Point2 HenonMap::inverse(const Point2& p, const Params& params) const { return henon_inverse(p, params); }
Mat2 HenonMap::jacobian(const Point2& p, const Params& params) const { return henon_jacobian(p, params); }

std::pair<Mat2, Mat2> HenonMap::jacobian_derivative(const Point2&, const Params& params) const {
  return {Mat2{-2.0 * params.a, 0.0, 0.0, 0.0}, Mat2{}};
}

AffineMap::AffineMap(const Mat2& matrix, const Point2& offset)
    : matrix_(matrix), inverse_(matrix.inverse()), offset_(offset) {}

Point2 AffineMap::eval(const Point2& p, const Params&) const { return matrix_ * p + offset_; }
Point2 AffineMap::inverse(const Point2& p, const Params&) const { return inverse_ * (p - offset_); }
Mat2 AffineMap::jacobian(const Point2&, const Params&) const { return matrix_; }
std::pair<Mat2, Mat2> AffineMap::jacobian_derivative(const Point2&, const Params&) const { return {}; }

InvTransposeAction inv_transpose_action(const Mat2& m, const Point2& n) {
  if (std::abs(m.det()) < kSingularDet) {
    throw Error(ErrorKind::singular_matrix, "inv_transpose_action on a singular matrix");
  }
  const Point2 v = m.transpose().inverse() * n;
  const double s = v.norm();
  return {(1.0 / s) * v, s};
}

namespace {

// 53-bit uniform in [0, 1); avoids the implementation-defined
// std::uniform_real_distribution so orbits replay across standard libraries.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Point2 sample_ball(std::mt19937_64& rng, double radius) {
  if (radius == 0.0) return {};
  for (;;) {
    const double u = 2.0 * unit_uniform(rng) - 1.0;
    const double v = 2.0 * unit_uniform(rng) - 1.0;
    if (u * u + v * v <= 1.0) return {radius * u, radius * v};
  }
}

}  // namespace

std::vector<Point2> sample_orbit(const Point2& seed, const Params& params, const PlanarMap& map,
                                 std::size_t steps, std::uint64_t rng_seed, const GuardBox& guard) {
  if (steps < 1) throw Error(ErrorKind::invalid_argument, "sample_orbit needs steps >= 1");
  std::mt19937_64 rng(rng_seed);
  std::vector<Point2> orbit;
  orbit.reserve(steps + 1);
  orbit.push_back(seed);
  Point2 z = seed;
  for (std::size_t i = 0; i < steps; ++i) {
    z = map.eval(z, params) + sample_ball(rng, params.eps);
    if (!guard.contains(z)) {
      std::ostringstream msg;
      msg << "orbit left the guard box at step " << i + 1;
      throw Error(ErrorKind::divergence, msg.str());
    }
    orbit.push_back(z);
  }
  return orbit;
}

}  // namespace noisebound
