#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "noisebound/error.hpp"

namespace noisebound {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  Point2& operator+=(const Point2& o) { x += o.x; y += o.y; return *this; }
  Point2& operator-=(const Point2& o) { x -= o.x; y -= o.y; return *this; }
  friend Point2 operator+(Point2 a, const Point2& b) { return a += b; }
  friend Point2 operator-(Point2 a, const Point2& b) { return a -= b; }
  friend Point2 operator*(double s, const Point2& p) { return {s * p.x, s * p.y}; }
  friend Point2 operator*(const Point2& p, double s) { return {s * p.x, s * p.y}; }
  friend bool operator==(const Point2&, const Point2&) = default;

  double norm() const { return std::hypot(x, y); }
  double dot(const Point2& o) const { return x * o.x + y * o.y; }
  // Counter-clockwise quarter turn.
  Point2 perp() const { return {-y, x}; }
};

inline double distance(const Point2& a, const Point2& b) { return (a - b).norm(); }

// 2x2 matrix, row-major.
struct Mat2 {
  double a11 = 0.0, a12 = 0.0;
  double a21 = 0.0, a22 = 0.0;

  static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static Mat2 diag(double d1, double d2) { return {d1, 0.0, 0.0, d2}; }

  double det() const { return a11 * a22 - a12 * a21; }
  Mat2 transpose() const { return {a11, a21, a12, a22}; }
  Mat2 inverse() const;
  // Largest singular value.
  double spectral_norm() const;

  Point2 operator*(const Point2& p) const { return {a11 * p.x + a12 * p.y, a21 * p.x + a22 * p.y}; }
  Mat2 operator*(const Mat2& m) const {
    return {a11 * m.a11 + a12 * m.a21, a11 * m.a12 + a12 * m.a22,
            a21 * m.a11 + a22 * m.a21, a21 * m.a12 + a22 * m.a22};
  }
  Mat2 operator*(double s) const { return {s * a11, s * a12, s * a21, s * a22}; }
  Mat2 operator+(const Mat2& m) const { return {a11 + m.a11, a12 + m.a12, a21 + m.a21, a22 + m.a22}; }
  Mat2 operator-(const Mat2& m) const { return {a11 - m.a11, a12 - m.a12, a21 - m.a21, a22 - m.a22}; }
};

// Singularity threshold shared by every 2x2 inversion in the library.
inline constexpr double kSingularDet = 1e-14;

// (a, b) are the Henon coefficients, eps the noise radius. eps == 0 is the
// deterministic limit and is accepted; b == 0 only breaks the Henon inverse.
struct Params {
  double a = 0.0;
  double b = 0.3;
  double eps = 0.0;

  void validate() const;
};

// A planar diffeomorphism family evaluated at Params. The second derivative is
// needed by the analytic boundary-map Jacobian.
class PlanarMap {
public:
  virtual ~PlanarMap() = default;

  virtual Point2 eval(const Point2& p, const Params& params) const = 0;
  virtual Point2 inverse(const Point2& p, const Params& params) const = 0;
  virtual Mat2 jacobian(const Point2& p, const Params& params) const = 0;
  // Partial derivatives of the Jacobian with respect to x and y.
  virtual std::pair<Mat2, Mat2> jacobian_derivative(const Point2& p, const Params& params) const = 0;
  virtual std::string name() const = 0;
};

// f(x, y) = (1 - a x^2 + y, b x)
class HenonMap final : public PlanarMap {
public:
  Point2 eval(const Point2& p, const Params& params) const override;
  Point2 inverse(const Point2& p, const Params& params) const override;
  Mat2 jacobian(const Point2& p, const Params& params) const override;
  std::pair<Mat2, Mat2> jacobian_derivative(const Point2& p, const Params& params) const override;
  std::string name() const override { return "henon"; }
};

// f(z) = A z + c. Ignores (a, b); eps still applies through the noise.
class AffineMap final : public PlanarMap {
public:
  AffineMap(const Mat2& matrix, const Point2& offset);

  static AffineMap scaling(double c) { return AffineMap(Mat2::diag(c, c), {}); }
  static AffineMap identity() { return AffineMap(Mat2::identity(), {}); }

  Point2 eval(const Point2& p, const Params& params) const override;
  Point2 inverse(const Point2& p, const Params& params) const override;
  Mat2 jacobian(const Point2& p, const Params& params) const override;
  std::pair<Mat2, Mat2> jacobian_derivative(const Point2& p, const Params& params) const override;
  std::string name() const override { return "affine"; }

  const Mat2& matrix() const { return matrix_; }
  const Point2& offset() const { return offset_; }

private:
  Mat2 matrix_;
  Mat2 inverse_;
  Point2 offset_;
};

Point2 henon_eval(const Point2& p, const Params& params);
Point2 henon_inverse(const Point2& p, const Params& params);
Mat2 henon_jacobian(const Point2& p, const Params& params);

struct InvTransposeAction {
  Point2 direction;  // unit vector
  double scale = 0.0;  // norm before normalisation
};

// ((M^T)^{-1} n normalised, |(M^T)^{-1} n|).
InvTransposeAction inv_transpose_action(const Mat2& m, const Point2& n);

struct GuardBox {
  Point2 lo{-10.0, -10.0};
  Point2 hi{10.0, 10.0};

  bool contains(const Point2& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
  }
};

// Noisy orbit z_{i+1} = f(z_i) + xi_i with xi_i uniform in the closed
// eps-ball. Returns steps + 1 points (the seed first).
std::vector<Point2> sample_orbit(const Point2& seed, const Params& params, const PlanarMap& map,
                                 std::size_t steps, std::uint64_t rng_seed,
                                 const GuardBox& guard = {});

}  // namespace noisebound
