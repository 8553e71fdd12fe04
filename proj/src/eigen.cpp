#include "noisebound/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace noisebound {

std::string to_string(SpectrumKind k) {
  return k == SpectrumKind::all_real ? "all-real" : "complex-pair";
}

double EigenStructure::spectral_radius() const {
  return std::max({std::abs(lambda1), std::abs(lambda2), std::abs(lambda3)});
}

int EigenStructure::count_outside_unit_circle() const {
  int n = 0;
  for (const auto& l : eigenvalues()) n += std::abs(l) > 1.0 ? 1 : 0;
  return n;
}

CubicCoefficients characteristic_cubic(const Jacobian3& j) {
  const double tr = j.trace();
  const double minors = j(0, 0) * j(1, 1) - j(0, 1) * j(1, 0) +
                        j(0, 0) * j(2, 2) - j(0, 2) * j(2, 0) +
                        j(1, 1) * j(2, 2) - j(1, 2) * j(2, 1);
  return {-tr, minors, -j.determinant()};
}

double cubic_discriminant(const CubicCoefficients& c) {
  // For the monic cubic x^3 + b x^2 + c x + d:
  // 18bcd - 4b^3 d + b^2 c^2 - 4c^3 - 27d^2
  const double b = c.c2, cc = c.c1, d = c.c0;
  return 18.0 * b * cc * d - 4.0 * b * b * b * d + b * b * cc * cc - 4.0 * cc * cc * cc - 27.0 * d * d;
}

namespace {

double polish(const CubicCoefficients& c, double x) {
  for (int it = 0; it < 3; ++it) {
    const double f = ((x + c.c2) * x + c.c1) * x + c.c0;
    const double df = (3.0 * x + 2.0 * c.c2) * x + c.c1;
    if (df == 0.0) break;
    const double step = f / df;
    if (!std::isfinite(step)) break;
    x -= step;
    if (std::abs(step) <= 1e-17 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}

}  // namespace

std::array<std::complex<double>, 3> cubic_roots(const CubicCoefficients& c) {
  using cd = std::complex<double>;
  const double shift = c.c2 / 3.0;
  // depressed cubic t^3 + p t + q with x = t - shift
  const double p = c.c1 - c.c2 * c.c2 / 3.0;
  const double q = 2.0 * c.c2 * c.c2 * c.c2 / 27.0 - c.c2 * c.c1 / 3.0 + c.c0;
  const double half_disc = q * q / 4.0 + p * p * p / 27.0;

  if (half_disc <= 0.0) {
    std::array<double, 3> r{};
    if (p == 0.0) {
      r = {-shift, -shift, -shift};
    } else {
      const double m = 2.0 * std::sqrt(-p / 3.0);
      const double arg = std::clamp(3.0 * q / (p * m), -1.0, 1.0);
      const double phi = std::acos(arg) / 3.0;
      for (int k = 0; k < 3; ++k) {
        r[k] = m * std::cos(phi - 2.0 * std::numbers::pi * k / 3.0) - shift;
      }
    }
    for (auto& x : r) x = polish(c, x);
    std::sort(r.begin(), r.end(), std::greater<>());
    return {cd(r[0]), cd(r[1]), cd(r[2])};
  }

  const double s = std::sqrt(half_disc);
  const double a = -std::copysign(std::cbrt(std::abs(q) / 2.0 + s), q);
  const double b = a != 0.0 ? -p / (3.0 * a) : 0.0;
  const double real = polish(c, a + b - shift);
  // Deflate: x^3 + c2 x^2 + c1 x + c0 = (x - real)(x^2 + beta x + gamma)
  const double beta = c.c2 + real;
  const double gamma = c.c1 + real * beta;
  const double disc = beta * beta - 4.0 * gamma;
  if (disc >= 0.0) {
    // Round-off put the pair on the real axis.
    const double sq = std::sqrt(disc);
    std::array<double, 3> r{real, (-beta + sq) / 2.0, (-beta - sq) / 2.0};
    std::sort(r.begin(), r.end(), std::greater<>());
    return {cd(r[0]), cd(r[1]), cd(r[2])};
  }
  const double im = std::sqrt(-disc) / 2.0;
  return {cd(real), cd(-beta / 2.0, im), cd(-beta / 2.0, -im)};
}

EigenStructure eigen_classify(const Jacobian3& j, std::optional<double> lambda1_hint) {
  if (!j.allFinite()) throw Error(ErrorKind::invalid_argument, "non-finite Jacobian entries");
  const CubicCoefficients c = characteristic_cubic(j);
  EigenStructure out;
  out.discriminant = cubic_discriminant(c);
  out.borderline = std::abs(out.discriminant) < kDiscriminantGuard;
  out.kind = out.discriminant >= 0.0 ? SpectrumKind::all_real : SpectrumKind::complex_pair;

  auto roots = cubic_roots(c);
  const bool complex_roots = roots[1].imag() != 0.0;
  if (complex_roots) {
    out.lambda1 = roots[0].real();
    out.lambda2 = roots[1];
    out.lambda3 = roots[2];
  } else {
    std::size_t pick = 0;
    if (lambda1_hint) {
      double best = std::abs(roots[0].real() - *lambda1_hint);
      for (std::size_t i = 1; i < 3; ++i) {
        const double d = std::abs(roots[i].real() - *lambda1_hint);
        if (d < best) {
          best = d;
          pick = i;
        }
      }
    }
    out.lambda1 = roots[pick].real();
    std::array<std::complex<double>, 2> rest;
    for (std::size_t i = 0, k = 0; i < 3; ++i) {
      if (i != pick) rest[k++] = roots[i];
    }
    out.lambda2 = rest[0];
    out.lambda3 = rest[1];
  }
  out.product_residual = std::abs(out.lambda1 - (out.lambda2 * out.lambda3).real());
  return out;
}

}  // namespace noisebound
