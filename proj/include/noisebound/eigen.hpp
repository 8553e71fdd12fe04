#pragma once

#include <array>
#include <complex>
#include <optional>

#include "noisebound/boundary_map.hpp"

namespace noisebound {

enum class SpectrumKind { all_real, complex_pair };

std::string to_string(SpectrumKind k);

// Eigenvalues of a 3x3 Jacobian from the characteristic cubic.
//
// lambda1 is the eigenvalue attached to the one-dimensional invariant subspace
// transverse to the normal bundle; (lambda2, lambda3) is the remaining pair,
// either two reals or a conjugate pair.
struct EigenStructure {
  double lambda1 = 0.0;
  std::complex<double> lambda2;
  std::complex<double> lambda3;
  SpectrumKind kind = SpectrumKind::all_real;
  // Cubic discriminant: > 0 three distinct real roots, < 0 one real root.
  double discriminant = 0.0;
  // |discriminant| within the guard band; kind was chosen by sign only.
  bool borderline = false;
  // |lambda1 - lambda2 lambda3|.
  double product_residual = 0.0;

  std::array<std::complex<double>, 3> eigenvalues() const { return {lambda1, lambda2, lambda3}; }
  // Largest eigenvalue modulus.
  double spectral_radius() const;
  int count_outside_unit_circle() const;
};

inline constexpr double kDiscriminantGuard = 1e-12;

struct CubicCoefficients {
  // lambda^3 + c2 lambda^2 + c1 lambda + c0
  double c2 = 0.0, c1 = 0.0, c0 = 0.0;
};

CubicCoefficients characteristic_cubic(const Jacobian3& j);
double cubic_discriminant(const CubicCoefficients& c);

// Closed-form roots (trigonometric for three real roots, Cardano otherwise),
// each real root polished by Newton on the cubic. Real roots come first, in
// decreasing order; a complex pair is returned with positive imaginary part first.
std::array<std::complex<double>, 3> cubic_roots(const CubicCoefficients& c);

// When lambda1_hint is given, lambda1 is the real root nearest to it;
// otherwise the unique real root (complex case) or the largest real root.
EigenStructure eigen_classify(const Jacobian3& j, std::optional<double> lambda1_hint = std::nullopt);

}  // namespace noisebound
