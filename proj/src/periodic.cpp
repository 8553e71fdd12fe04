#include "noisebound/periodic.hpp"

#include <algorithm>
#include <limits>
#include <numbers>

namespace noisebound {

std::string to_string(Stability s) {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::saddle_1u: return "saddle-1u";
    case Stability::saddle_2u: return "saddle-2u";
    case Stability::unstable: return "unstable";
  }
  return "?";
}

Eigen::VectorXd cyclic_residual(const ChartMap& map, const std::vector<BoundaryPoint>& points) {
  const std::size_t p = points.size();
  Eigen::VectorXd r(3 * p);
  for (std::size_t i = 0; i < p; ++i) {
    r.segment<3>(3 * i) = chart_difference(map.apply(points[i]), points[(i + 1) % p]);
  }
  return r;
}

Jacobian3 orbit_monodromy(const ChartMap& map, const std::vector<BoundaryPoint>& points, std::size_t start) {
  Jacobian3 m = Jacobian3::Identity();
  const std::size_t p = points.size();
  for (std::size_t k = 0; k < p; ++k) m = map.jacobian(points[(start + k) % p]) * m;
  return m;
}

void analyse_orbit(const ChartMap& map, PeriodicOrbit& orbit) {
  orbit.period = static_cast<int>(orbit.points.size());
  orbit.monodromy = orbit_monodromy(map, orbit.points);
  std::optional<double> hint;
  if (const auto* bm = dynamic_cast<const BoundaryMap*>(&map)) {
    double l1 = 1.0;
    for (const auto& z : orbit.points) l1 *= bm->normal_contraction(z);
    hint = l1;
  }
  orbit.eigen = eigen_classify(orbit.monodromy, hint);
  switch (orbit.eigen.count_outside_unit_circle()) {
    case 0: orbit.stability = Stability::stable; break;
    case 1: orbit.stability = Stability::saddle_1u; break;
    case 2: orbit.stability = Stability::saddle_2u; break;
    default: orbit.stability = Stability::unstable; break;
  }
}

namespace {

double safe_residual_norm(const ChartMap& map, const std::vector<BoundaryPoint>& pts) {
  try {
    const double n = cyclic_residual(map, pts).norm();
    return std::isfinite(n) ? n : std::numeric_limits<double>::infinity();
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

std::vector<BoundaryPoint> displaced(const std::vector<BoundaryPoint>& pts, const Eigen::VectorXd& dx, double t) {
  std::vector<BoundaryPoint> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out[i] = BoundaryPoint::from_chart(pts[i].chart() + t * dx.segment<3>(3 * i));
  }
  return out;
}

}  // namespace

PeriodicOrbit find_periodic_orbit(const ChartMap& map, const std::vector<BoundaryPoint>& guess,
                                  const NewtonOptions& opts) {
  if (guess.empty()) throw Error(ErrorKind::invalid_argument, "periodic-orbit guess is empty");
  if (!(opts.tol > 0.0)) throw Error(ErrorKind::invalid_argument, "tolerance must be positive");
  const std::size_t p = guess.size();
  const auto n = static_cast<Eigen::Index>(3 * p);
  std::vector<BoundaryPoint> pts = guess;
  for (auto& z : pts) z.theta = wrap_angle(z.theta);

  double norm = safe_residual_norm(map, pts);
  if (!std::isfinite(norm)) throw Error(ErrorKind::singular_matrix, "map undefined at the initial guess");

  int it = 0;
  for (; norm >= opts.tol; ++it) {
    if (it >= opts.max_iterations) {
      throw Error(ErrorKind::no_convergence,
                  "Newton did not converge in " + std::to_string(opts.max_iterations) +
                      " iterations (residual " + std::to_string(norm) + ")");
    }
    const Eigen::VectorXd r = cyclic_residual(map, pts);
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < p; ++i) {
      const auto row = static_cast<Eigen::Index>(3 * i);
      jac.block<3, 3>(row, row) += map.jacobian(pts[i]);
      jac.block<3, 3>(row, static_cast<Eigen::Index>(3 * ((i + 1) % p))) -= Jacobian3::Identity();
    }
    if (!jac.allFinite()) throw Error(ErrorKind::singular_matrix, "non-finite Newton matrix");

    Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    lu.setThreshold(1e-13);
    Eigen::VectorXd dx;
    if (lu.isInvertible()) {
      dx = lu.solve(-r);
    } else {
      dx = jac.completeOrthogonalDecomposition().solve(-r);
    }

    double t = 1.0;
    std::vector<BoundaryPoint> trial;
    double trial_norm = std::numeric_limits<double>::infinity();
    for (int h = 0; h <= opts.max_halvings; ++h, t *= 0.5) {
      trial = displaced(pts, dx, t);
      trial_norm = safe_residual_norm(map, trial);
      if (trial_norm < norm) break;
    }
    if (!std::isfinite(trial_norm)) {
      throw Error(ErrorKind::no_convergence, "Newton step left the domain of the map");
    }
    if (trial_norm >= norm && dx.norm() * t < 1e-15) {
      throw Error(ErrorKind::no_convergence, "Newton stagnated (residual " + std::to_string(norm) + ")");
    }
    pts = std::move(trial);
    norm = trial_norm;
  }

  if (p > 1) {
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = i + 1; j < p; ++j) {
        if (chart_distance(pts[i], pts[j]) < 1e-8) {
          throw Error(ErrorKind::collapsed_orbit, "orbit points coincide; the true period is lower");
        }
      }
    }
  }

  PeriodicOrbit orbit;
  orbit.points = std::move(pts);
  orbit.residual = norm;
  orbit.iterations = it;
  analyse_orbit(map, orbit);
  return orbit;
}

BoundaryPoint find_fixed_point(const ChartMap& map, const BoundaryPoint& guess, const NewtonOptions& opts) {
  return find_periodic_orbit(map, {guess}, opts).points.front();
}

BoundaryPoint find_fixed_point(const BoundaryPoint& guess, const Params& params, const PlanarMap& map,
                               const NewtonOptions& opts) {
  const BoundaryMap beta(std::shared_ptr<const PlanarMap>(&map, [](const PlanarMap*) {}), params);
  return find_fixed_point(beta, guess, opts);
}

std::vector<BoundaryPoint> orbit_guess(const ChartMap& map, const BoundaryPoint& start, int period) {
  if (period < 1) throw Error(ErrorKind::invalid_argument, "period must be >= 1");
  std::vector<BoundaryPoint> pts{start};
  for (int k = 1; k < period; ++k) pts.push_back(map.apply(pts.back()));
  return pts;
}

std::vector<BoundaryPoint> henon_fixed_points(const Params& params, int theta_samples) {
  params.validate();
  const auto henon = std::make_shared<HenonMap>();
  const BoundaryMap beta(henon, params);
  const double a = params.a, b = params.b, e = params.eps;
  constexpr double pi = std::numbers::pi;

  // Position on the candidate fixed point for a given normal angle, root +/-1.
  auto candidate = [&](double theta, int root) -> std::optional<BoundaryPoint> {
    const double n1 = std::cos(theta), n2 = std::sin(theta);
    const double rhs = 1.0 + e * (n1 + n2);
    double x;
    if (std::abs(a) < 1e-14) {
      if (root < 0) return std::nullopt;
      x = rhs / (1.0 - b);
    } else {
      const double disc = (1.0 - b) * (1.0 - b) + 4.0 * a * rhs;
      if (disc < 0.0) return std::nullopt;
      x = (-(1.0 - b) + root * std::sqrt(disc)) / (2.0 * a);
    }
    return BoundaryPoint{{x, b * x + e * n2}, theta};
  };
  auto angular_residual = [&](const BoundaryPoint& z) { return wrap_angle(beta.apply(z).theta - z.theta); };

  std::vector<BoundaryPoint> found;
  for (int root : {1, -1}) {
    std::vector<double> g(theta_samples, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> thetas(theta_samples);
    for (int i = 0; i < theta_samples; ++i) {
      thetas[i] = -pi + 2.0 * pi * i / theta_samples;
      if (auto z = candidate(thetas[i], root)) {
        try {
          g[i] = angular_residual(*z);
        } catch (const Error&) {
        }
      }
    }
    for (int i = 0; i < theta_samples; ++i) {
      const double g0 = g[i], g1 = g[(i + 1) % theta_samples];
      if (!std::isfinite(g0) || !std::isfinite(g1)) continue;
      if ((g0 > 0.0) == (g1 > 0.0) || std::abs(g0 - g1) > 1.0) continue;
      // Bisection on theta, then Newton on the full map.
      double lo = thetas[i], hi = lo + 2.0 * pi / theta_samples, glo = g0;
      bool ok = true;
      for (int k = 0; k < 40 && ok; ++k) {
        const double mid = 0.5 * (lo + hi);
        const auto z = candidate(wrap_angle(mid), root);
        if (!z) { ok = false; break; }
        const double gm = angular_residual(*z);
        if ((gm > 0.0) == (glo > 0.0)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      if (!ok) continue;
      const auto seed = candidate(wrap_angle(0.5 * (lo + hi)), root);
      if (!seed) continue;
      try {
        const BoundaryPoint z = find_fixed_point(beta, *seed);
        const bool dup = std::any_of(found.begin(), found.end(),
                                     [&](const BoundaryPoint& w) { return chart_distance(w, z) < 1e-8; });
        if (!dup) found.push_back(z);
      } catch (const Error&) {
      }
    }
  }
  std::sort(found.begin(), found.end(), [](const BoundaryPoint& l, const BoundaryPoint& r) {
    return l.pos.x < r.pos.x;
  });
  return found;
}

std::vector<PeriodicOrbit> search_periodic_orbits(const ChartMap& map, int period, const SearchRegion& region,
                                                  const NewtonOptions& opts) {
  constexpr double pi = std::numbers::pi;
  std::vector<PeriodicOrbit> found;
  const int nxy = std::max(region.samples_xy, 1);
  const int nt = std::max(region.samples_theta, 1);
  const Point2 span = region.hi - region.lo;
  auto in_region = [&](const BoundaryPoint& z) {
    const double mx = 0.5 * span.x, my = 0.5 * span.y;
    return z.pos.x >= region.lo.x - mx && z.pos.x <= region.hi.x + mx && z.pos.y >= region.lo.y - my &&
           z.pos.y <= region.hi.y + my;
  };

  for (int ix = 0; ix < nxy; ++ix) {
    for (int iy = 0; iy < nxy; ++iy) {
      for (int it = 0; it < nt; ++it) {
        const double fx = nxy > 1 ? static_cast<double>(ix) / (nxy - 1) : 0.5;
        const double fy = nxy > 1 ? static_cast<double>(iy) / (nxy - 1) : 0.5;
        const BoundaryPoint seed{{region.lo.x + fx * span.x, region.lo.y + fy * span.y},
                                 wrap_angle(-pi + 2.0 * pi * (it + 0.5) / nt)};
        PeriodicOrbit orbit;
        try {
          orbit = find_periodic_orbit(map, orbit_guess(map, seed, period), opts);
        } catch (const Error&) {
          continue;
        }
        if (!std::all_of(orbit.points.begin(), orbit.points.end(), in_region)) continue;
        bool lower = false;
        for (int d = 1; d < period && !lower; ++d) {
          if (period % d != 0) continue;
          BoundaryPoint w = orbit.points[0];
          for (int k = 0; k < d; ++k) w = map.apply(w);
          lower = chart_distance(w, orbit.points[0]) < 1e-7;
        }
        if (lower) continue;
        const bool dup = std::any_of(found.begin(), found.end(), [&](const PeriodicOrbit& o) {
          return std::any_of(o.points.begin(), o.points.end(),
                             [&](const BoundaryPoint& w) { return chart_distance(w, orbit.points[0]) < 1e-7; });
        });
        if (dup) continue;
        // Canonical rotation: start at the point with the smallest x.
        const auto first = std::min_element(orbit.points.begin(), orbit.points.end(),
                                            [](const BoundaryPoint& l, const BoundaryPoint& r) {
                                              return l.pos.x < r.pos.x;
                                            });
        std::rotate(orbit.points.begin(), first, orbit.points.end());
        analyse_orbit(map, orbit);
        found.push_back(std::move(orbit));
      }
    }
  }
  std::sort(found.begin(), found.end(), [](const PeriodicOrbit& l, const PeriodicOrbit& r) {
    return l.points[0].pos.x < r.points[0].pos.x;
  });
  return found;
}

EigenRelationReport check_eigen_relations(const BoundaryMap& map, const PeriodicOrbit& orbit) {
  if (orbit.points.empty()) throw Error(ErrorKind::empty_input, "orbit has no points");
  const double res = cyclic_residual(map, orbit.points).norm();
  if (!(res < 1e-9)) {
    throw Error(ErrorKind::not_a_fixed_point, "residual " + std::to_string(res) + " exceeds 1e-9");
  }
  EigenRelationReport rep;
  rep.lambda1 = 1.0;
  for (const auto& z : orbit.points) rep.lambda1 *= map.normal_contraction(z);
  const Jacobian3 m = orbit_monodromy(map, orbit.points);
  rep.eigen = eigen_classify(m, rep.lambda1);

  rep.eigenvalue_residual = std::numeric_limits<double>::infinity();
  for (const auto& mu : rep.eigen.eigenvalues()) {
    rep.eigenvalue_residual = std::min(rep.eigenvalue_residual, std::abs(mu - rep.lambda1));
  }
  rep.product_residual = rep.eigen.kind == SpectrumKind::complex_pair
                             ? std::abs(rep.lambda1 - (rep.eigen.lambda2 * rep.eigen.lambda3).real())
                             : std::numeric_limits<double>::quiet_NaN();

  // V is the range of (M - lambda1 I): the invariant plane complementary to
  // the lambda1 eigenline.
  const Jacobian3 shifted = m - rep.lambda1 * Jacobian3::Identity();
  Eigen::JacobiSVD<Jacobian3> svd(shifted, Eigen::ComputeFullU);
  const Eigen::Matrix<double, 3, 2> basis = svd.matrixU().leftCols<2>();
  const Eigen::Matrix2d projected = basis.topRows<2>();
  Eigen::JacobiSVD<Eigen::Matrix2d> psvd(projected, Eigen::ComputeFullU);
  const auto sv = psvd.singularValues();
  rep.projection_ratio = sv[0] > 0.0 ? sv[1] / sv[0] : 0.0;
  const Eigen::Vector2d line = psvd.matrixU().col(0);
  const Point2 u = orbit.points[0].normal().perp();
  rep.projection_angle = std::atan2(std::abs(line[0] * u.y - line[1] * u.x), std::abs(line[0] * u.x + line[1] * u.y));
  return rep;
}

EigenRelationReport check_eigen_relations(const BoundaryPoint& fp, const Params& params, const PlanarMap& map) {
  const BoundaryMap beta(std::shared_ptr<const PlanarMap>(&map, [](const PlanarMap*) {}), params);
  PeriodicOrbit orbit;
  orbit.points = {fp};
  return check_eigen_relations(beta, orbit);
}

}  // namespace noisebound
