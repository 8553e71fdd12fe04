#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "noisebound/singularities.hpp"

using namespace noisebound;

namespace {

Polyline2 polyline(const std::vector<Point2>& pts) { return Polyline2::from_points(pts); }

// Two mirror-image spirals x = +-rho^t cos(omega t), y = q^t meeting on the
// y axis at the zeros of cos(omega t), joined near the origin.
Polyline2 spiral_pair(double t_max, double h = 1e-3) {
  const double rho = std::hypot(-0.685, 0.215), q = 0.515, omega = std::atan2(0.215, -0.685);
  std::vector<Point2> pts;
  const int n = static_cast<int>(std::ceil(t_max / h));
  for (int i = 0; i <= n; ++i) {
    const double t = i * h;
    pts.push_back({std::pow(rho, t) * std::cos(omega * t), std::pow(q, t)});
  }
  for (int i = n; i >= 0; --i) {
    const double t = i * h;
    pts.push_back({-std::pow(rho, t) * std::cos(omega * t), std::pow(q, t)});
  }
  return polyline(pts);
}

std::vector<std::pair<std::size_t, std::size_t>> pairs_of(const std::vector<Intersection>& xs) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& x : xs) out.emplace_back(x.seg_i, x.seg_j);
  return out;
}

Wedge wedge_at(double x, double y) {
  Wedge w;
  w.apex.point = {x, y};
  w.lobe_span = 1.0;
  return w;
}

}  // namespace

TEST_CASE("orient2d is exact on near-collinear points") {
  // Points a = (0.5 + i u, 0.5 + j u) with u = 2^-53 against the line through
  // (12, 12) and (24, 24); the exact sign comes from scaled integers.
  const double u = std::ldexp(1.0, -53);
  const Point2 b{12.0, 12.0}, c{24.0, 24.0};
  int mismatches_naive = 0;
  for (int i = 0; i < 64; ++i) {
    for (int j = 0; j < 64; ++j) {
      const Point2 a{0.5 + i * u, 0.5 + j * u};
      using i128 = __int128;
      const i128 s = i128(1) << 53;
      const i128 ax = s / 2 + i, ay = s / 2 + j, bx = 12 * s, by = 12 * s, cx = 24 * s, cy = 24 * s;
      const i128 det = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx);
      const int expected = det > 0 ? 1 : (det < 0 ? -1 : 0);
      CHECK(orient2d(a, b, c) == expected);
      const double naive = (a.x - c.x) * (b.y - c.y) - (a.y - c.y) * (b.x - c.x);
      const int naive_sign = naive > 0 ? 1 : (naive < 0 ? -1 : 0);
      if (naive_sign != expected) ++mismatches_naive;
    }
  }
  // The filter matters: plain floating point gets many of these wrong.
  CHECK(mismatches_naive > 0);
  CHECK(orient2d({0, 0}, {1, 0}, {0, 1}) == 1);
  CHECK(orient2d({0, 0}, {0, 1}, {1, 0}) == -1);
  CHECK(orient2d({0, 0}, {1, 1}, {3, 3}) == 0);
}

TEST_CASE("segment crossing predicate") {
  CHECK(segments_cross({0, 0}, {2, 2}, {0, 2}, {2, 0}));
  CHECK_FALSE(segments_cross({0, 0}, {1, 1}, {1, 1}, {2, 0}));   // shared endpoint
  CHECK_FALSE(segments_cross({0, 0}, {2, 0}, {1, 0}, {1, 1}));   // T junction
  CHECK_FALSE(segments_cross({0, 0}, {2, 0}, {1, 0}, {3, 0}));   // collinear overlap
  CHECK_FALSE(segments_cross({0, 0}, {1, 0}, {2, 1}, {3, -1}));  // disjoint
}

TEST_CASE("self_intersections on simple shapes") {
  SUBCASE("preconditions") {
    CHECK_THROWS_AS(self_intersections(polyline({{0, 0}, {1, 0}, {1, 1}})), Error);
  }
  SUBCASE("convex closed polyline") {
    std::vector<Point2> pts;
    for (int i = 0; i <= 64; ++i) {
      const double t = 2.0 * std::numbers::pi * i / 64.0;
      pts.push_back({std::cos(t), 0.5 * std::sin(t)});
    }
    CHECK(self_intersections(polyline(pts)).empty());
    CHECK(detect_wedges(polyline(pts)).empty());
  }
  SUBCASE("figure eight crosses once at the origin") {
    std::vector<Point2> pts;
    for (int i = 0; i <= 100; ++i) {
      const double t = 2.0 * std::numbers::pi * (i + 0.5) / 100.0;
      pts.push_back({std::sin(t), std::sin(t) * std::cos(t)});
    }
    const auto xs = self_intersections(polyline(pts));
    REQUIRE(xs.size() == 1);
    CHECK(std::abs(xs[0].point.x) < 1e-12);
    CHECK(std::abs(xs[0].point.y) < 1e-12);
    CHECK(xs[0].seg_j > xs[0].seg_i + 1);
    CHECK(xs[0].arc_j > xs[0].arc_i);
    CHECK(pairs_of(self_intersections_brute_force(polyline(pts))) == pairs_of(xs));
  }
  SUBCASE("collinear overlap is reported separately") {
    const Polyline2 p = polyline({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 0}, {3, 0}});
    std::vector<SegmentOverlap> overlaps;
    const auto xs = self_intersections(p, &overlaps);
    CHECK(xs.empty());
    REQUIRE(overlaps.size() == 1);
    CHECK(overlaps[0].seg_i == 0);
    CHECK(overlaps[0].seg_j == 4);
  }
}

TEST_CASE("self_intersections matches brute force on random polylines") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::uniform_int_distribution<int> length(4, 400);
  std::size_t total = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Point2> pts;
    const int n = length(rng);
    // Mix of uniform scatter and random walks with small steps.
    if (trial % 2 == 0) {
      for (int i = 0; i < n; ++i) pts.push_back({coord(rng), coord(rng)});
    } else {
      Point2 p{0, 0};
      for (int i = 0; i < n; ++i) {
        p += Point2{0.05 * coord(rng), 0.05 * coord(rng)};
        pts.push_back(p);
      }
    }
    const Polyline2 poly = polyline(pts);
    if (poly.size() < 4) continue;
    const auto fast = self_intersections(poly);
    const auto slow = self_intersections_brute_force(poly);
    CHECK(pairs_of(fast) == pairs_of(slow));
    total += fast.size();

    // Reversal gives the same crossing points.
    std::vector<Point2> rev(poly.points.rbegin(), poly.points.rend());
    const auto back = self_intersections(polyline(rev));
    REQUIRE(back.size() == fast.size());
    auto key = [](const Intersection& x) { return std::pair(x.point.x, x.point.y); };
    std::vector<std::pair<double, double>> a, b;
    for (const auto& x : fast) a.push_back(key(x));
    for (const auto& x : back) b.push_back(key(x));
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].first == doctest::Approx(b[i].first).epsilon(1e-9));
      CHECK(a[i].second == doctest::Approx(b[i].second).epsilon(1e-9));
    }
  }
  CHECK(total > 1000);
}

TEST_CASE("spiral pair: wedge cascade grows with the spiral") {
  const auto short_pair = detect_wedges(spiral_pair(4.0), Point2{0, 0});
  const auto long_pair = detect_wedges(spiral_pair(10.0), Point2{0, 0});
  CHECK(short_pair.size() == 4);
  CHECK(long_pair.size() == 9);
  for (std::size_t i = 0; i + 1 < long_pair.size(); ++i) {
    CHECK(long_pair[i].rank == static_cast<int>(i));
    CHECK(long_pair[i].distance > long_pair[i + 1].distance);
    CHECK(long_pair[i].lobe_span > 0.0);
  }

  // Crossings sit where cos(omega t) = 0, so their heights decay by
  // q^(pi / omega) per step.
  const double omega = std::atan2(0.215, -0.685);
  const double ratio = std::pow(0.515, std::numbers::pi / omega);
  const CascadeFit fit = detect_cascade(long_pair, Point2{0, 0});
  CHECK(fit.ratio == doctest::Approx(ratio).epsilon(1e-5));
  CHECK(fit.geometric);
  CHECK(fit.geometry_residual < 1e-5);
}

TEST_CASE("detect_cascade contract") {
  const double r = 0.8, q = 0.3;
  std::vector<Wedge> ws;
  for (int i = 0; i < 6; ++i) ws.push_back(wedge_at(r * std::pow(q, i), 0.0));
  const CascadeFit fit = detect_cascade(ws, Point2{0, 0});
  CHECK(fit.ratio == doctest::Approx(q).epsilon(1e-10));
  CHECK(fit.geometry_residual < 1e-10);
  CHECK(fit.geometric);
  CHECK(fit.wedges.front().rank == 0);
  CHECK(fit.wedges.front().distance == doctest::Approx(r));

  std::vector<Wedge> shuffled = ws;
  std::mt19937 rng(3);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const CascadeFit again = detect_cascade(shuffled, Point2{0, 0});
  CHECK(again.ratio == fit.ratio);
  CHECK(again.geometry_residual == fit.geometry_residual);
  for (std::size_t i = 0; i < ws.size(); ++i) CHECK(again.wedges[i].apex.point == fit.wedges[i].apex.point);

  std::vector<Wedge> noisy = {wedge_at(1.0, 0), wedge_at(0.01, 0), wedge_at(0.5, 0), wedge_at(0.001, 0)};
  const CascadeFit rough = detect_cascade(noisy, Point2{0, 0});
  CHECK_FALSE(rough.geometric);
  CHECK(rough.geometry_residual > kGeometricResidualLimit);

  CHECK_THROWS_AS(detect_cascade({wedge_at(1, 0), wedge_at(0.5, 0)}, Point2{0, 0}), Error);
}

TEST_CASE("scaling fit and accumulation parameter") {
  SUBCASE("reference cascade parameters") {
    CHECK(std::abs(accumulation_parameter(0.46964, 0.45820, -1.48933) - 0.454869) < 1e-6);
    CHECK_THROWS_AS(accumulation_parameter(0.5, 0.4, 0.0), Error);
  }
  SUBCASE("exact geometric sequence") {
    std::vector<double> a;
    for (int i = 0; i < 6; ++i) a.push_back(0.4 + 0.01 * std::pow(0.2, i));
    const CascadeFit fit = scaling_fit(a);
    CHECK(fit.c == doctest::Approx(std::log(0.2)).epsilon(1e-12));
    CHECK(std::abs(fit.a_inf - 0.4) < 1e-12);
    // Increments of 1e-2 q^i carry rounding of order 1e-17 / increment.
    CHECK(fit.residual < 1e-9);
    CHECK(fit.max_residual < 1e-9);

    std::vector<std::pair<int, double>> indexed;
    for (int i = 5; i >= 0; --i) indexed.emplace_back(i, a[static_cast<std::size_t>(i)]);
    CHECK(scaling_fit(indexed).a_inf == doctest::Approx(fit.a_inf).epsilon(1e-14));
  }
  SUBCASE("conditioning") {
    std::vector<double> a;
    for (int i = 0; i < 5; ++i) a.push_back(0.454869 + 0.01477 * std::pow(0.2255, i));
    const double base = scaling_fit(a).a_inf;
    for (std::size_t k = 0; k < a.size(); ++k) {
      auto b = a;
      b[k] += 1e-6;
      CHECK(std::abs(scaling_fit(b).a_inf - base) < 1e-4);
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(scaling_fit(std::vector<double>{0.5, 0.4}), Error);
    try {
      scaling_fit(std::vector<double>{0.5, 0.45, 0.46, 0.44});
      FAIL("expected non-monotone error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::non_monotone_input);
    }
    try {
      scaling_fit(std::vector<double>{0.5, 0.49, 0.47, 0.43});
      FAIL("expected divergence");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::divergent_series);
    }
    CHECK_THROWS_AS(scaling_fit(std::vector<std::pair<int, double>>{{0, 0.5}, {2, 0.4}, {3, 0.3}}), Error);
  }
}

TEST_CASE("branch wedges keep only concave corners") {
  // The path runs along the x axis, turns up and comes back down through
  // (0.5, 0): the loop is the triangle (0.5, 0), (1, 0), (0.5, 1).
  auto make = [](double theta_first, double theta_last) {
    ManifoldBranch br;
    const std::vector<Point2> xy = {{-1, 0}, {1, 0}, {0.5, 1}, {0.5, -1}};
    const std::vector<double> th = {theta_first, theta_first, theta_last, theta_last};
    for (std::size_t i = 0; i < xy.size(); ++i) {
      br.points.push_back(Vec3(xy[i].x, xy[i].y, th[i]));
      br.arc.push_back(i == 0 ? 0.0 : br.arc.back() + distance(xy[i], xy[i - 1]));
      br.level.push_back(static_cast<double>(i));
    }
    return br;
  };
  const double pi = std::numbers::pi;
  // Normals pointing away from the loop: the loop is inside, the corner is concave.
  const auto concave = detect_wedges(make(-pi / 2, pi));
  REQUIRE(concave.size() == 1);
  CHECK(concave[0].sharpness == doctest::Approx(1.0));
  CHECK(concave[0].level == doctest::Approx(0.75));
  CHECK(concave[0].apex.point.x == doctest::Approx(0.5));
  // Normals pointing into the loop: convex, not a boundary wedge.
  CHECK(detect_wedges(make(pi / 2, 0.0)).empty());
  // Mixed orientation.
  CHECK(detect_wedges(make(-pi / 2, 0.0)).empty());
  // Sharpness threshold.
  CHECK(detect_wedges(make(-pi / 2, pi), std::nullopt, 0.999).size() == 1);
  CHECK(detect_wedges(make(-pi / 2, pi + 0.3), std::nullopt, 0.999).empty());
}

TEST_CASE("singularity report JSON") {
  const Polyline2 p = spiral_pair(4.0);
  const auto xs = self_intersections(p);
  const auto ws = detect_wedges(p, Point2{0, 0});
  std::vector<double> a;
  for (int i = 0; i < 4; ++i) a.push_back(0.4 + 0.01 * std::pow(0.2, i));
  std::ostringstream out;
  write_singularity_report(out, xs, ws, std::nullopt, scaling_fit(a));
  const auto j = nlohmann::json::parse(out.str());
  CHECK(j["intersections"].size() == xs.size());
  CHECK(j["wedges"].size() == ws.size());
  CHECK(j["wedges"][0]["rank"] == 0);
  CHECK(j["cascade"].is_null());
  CHECK(j["scaling_fit"]["a_inf"].get<double>() == doctest::Approx(0.4));
  CHECK(j["intersections"][0]["segments"].size() == 2);
}
