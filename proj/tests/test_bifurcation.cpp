#include <doctest.h>

#include <cmath>
#include <sstream>

#include "chart_maps.hpp"
#include "noisebound/bifurcation.hpp"

using namespace noisebound;
using noisebound::testing::diag3;
using noisebound::testing::FoldNormalForm;
using noisebound::testing::LinearChartMap;

namespace {

const auto kHenon = std::make_shared<HenonMap>();

PeriodicOrbit converged(const ChartMap& map, std::vector<BoundaryPoint> guess) {
  return find_periodic_orbit(map, guess);
}

// Fixed point of z -> M z + c(a) in closed form.
const Jacobian3 kLinear = (Jacobian3() << 0.4, 0.2, 0.0, -0.1, 0.3, 0.05, 0.0, 0.1, -0.5).finished();
Vec3 offset(double a) { return {a, a * a - 0.3, std::sin(3.0 * a)}; }

MapFamily linear_family() {
  return [](double a) { return std::make_shared<LinearChartMap>(kLinear, offset(a)); };
}

// Eigenvalues -0.7 +- sqrt(0.062 - a) and 0.5 at the origin.
MapFamily collision_family() {
  return [](double a) {
    Jacobian3 m = Jacobian3::Zero();
    m(0, 0) = -0.7;
    m(0, 1) = 1.0;
    m(1, 0) = 0.062 - a;
    m(1, 1) = -0.7;
    m(2, 2) = 0.5;
    return std::make_shared<LinearChartMap>(m);
  };
}

MapFamily fold_family() {
  return [](double a) { return std::make_shared<FoldNormalForm>(a); };
}

PeriodicOrbit henon_orbit(const Params& p, std::vector<BoundaryPoint> guess) {
  return converged(BoundaryMap(kHenon, p), std::move(guess));
}

}  // namespace

TEST_CASE("continuation tracks a closed-form family") {
  const auto family = linear_family();
  const Vec3 z0 = (Jacobian3::Identity() - kLinear).inverse() * offset(0.0);
  const PeriodicOrbit start = converged(*family(0.0), {BoundaryPoint::from_chart(z0)});
  const Branch br = continue_orbit(start, family, ParamName::a, 0.0, 0.5);
  REQUIRE(br.samples.size() > 10);
  CHECK(br.samples.back().value == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_FALSE(br.has_fold());
  for (const auto& s : br.samples) {
    const Vec3 exact = (Jacobian3::Identity() - kLinear).inverse() * offset(s.value);
    CHECK(chart_distance(s.orbit.points[0], BoundaryPoint::from_chart(exact)) < 1e-9);
    CHECK(s.orbit.residual < 1e-10);
  }
  // Steps grow from the initial 1e-3 when Newton converges quickly.
  CHECK(br.samples.size() < 500);
}

TEST_CASE("continuation rejects an unconverged start") {
  const auto family = linear_family();
  PeriodicOrbit bad;
  bad.points = {BoundaryPoint{{5.0, 5.0}, 0.0}};
  CHECK_THROWS_AS(continue_orbit(bad, family, ParamName::a, 0.0, 0.1), Error);
  StepPolicy policy;
  policy.min = 0.0;
  const PeriodicOrbit start = converged(*family(0.0), {BoundaryPoint{}});
  CHECK_THROWS_AS(continue_orbit(start, family, ParamName::a, 0.0, 0.1, policy), Error);
}

TEST_CASE("stable fixed point continued from a = 0.06 to a = 0.13") {
  const Params p{0.06, 0.3, 0.6};
  const PeriodicOrbit start = henon_orbit(p, {BoundaryPoint{{0.26, -0.46}, -2.0}});
  const Branch br = continue_orbit(start, kHenon, p, ParamName::a, 0.13);
  const BoundaryPoint& z = br.samples.back().orbit.points[0];
  CHECK(br.samples.back().value == doctest::Approx(0.13));
  CHECK(std::abs(z.pos.x - 0.261) < 2e-3);
  CHECK(std::abs(z.pos.y + 0.455) < 2e-3);
  CHECK(std::abs(z.theta + 2.046) < 2e-3);
  for (const auto& s : br.samples) CHECK(s.orbit.stability == Stability::stable);
}

TEST_CASE("halving the step does not move shared samples") {
  const Params p{0.06, 0.3, 0.6};
  const PeriodicOrbit start = henon_orbit(p, {BoundaryPoint{{0.26, -0.46}, -2.0}});
  StepPolicy coarse, fine;
  coarse.double_at = fine.double_at = 0;  // keep the grids nested
  fine.initial = 0.5 * coarse.initial;
  const Branch a = continue_orbit(start, kHenon, p, ParamName::a, 0.08, coarse);
  const Branch b = continue_orbit(start, kHenon, p, ParamName::a, 0.08, fine);
  int shared = 0;
  for (const auto& s : a.samples) {
    for (const auto& t : b.samples) {
      if (std::abs(s.value - t.value) < 1e-12) {
        ++shared;
        CHECK(chart_distance(s.orbit.points[0], t.orbit.points[0]) < 1e-8);
      }
    }
  }
  CHECK(shared >= 20);
}

TEST_CASE("real-to-complex transition on the Henon fixed-point branch") {
  const Params p{0.06, 0.3, 0.6};
  const PeriodicOrbit start = henon_orbit(p, {BoundaryPoint{{0.26, -0.46}, -2.0}});
  const auto e = start.eigen.eigenvalues();
  CHECK(std::abs(e[0] - 0.532) < 5e-3);
  CHECK(std::abs(e[1] + 0.693) < 5e-3);
  CHECK(std::abs(e[2] + 0.768) < 5e-3);
  const Branch br = continue_orbit(start, kHenon, p, ParamName::a, 0.07);
  const BifurcationEvent ev = locate_real_to_complex(br);
  CHECK(ev.kind == EventKind::real_to_complex);
  CHECK(std::abs(ev.value - 0.06191) < 5e-4);
  CHECK(ev.uncertainty > 0.0);
  CHECK(ev.uncertainty <= 1e-5);
  CHECK(std::abs(ev.diagnostics.at("discriminant")) < 1e-8);
  CHECK(ev.diagnostics.at("pair_gap") < 1e-4);
  CHECK(ev.value > br.samples.front().value);
  CHECK(ev.value < br.samples.back().value);

  // Halving the initial step keeps the event within its uncertainty.
  StepPolicy half;
  half.initial = 5e-4;
  const BifurcationEvent ev2 = locate_real_to_complex(continue_orbit(start, kHenon, p, ParamName::a, 0.07, half));
  CHECK(std::abs(ev2.value - ev.value) <= ev.uncertainty + ev2.uncertainty);
}

TEST_CASE("real-to-complex on a constructed family") {
  const auto family = collision_family();
  const PeriodicOrbit start = converged(*family(0.05), {BoundaryPoint{{0.1, 0.1}, 0.1}});
  const Branch br = continue_orbit(start, family, ParamName::a, 0.05, 0.07);
  const BifurcationEvent ev = locate_real_to_complex(br, 1e-12);
  CHECK(std::abs(ev.value - 0.062) <= ev.uncertainty + 1e-15);

  const Branch constant = continue_orbit(start, family, ParamName::a, 0.05, 0.06);
  CHECK_THROWS_WITH_AS(locate_real_to_complex(constant), doctest::Contains("no-transition"), Error);
}

TEST_CASE("pseudo-arclength rounds the normal-form fold") {
  const auto family = fold_family();
  const PeriodicOrbit stable = converged(*family(0.4), {BoundaryPoint{{-0.3, 0.0}, 0.0}});
  const PeriodicOrbit unstable = converged(*family(0.4), {BoundaryPoint{{0.3, 0.0}, 0.0}});
  CHECK(stable.points[0].pos.x == doctest::Approx(-std::sqrt(0.1)));
  const Branch a = continue_orbit(stable, family, ParamName::a, 0.4, 0.6);
  const Branch b = continue_orbit(unstable, family, ParamName::a, 0.4, 0.6);
  CHECK(a.has_fold());
  CHECK(b.has_fold());
  // After the turn the branch comes back on the other root.
  const BranchSample& end = a.samples.back();
  CHECK(end.arclength);
  CHECK(end.orbit.points[0].pos.x > 0.0);
  CHECK(end.orbit.points[0].pos.x == doctest::Approx(std::sqrt(0.5 - end.value)).epsilon(1e-8));
  double top = 0.0;
  for (const auto& s : a.samples) top = std::max(top, s.value);
  CHECK(top <= 0.5 + 1e-9);

  const BifurcationEvent ev = locate_fold(a, b, 1e-10);
  CHECK(ev.kind == EventKind::fold);
  CHECK(std::abs(ev.value - 0.5) <= ev.uncertainty + 1e-12);
  CHECK(ev.diagnostics.at("multiplier_gap") < 1e-3);
}

TEST_CASE("fold needs converging branches") {
  const auto family = linear_family();
  const PeriodicOrbit start = converged(*family(0.0), {BoundaryPoint{}});
  const Branch a = continue_orbit(start, family, ParamName::a, 0.0, 0.1);
  const Branch b = continue_orbit(start, family, ParamName::a, 0.0, 0.1);
  CHECK_THROWS_AS(locate_fold(a, b), Error);
}

TEST_CASE("period-2 saddle fold of the Henon boundary map") {
  const Params p{0.6, 0.3, 0.0625};
  const PeriodicOrbit red =
      henon_orbit(p, {BoundaryPoint{{0.205, 0.310}, -1.209}, BoundaryPoint{{1.227, 0.087}, 2.726}});
  const PeriodicOrbit purple =
      henon_orbit(p, {BoundaryPoint{{0.364, 0.294}, -1.034}, BoundaryPoint{{1.159, 0.139}, 2.656}});
  CHECK(red.stability == Stability::saddle_1u);
  CHECK(purple.stability == Stability::saddle_2u);
  const Branch a = continue_orbit(red, kHenon, p, ParamName::a, 0.59);
  const Branch b = continue_orbit(purple, kHenon, p, ParamName::a, 0.59);
  const BifurcationEvent ev = locate_fold(a, b);
  CHECK(std::abs(ev.value - 0.595) < 5e-3);
  CHECK(ev.uncertainty > 0.0);
  CHECK(ev.uncertainty <= 1e-4);
  CHECK(ev.diagnostics.at("multiplier_gap") < 1e-3);

  // Past the fold neither orbit survives.
  const BoundaryMap past(kHenon, Params{ev.value - 1e-3, 0.3, 0.0625});
  for (const auto* orbit : {&a.samples.front().orbit, &b.samples.front().orbit}) {
    bool nearby = false;
    try {
      const PeriodicOrbit o = find_periodic_orbit(past, ev.orbit->points);
      nearby = chart_distance(o.points[0], ev.orbit->points[0]) < 0.05 && o.stability != Stability::stable;
    } catch (const Error&) {
    }
    try {
      const PeriodicOrbit o = find_periodic_orbit(past, orbit->points);
      nearby = nearby || (chart_distance(o.points[0], ev.orbit->points[0]) < 0.05 &&
                          o.stability != Stability::stable);
    } catch (const Error&) {
    }
    CHECK_FALSE(nearby);
  }
}

TEST_CASE("crossing of translated branches") {
  const std::vector<Vec3> u{{-1.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}};
  auto witness = [&](double s) {
    const std::vector<Vec3> v{{0.1, -1.0, s - 0.3}, {0.1, 1.0, s - 0.3}};
    return manifold_min_distance(u, v);
  };
  std::vector<IndicatorSample> samples;
  const BifurcationEvent ev = locate_crossing(witness, ParamName::a, 0.0, 1.0, 1e-12, 7, &samples);
  CHECK(std::abs(ev.value - 0.3) <= ev.uncertainty + 1e-15);
  CHECK(samples.size() > 8);

  auto parallel = [&](double s) {
    const std::vector<Vec3> v{{-1.0, 1.0 + s, 0.0}, {1.0, 1.0 + s, 0.0}};
    return manifold_min_distance(u, v);
  };
  CHECK_THROWS_WITH_AS(locate_crossing(parallel, ParamName::a, 0.0, 1.0, 1e-6, 8), doctest::Contains("no-transition"),
                       Error);

  // A branch that passes through and back crosses twice.
  auto twice = [&](double s) {
    const double h = (s - 0.25) * (s - 0.75);
    const std::vector<Vec3> v{{0.1, -1.0, h}, {0.1, 1.0, h}};
    return manifold_min_distance(u, v);
  };
  CHECK_THROWS_WITH_AS(locate_crossing(twice, ParamName::a, 0.0, 1.0, 1e-6, 8),
                       doctest::Contains("indicator-not-monotone"), Error);
}

TEST_CASE("heteroclinic tangency at eps = 0.6") {
  const Params p{0.36, 0.3, 0.6};
  const PeriodicOrbit red = henon_orbit(p, {BoundaryPoint{{1.409, 1.007}, 1.340}});
  const PeriodicOrbit purple = henon_orbit(p, {BoundaryPoint{{-2.122, -0.935}, -2.621}});
  CHECK(red.stability == Stability::saddle_1u);
  CHECK(purple.stability == Stability::saddle_2u);
  TangencyConfig cfg;
  cfg.growth.max_arc = 10.0;
  cfg.growth.max_points = 100000;
  std::vector<IndicatorSample> samples;
  const BifurcationEvent ev =
      locate_heteroclinic_tangency(red, purple, kHenon, p, ParamName::a, 0.36, 0.38, cfg, &samples);
  CHECK(ev.kind == EventKind::heteroclinic_tangency);
  CHECK(ev.value - ev.uncertainty >= 0.3738);
  CHECK(ev.value + ev.uncertainty <= 0.3748);
  CHECK(ev.uncertainty <= 5e-4);
  CHECK(samples.front().distance > 0.01);
  CHECK(ev.diagnostics.at("distance") < 1e-4);
}

TEST_CASE("topological scan of a structurally stable family") {
  const auto affine = std::make_shared<AffineMap>(AffineMap::scaling(0.5));
  EngineConfig cfg;
  cfg.grid = GridSpec{{-1.0, -1.0}, {1.0, 1.0}, 6};
  const TopologicalScan scan =
      topological_bifurcation_scan({0.05, 0.07, 0.09, 0.11, 0.13}, affine, Params{0.0, 0.3, 0.05}, ParamName::eps, cfg);
  REQUIRE(scan.records.size() == 5);
  CHECK(scan.events.empty());
  for (const auto& r : scan.records) {
    CHECK(r.error.empty());
    CHECK(r.components == 1);
  }
  CHECK(std::isnan(scan.records[0].hausdorff_to_previous));
  CHECK(scan.records[1].hausdorff_to_previous > 0.0);
  CHECK_THROWS_AS(topological_bifurcation_scan({0.05, 0.1, 0.07}, affine, Params{}, ParamName::eps, cfg), Error);
}

TEST_CASE("topological scan records escape and continues") {
  EngineConfig cfg;
  cfg.grid = GridSpec{{-4.0, -4.0}, {4.0, 4.0}, 7};
  cfg.seed = {0.25, -0.45};
  const TopologicalScan scan =
      topological_bifurcation_scan({0.2, 0.6, 0.8}, kHenon, Params{0.2, 0.3, 0.6}, ParamName::a, cfg);
  REQUIRE(scan.records.size() == 3);
  CHECK(scan.records[0].error.empty());
  CHECK(scan.records[1].escaped);
  CHECK(scan.records[2].escaped);
  REQUIRE(scan.events.size() == 1);
  CHECK(scan.events[0].diagnostics.at("escape") == 1.0);
  CHECK(scan.events[0].value == doctest::Approx(0.4));
}

TEST_CASE("staircase disappearances") {
  // Level = number of a_i above the parameter plus a smooth drift.
  std::vector<double> a;
  for (int i = 0; i < 8; ++i) a.push_back(0.4 + 0.01 * std::pow(0.2, i));
  auto level = [&](double x) {
    double n = 0.0;
    for (double ai : a) n += ai > x ? 1.0 : 0.0;
    return n + 3.0 * (0.42 - x);
  };
  StaircaseOptions opts;
  opts.tol = 1e-13;
  opts.max_count = 5;
  const auto found = locate_disappearances(level, 0.42, 0.4, opts);
  REQUIRE(found.size() == 5);
  for (std::size_t i = 0; i < found.size(); ++i) CHECK(std::abs(found[i] - a[i]) < 1e-13);
  const CascadeFit fit = scaling_fit(found);
  CHECK(std::abs(fit.a_inf - 0.4) < 1e-10);

  // No jumps: a smooth level.
  CHECK(locate_disappearances([](double x) { return -x; }, 1.0, 0.0).empty());
  CHECK_THROWS_AS(locate_disappearances(level, 0.4, 0.42), Error);
}

TEST_CASE("outermost wedge level at a = 0.49 and a = 0.44") {
  CascadeConfig cfg;
  for (double a : {0.49, 0.44}) {
    const BoundaryMap beta(kHenon, Params{a, 0.3, 0.0625});
    const auto saddles = henon_fixed_points(Params{a, 0.3, 0.0625});
    BoundaryPoint s;
    double best = -1.0;
    for (const auto& z : saddles) {
      if (z.pos.x > best && z.pos.x < 1.5) {
        best = z.pos.x;
        s = z;
      }
    }
    const PeriodicOrbit saddle = converged(beta, {s});
    const auto p2 = search_periodic_orbits(beta, 2, SearchRegion{{-1.0, -1.0}, {2.0, 1.0}, 9, 12});
    std::vector<BoundaryPoint> targets;
    for (const auto& o : p2) {
      if (o.stability == Stability::stable) targets = o.points;
    }
    REQUIRE(targets.size() == 2);
    const double level = outermost_wedge_level(saddle, targets, beta, cfg);
    if (a > 0.45) {
      CHECK(std::isfinite(level));
    } else {
      CHECK(std::isinf(level));
    }
  }
}

TEST_CASE("event writers") {
  BifurcationEvent ev;
  ev.kind = EventKind::fold;
  ev.value = 0.59489140412345;
  ev.uncertainty = 1e-9;
  ev.diagnostics["multiplier_gap"] = 1.0 / 3.0;
  std::ostringstream csv, json;
  write_events_csv(csv, {ev});
  CHECK(csv.str() == "parameter,kind,value,uncertainty\na,fold,0.594891404,1e-09\n");
  write_events_json(json, {ev});
  CHECK(json.str().find("0.333333333") != std::string::npos);
  CHECK(json.str().find("0.3333333333") == std::string::npos);
  CHECK(json.str().find("\"kind\": \"fold\"") != std::string::npos);
}
