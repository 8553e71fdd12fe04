#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "noisebound/bifurcation.hpp"

using namespace noisebound;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (t >= budget_s) {
    o.pass = false;
    o.detail += "; over the time budget";
  }
  if (!o.pass) ++failures;
  std::printf("criterion %d: %s  %s  [%.2f s of %.0f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), t,
              budget_s);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Largest distance from an expected eigenvalue to the nearest computed one.
double spectrum_mismatch(const EigenStructure& e, const std::vector<std::complex<double>>& expected) {
  double worst = 0.0;
  for (const auto& want : expected) {
    double best = INFINITY;
    for (const auto& mu : e.eigenvalues()) best = std::min(best, std::abs(mu - want));
    worst = std::max(worst, best);
  }
  return worst;
}

const auto kHenon = std::make_shared<HenonMap>();

Outcome fixed_point_and_spectrum() {
  const BoundaryMap beta(kHenon, Params{0.13, 0.3, 0.6});
  const PeriodicOrbit o = find_periodic_orbit(beta, {BoundaryPoint{{0.26, -0.45}, -2.0}});
  const BoundaryPoint& z = o.points.front();
  const double pos = std::max({std::abs(z.pos.x - 0.261), std::abs(z.pos.y + 0.455), std::abs(z.theta + 2.046)});
  const double spectrum_off = spectrum_mismatch(o.eigen, {{0.515, 0.0}, {-0.685, 0.215}, {-0.685, -0.215}});
  return {pos <= 2e-3 && spectrum_off <= 5e-3,
          fmt("point (%.5f, %.5f, %.5f) off by %.1e, spectrum off by %.1e", z.pos.x, z.pos.y, z.theta, pos,
              spectrum_off)};
}

Outcome eigen_relations() {
  std::size_t count = 0, complex_count = 0;
  double ev = 0.0, prod = 0.0, ratio = 0.0;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const Params p{0.05 + 0.55 * i / 9.0, 0.3, 0.05 + 0.55 * j / 9.0};
      for (const auto& fp : henon_fixed_points(p)) {
        const EigenRelationReport r = check_eigen_relations(fp, p, *kHenon);
        ++count;
        ev = std::max(ev, r.eigenvalue_residual);
        ratio = std::max(ratio, r.projection_ratio);
        if (r.eigen.kind == SpectrumKind::complex_pair) {
          ++complex_count;
          prod = std::max(prod, r.product_residual);
        }
      }
    }
  }
  return {count >= 100 && ev < 1e-8 && prod < 1e-8 && ratio < 1e-8,
          fmt("%zu fixed points (%zu complex); max |lambda1 - mu| %.1e, |lambda1 - lambda2 lambda3| %.1e, "
              "sigma ratio %.1e",
              count, complex_count, ev, prod, ratio)};
}

Outcome real_to_complex() {
  const Params base{0.06, 0.3, 0.6};
  const auto family = boundary_map_family(kHenon, base, ParamName::a);
  const PeriodicOrbit start = find_periodic_orbit(*family(0.06), {BoundaryPoint{{0.26, -0.46}, -2.0}});
  const double spectrum_off = spectrum_mismatch(start.eigen, {{0.532, 0.0}, {-0.768, 0.0}, {-0.693, 0.0}});
  const Branch branch = continue_orbit(start, family, ParamName::a, 0.06, 0.07);
  const BifurcationEvent ev = locate_real_to_complex(branch);
  const bool stable = start.stability == Stability::stable;
  return {stable && spectrum_off <= 5e-3 && std::abs(ev.value - 0.06191) <= 5e-4,
          fmt("a = %.7f (target 0.06191 +- 5e-4); start %s, spectrum off by %.1e", ev.value,
              to_string(start.stability).c_str(), spectrum_off)};
}

Outcome period_two_fold() {
  const Params base{0.6, 0.3, 0.0625};
  const auto family = boundary_map_family(kHenon, base, ParamName::a);
  const auto orbit = [&](std::vector<BoundaryPoint> guess) { return find_periodic_orbit(*family(0.6), guess); };
  const PeriodicOrbit one_unstable = orbit({{{0.20506, 0.30975}, -1.2090}, {{1.22734, 0.08676}, 2.7259}});
  const PeriodicOrbit two_unstable = orbit({{{0.36444, 0.29402}, -1.0336}, {{1.15906, 0.13851}, 2.6559}});
  const Branch a = continue_orbit(one_unstable, family, ParamName::a, 0.6, 0.58);
  const Branch b = continue_orbit(two_unstable, family, ParamName::a, 0.6, 0.58);
  const BifurcationEvent fold = locate_fold(a, b);
  const bool fold_ok = std::abs(fold.value - 0.595) <= 5e-3;

  EngineConfig cfg;
  cfg.grid = GridSpec{{-2.5, -2.5}, {2.5, 2.5}, 10};
  cfg.sampling.mode = CoverMode::centre;
  cfg.sampling.k = 2;
  cfg.seed = {0.04, 0.31};
  cfg.attractor.rng_seed = 1;
  const std::vector<double> values = {0.59, 0.5925, 0.595, 0.5975, 0.6};
  const TopologicalScan scan = topological_bifurcation_scan(values, kHenon, base, ParamName::a, cfg);
  const double diag = cfg.grid.cell_diagonal();
  bool scan_ok = scan.records.front().components == 1 && scan.records.back().components == 2;
  std::string where = "no 1 -> 2 transition";
  for (std::size_t i = 0; i + 1 < scan.records.size(); ++i) {
    const ScanRecord& lo = scan.records[i];
    const ScanRecord& hi = scan.records[i + 1];
    if (!lo.error.empty() || !hi.error.empty()) scan_ok = false;
    if (lo.components == 1 && hi.components == 2) {
      where = fmt("transition in (%.4f, %.4f), collision %.2f diagonals", lo.value, hi.value,
                  hi.collision_distance / diag);
      scan_ok = scan_ok && hi.collision_distance <= 2.0 * diag;
    }
  }
  std::string counts;
  for (const auto& r : scan.records) counts += std::to_string(r.components);
  return {fold_ok && scan_ok, fmt("fold a = %.7f (target 0.595 +- 5e-3); components %s over [0.59, 0.6]; %s",
                                  fold.value, counts.c_str(), where.c_str())};
}

Outcome heteroclinic_tangency() {
  const Params base{0.373, 0.3, 0.6};
  const BoundaryMap beta(kHenon, base);
  const PeriodicOrbit u = find_periodic_orbit(beta, {BoundaryPoint{{1.409, 1.007}, 1.340}});
  const PeriodicOrbit s = find_periodic_orbit(beta, {BoundaryPoint{{-2.122, -0.935}, -2.621}});
  TangencyConfig tc;
  tc.growth.max_arc = 15;
  tc.tol = 1e-7;
  const BifurcationEvent ev = locate_heteroclinic_tangency(u, s, kHenon, base, ParamName::a, 0.373, 0.3755, tc);
  const bool located = ev.value >= 0.3738 && ev.value <= 0.3748;

  SamplingSpec sampling;
  sampling.mode = CoverMode::centre;
  const GridSpec grid{{-4, -4}, {4, 4}, 10};
  const double above = 0.375;
  bool escaped = false;
  try {
    minimal_attractor({0.25, -0.45}, Params{above, 0.3, 0.6}, *kHenon, grid, sampling);
  } catch (const Error& e) {
    escaped = e.kind() == ErrorKind::escape;
  }
  return {located && escaped, fmt("a = %.7f (bracket [0.3738, 0.3748]); seed %s at a = %.4f", ev.value,
                                  escaped ? "escapes" : "does not escape", above)};
}

Outcome scaling_law() {
  const double formula = accumulation_parameter(0.46964, 0.45820, -1.48933);
  CascadeConfig cc;
  cc.saddle = BoundaryPoint{{0.930791, 0.339775}, 1.31955};
  cc.stable_orbit = {{{0.270438, 0.309443}, -1.72536}, {{1.23733, 0.030239}, -2.1901}};
  const CascadeEstimate est = cascade_birth_estimate(kHenon, Params{0.49, 0.3, 0.0625}, ParamName::a, cc);
  const bool ok = std::abs(formula - 0.454869) <= 1e-6 && est.fit.a_inf >= 0.45 && est.fit.a_inf <= 0.46 &&
                  est.fit.residual < 0.15;
  std::ostringstream as;
  as.precision(8);
  for (double a : est.fit.disappearances) as << ' ' << a;
  return {ok, fmt("formula a_inf = %.7f; pipeline a_inf = %.6f, residual %.3f, c = %.3f from a_i =%s", formula,
                  est.fit.a_inf, est.fit.residual, est.fit.c, as.str().c_str())};
}

// Crossings of the projected unstable branches of both saddle fixed points
// within 0.1 of a stable period-2 point.
std::size_t near_crossings(double a, const std::vector<BoundaryPoint>& saddles, const std::vector<BoundaryPoint>& p2) {
  const BoundaryMap beta(kHenon, Params{a, 0.3, 0.0625});
  const PeriodicOrbit stable = find_periodic_orbit(beta, p2);
  if (stable.stability != Stability::stable) throw std::runtime_error("period-2 orbit is not stable");
  const GrowthConfig growth = CascadeConfig().growth;
  std::size_t count = 0;
  for (const auto& guess : saddles) {
    const PeriodicOrbit saddle = find_periodic_orbit(beta, {guess});
    for (const auto& branch : grow_all(ManifoldKind::unstable, saddle, beta, growth, stable.points)) {
      for (const auto& x : self_intersections(project(branch))) {
        for (const auto& q : stable.points) {
          if (distance(x.point, q.pos) <= 0.1) {
            ++count;
            break;
          }
        }
      }
    }
  }
  return count;
}

Outcome wedge_presence() {
  const std::size_t smooth =
      near_crossings(0.44, {{{0.857, 0.197}, -1.851}, {{0.959, 0.348}, 1.308}},
                     {{{0.5209, 0.2790}, -1.7750}, {{1.1339, 0.0993}, -1.9943}});
  const std::size_t wedged =
      near_crossings(0.49, {{{0.833, 0.190}, -1.839}, {{0.931, 0.340}, 1.320}},
                     {{{0.2704, 0.3094}, -1.7254}, {{1.2373, 0.0302}, -2.1901}});
  return {smooth == 0 && wedged >= 3,
          fmt("%zu self-intersections at a = 0.44, %zu at a = 0.49", smooth, wedged)};
}

Outcome linear_oracle() {
  const auto f = std::make_shared<AffineMap>(AffineMap::scaling(0.5));
  const Params p{0.0, 0.3, 0.1};
  const GridSpec g{{-0.5, -0.5}, {0.5, 0.5}, 8};
  const BoxSet att = minimal_attractor({0.0, 0.0}, p, *f, g, SamplingSpec{});
  const double r = p.eps / (1.0 - 0.5);
  std::vector<BoxIndex> disk;
  for (std::uint32_t ix = 0; ix < g.cells(); ++ix) {
    for (std::uint32_t iy = 0; iy < g.cells(); ++iy) {
      if (g.center(ix, iy).norm() <= r) disk.push_back({ix, iy});
    }
  }
  const double h = hausdorff_boxes(att, BoxSet(g, disk)) / g.cell_diagonal();

  const BoundaryMap beta(f, p);
  std::vector<Vec3> circle;
  for (int i = 0; i <= 2000; ++i) {
    const double th = -std::numbers::pi + 2.0 * std::numbers::pi * i / 2000;
    circle.push_back({r * std::cos(th), r * std::sin(th), th});
  }
  const double res = bundle_invariance_residual({circle}, beta);
  return {h <= 2.0 && res < 1e-9,
          fmt("Hausdorff to the disk %.2f diagonals; circle invariance residual %.1e", h, res)};
}

Outcome hygiene() {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> xy(-2.0, 2.0), th(-std::numbers::pi, std::numbers::pi);
  const BoundaryMap beta(kHenon, Params{0.13, 0.3, 0.6});
  double inverse = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const BoundaryPoint z{{xy(rng), xy(rng)}, th(rng)};
    inverse = std::max(inverse, chart_distance(beta.apply(beta.apply_inverse(z)), z));
  }
  double jac = 0.0;
  for (int i = 0; i < 100; ++i) {
    const BoundaryPoint z{{xy(rng), xy(rng)}, th(rng)};
    jac = std::max(jac, (beta.jacobian(z) - finite_difference_jacobian(beta, z)).cwiseAbs().maxCoeff());
  }
  int mismatched = 0;
  std::normal_distribution<double> step(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    std::vector<Point2> pts{{0.0, 0.0}};
    const int n = 10 + static_cast<int>(rng() % 60);
    for (int k = 0; k < n; ++k) pts.push_back({pts.back().x + step(rng), pts.back().y + step(rng)});
    const Polyline2 poly = Polyline2::from_points(pts);
    const auto fast = self_intersections(poly);
    const auto slow = self_intersections_brute_force(poly);
    bool same = fast.size() == slow.size();
    for (std::size_t k = 0; same && k < fast.size(); ++k) {
      same = fast[k].seg_i == slow[k].seg_i && fast[k].seg_j == slow[k].seg_j &&
             distance(fast[k].point, slow[k].point) < 1e-12;
    }
    if (!same) ++mismatched;
  }
  return {inverse < 1e-10 && jac < 1e-5 && mismatched == 0,
          fmt("beta(beta^-1) error %.1e on 1000 points; Jacobian vs differences %.1e on 100 points; "
              "%d of 100 polylines differ from brute force",
              inverse, jac, mismatched)};
}

}  // namespace

int main() {
  criterion(1, 1, fixed_point_and_spectrum);
  criterion(2, 30, eigen_relations);
  criterion(3, 60, real_to_complex);
  criterion(4, 1200, period_two_fold);
  criterion(5, 600, heteroclinic_tangency);
  criterion(6, 1800, scaling_law);
  criterion(7, 300, wedge_presence);
  criterion(8, 60, linear_oracle);
  criterion(9, 60, hygiene);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
