#include "noisebound/bifurcation.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "json_util.hpp"

namespace noisebound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// a + t (b - a), chart differences wrapped.
std::vector<BoundaryPoint> interpolate(const std::vector<BoundaryPoint>& a, const std::vector<BoundaryPoint>& b,
                                       double t) {
  std::vector<BoundaryPoint> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i] = BoundaryPoint::from_chart(a[i].chart() + t * chart_difference(b[i], a[i]));
  }
  return out;
}

double orbit_distance(const std::vector<BoundaryPoint>& a, const std::vector<BoundaryPoint>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, chart_distance(a[i], b[i]));
  return d;
}

std::optional<PeriodicOrbit> try_converge(const ChartMap& map, const std::vector<BoundaryPoint>& guess,
                                          const NewtonOptions& newton) {
  try {
    return find_periodic_orbit(map, guess, newton);
  } catch (const Error&) {
    return std::nullopt;
  }
}

// Pseudo-arclength machinery on X = (z_0, ..., z_{p-1}, lambda).
class ArclengthSystem {
public:
  ArclengthSystem(const MapFamily& family, std::size_t period) : family_(family), p_(period), n_(3 * period) {}

  Eigen::Index size() const { return static_cast<Eigen::Index>(n_); }

  static Eigen::VectorXd pack(const std::vector<BoundaryPoint>& pts, double lambda) {
    Eigen::VectorXd x(3 * pts.size() + 1);
    for (std::size_t i = 0; i < pts.size(); ++i) x.segment<3>(3 * i) = pts[i].chart();
    x[x.size() - 1] = lambda;
    return x;
  }
  std::vector<BoundaryPoint> points(const Eigen::VectorXd& x) const {
    std::vector<BoundaryPoint> pts(p_);
    for (std::size_t i = 0; i < p_; ++i) pts[i] = BoundaryPoint::from_chart(x.segment<3>(3 * i));
    return pts;
  }

  Eigen::VectorXd residual(const Eigen::VectorXd& x) const {
    return cyclic_residual(*family_(x[size()]), points(x));
  }

  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const {
    const double lambda = x[size()];
    const auto map = family_(lambda);
    const auto pts = points(x);
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(size(), size() + 1);
    for (std::size_t i = 0; i < p_; ++i) {
      const auto row = static_cast<Eigen::Index>(3 * i);
      j.block<3, 3>(row, row) += map->jacobian(pts[i]);
      j.block<3, 3>(row, static_cast<Eigen::Index>(3 * ((i + 1) % p_))) -= Jacobian3::Identity();
    }
    const double h = 1e-7 * std::max(1.0, std::abs(lambda));
    j.col(size()) = (cyclic_residual(*family_(lambda + h), pts) - cyclic_residual(*family_(lambda - h), pts)) /
                    (2.0 * h);
    return j;
  }

  // Unit null vector of the Jacobian, oriented along `along`.
  Eigen::VectorXd tangent(const Eigen::VectorXd& x, const Eigen::VectorXd& along) const {
    const Eigen::MatrixXd j = jacobian(x);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(j, Eigen::ComputeFullV);
    Eigen::VectorXd t = svd.matrixV().col(size());
    if (t.dot(along) < 0.0) t = -t;
    return t;
  }

  struct Correction {
    Eigen::VectorXd x;
    int iterations = 0;
  };

  std::optional<Correction> correct(const Eigen::VectorXd& predictor, const Eigen::VectorXd& t,
                                    const NewtonOptions& newton) const {
    Eigen::VectorXd x = predictor;
    for (int it = 0; it <= newton.max_iterations; ++it) {
      Eigen::VectorXd r;
      try {
        r = residual(x);
      } catch (const Error&) {
        return std::nullopt;
      }
      const double g = t.dot(x - predictor);
      if (!r.allFinite()) return std::nullopt;
      if (r.norm() < newton.tol && std::abs(g) < newton.tol) return Correction{x, it};
      if (it == newton.max_iterations) break;
      Eigen::MatrixXd a(size() + 1, size() + 1);
      Eigen::VectorXd rhs(size() + 1);
      try {
        a.topRows(size()) = jacobian(x);
      } catch (const Error&) {
        return std::nullopt;
      }
      a.row(size()) = t.transpose();
      rhs.head(size()) = -r;
      rhs[size()] = -g;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
      if (!lu.isInvertible()) return std::nullopt;
      x += lu.solve(rhs);
      if (!x.allFinite()) return std::nullopt;
    }
    return std::nullopt;
  }

private:
  const MapFamily& family_;
  std::size_t p_;
  std::size_t n_;
};

BranchSample make_sample(const MapFamily& family, double value, PeriodicOrbit orbit, bool arclength, bool fold) {
  if (arclength) analyse_orbit(*family(value), orbit);
  BranchSample s;
  s.value = value;
  s.orbit = std::move(orbit);
  s.arclength = arclength;
  s.fold = fold;
  return s;
}

void adapt(double& step, int iterations, const StepPolicy& policy) {
  if (iterations >= policy.halve_at) {
    step *= 0.5;
  } else if (iterations <= policy.double_at) {
    step = std::min(2.0 * step, policy.max);
  }
}

// Pseudo-arclength stage from the last sample of the branch.
void continue_by_arclength(Branch& br, double from, double to, const StepPolicy& policy, const NewtonOptions& newton) {
  const double dir = to > from ? 1.0 : -1.0;
  const double lo = std::min(from, to), hi = std::max(from, to);
  const std::size_t p = br.samples.back().orbit.points.size();
  const ArclengthSystem sys(br.family, p);

  const BranchSample& last = br.samples.back();
  Eigen::VectorXd x = ArclengthSystem::pack(last.orbit.points, last.value);
  Eigen::VectorXd along = Eigen::VectorXd::Zero(x.size());
  along[x.size() - 1] = dir;
  if (br.samples.size() >= 2) {
    const BranchSample& prev = br.samples[br.samples.size() - 2];
    for (std::size_t i = 0; i < p; ++i) {
      along.segment<3>(3 * i) = chart_difference(last.orbit.points[i], prev.orbit.points[i]);
    }
    along[x.size() - 1] = last.value - prev.value;
  }
  Eigen::VectorXd t = sys.tangent(x, along);
  double ds = policy.initial;

  while (br.samples.size() < policy.max_samples) {
    const Eigen::VectorXd predictor = x + ds * t;
    auto corr = sys.correct(predictor, t, newton);
    if (corr && (corr->x - predictor).norm() > policy.max_jump) corr.reset();
    if (!corr) {
      ds *= 0.5;
      if (ds < policy.min) {
        std::ostringstream msg;
        msg << "continuation lost at " << to_string(br.parameter) << " = " << br.samples.back().value;
        throw LostBranch(msg.str(), br);
      }
      continue;
    }
    const Eigen::VectorXd& y = corr->x;
    const double lambda = y[y.size() - 1];
    if (lambda < lo || lambda > hi) {
      // Crossing the far end: finish exactly there. Crossing the near end
      // (after a fold) ends the branch.
      const double end = lambda > hi ? hi : lo;
      if (end == to) {
        const double frac = (end - x[x.size() - 1]) / (lambda - x[x.size() - 1]);
        const auto guess = interpolate(sys.points(x), sys.points(y), frac);
        if (auto orb = try_converge(*br.family(end), guess, newton)) {
          br.samples.push_back(make_sample(br.family, end, std::move(*orb), true, false));
        }
      }
      return;
    }
    const Eigen::VectorXd tn = sys.tangent(y, t);
    const bool fold = tn[tn.size() - 1] * t[t.size() - 1] < 0.0;
    PeriodicOrbit orb;
    orb.points = sys.points(y);
    orb.residual = sys.residual(y).norm();
    orb.iterations = corr->iterations;
    br.samples.push_back(make_sample(br.family, lambda, std::move(orb), true, fold));
    x = y;
    t = tn;
    adapt(ds, corr->iterations, policy);
  }
}

}  // namespace

void StepPolicy::validate() const {
  if (!(initial > 0.0) || !(min > 0.0) || !(max >= initial) || !(initial >= min)) {
    throw Error(ErrorKind::invalid_argument, "step policy needs 0 < min <= initial <= max");
  }
  if (halve_at <= double_at) throw Error(ErrorKind::invalid_argument, "halve_at must exceed double_at");
  if (!(max_jump > 0.0)) throw Error(ErrorKind::invalid_argument, "max_jump must be positive");
  if (max_samples < 2) throw Error(ErrorKind::invalid_argument, "max_samples must be at least 2");
}

bool Branch::has_fold() const {
  return std::any_of(samples.begin(), samples.end(), [](const BranchSample& s) { return s.fold; });
}

Branch continue_orbit(const PeriodicOrbit& start, const MapFamily& family, ParamName parameter, double from,
                      double to, const StepPolicy& policy, const NewtonOptions& newton) {
  policy.validate();
  if (start.points.empty()) throw Error(ErrorKind::invalid_argument, "start orbit is empty");
  if (!std::isfinite(from) || !std::isfinite(to)) throw Error(ErrorKind::invalid_argument, "range is not finite");
  Branch br;
  br.parameter = parameter;
  br.family = family;

  const auto map0 = family(from);
  if (!(cyclic_residual(*map0, start.points).norm() < 1e-6)) {
    throw Error(ErrorKind::invalid_argument, "start orbit is not converged at the range start");
  }
  br.samples.push_back(make_sample(family, from, find_periodic_orbit(*map0, start.points, newton), false, false));
  if (from == to) return br;

  const double dir = to > from ? 1.0 : -1.0;
  double step = policy.initial;
  while (br.samples.size() < policy.max_samples) {
    const BranchSample& cur = br.samples.back();
    const double remaining = std::abs(to - cur.value);
    if (remaining <= 1e-14 * (1.0 + std::abs(to))) break;
    const bool last = step >= remaining;
    const double next = last ? to : cur.value + dir * step;

    std::vector<BoundaryPoint> guess = cur.orbit.points;
    if (br.samples.size() >= 2) {
      const BranchSample& prev = br.samples[br.samples.size() - 2];
      guess = interpolate(prev.orbit.points, cur.orbit.points, (next - prev.value) / (cur.value - prev.value));
    }
    auto orb = try_converge(*family(next), guess, newton);
    if (orb && orbit_distance(orb->points, guess) > policy.max_jump) orb.reset();
    if (!orb) {
      step *= 0.5;
      if (step < policy.min) {
        continue_by_arclength(br, from, to, policy, newton);
        return br;
      }
      continue;
    }
    const int iterations = orb->iterations;
    br.samples.push_back(make_sample(family, next, std::move(*orb), false, false));
    adapt(step, iterations, policy);
    step = std::max(step, policy.min);
  }
  return br;
}

Branch continue_orbit(const PeriodicOrbit& start, std::shared_ptr<const PlanarMap> map, const Params& base,
                      ParamName parameter, double to, const StepPolicy& policy, const NewtonOptions& newton) {
  const double from = parameter == ParamName::a ? base.a : parameter == ParamName::b ? base.b : base.eps;
  return continue_orbit(start, boundary_map_family(std::move(map), base, parameter), parameter, from, to, policy,
                        newton);
}

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::real_to_complex: return "real-to-complex";
    case EventKind::fold: return "fold";
    case EventKind::heteroclinic_tangency: return "heteroclinic-tangency";
    case EventKind::topological_collision: return "topological-collision";
    case EventKind::cascade_birth: return "cascade-birth";
  }
  return "?";
}

namespace {

std::vector<std::complex<double>> spectrum(const PeriodicOrbit& o) {
  const auto e = o.eigen.eigenvalues();
  return {e.begin(), e.end()};
}

bool real_spectrum(const PeriodicOrbit& o) { return o.eigen.discriminant > 0.0; }

}  // namespace

BifurcationEvent locate_real_to_complex(const Branch& branch, double tol, const NewtonOptions& newton) {
  if (!(tol > 0.0)) throw Error(ErrorKind::invalid_argument, "tolerance must be positive");
  if (!branch.family) throw Error(ErrorKind::invalid_argument, "branch has no map family");
  std::size_t k = 0;
  for (; k + 1 < branch.samples.size(); ++k) {
    if (real_spectrum(branch.samples[k].orbit) != real_spectrum(branch.samples[k + 1].orbit)) break;
  }
  if (k + 1 >= branch.samples.size()) {
    throw Error(ErrorKind::no_transition, "spectrum kind is constant along the branch");
  }
  PeriodicOrbit lo_orbit = branch.samples[k].orbit, hi_orbit = branch.samples[k + 1].orbit;
  double lo = branch.samples[k].value, hi = branch.samples[k + 1].value;
  const bool lo_real = real_spectrum(lo_orbit);
  while (std::abs(hi - lo) > 2.0 * tol) {
    const double mid = 0.5 * (lo + hi);
    const auto guess = interpolate(lo_orbit.points, hi_orbit.points, 0.5);
    PeriodicOrbit orb = find_periodic_orbit(*branch.family(mid), guess, newton);
    if (real_spectrum(orb) == lo_real) {
      lo = mid;
      lo_orbit = std::move(orb);
    } else {
      hi = mid;
      hi_orbit = std::move(orb);
    }
  }
  const PeriodicOrbit& real_side = lo_real ? lo_orbit : hi_orbit;
  BifurcationEvent ev;
  ev.kind = EventKind::real_to_complex;
  ev.parameter = branch.parameter;
  ev.value = 0.5 * (lo + hi);
  ev.uncertainty = 0.5 * std::abs(hi - lo);
  ev.orbit = real_side;
  ev.eigenvalues = spectrum(real_side);
  const auto& e = real_side.eigen;
  ev.diagnostics["discriminant"] = e.discriminant;
  ev.diagnostics["pair_gap"] = std::abs(e.lambda2 - e.lambda3);
  ev.diagnostics["real_side"] = lo_real ? lo : hi;
  return ev;
}

namespace {

// Parameter and orbit of the last sample before the first fold flag.
const BranchSample& pre_fold_end(const Branch& b) {
  for (std::size_t i = 1; i < b.samples.size(); ++i) {
    if (b.samples[i].fold) return b.samples[i - 1];
  }
  return b.samples.back();
}

const BranchSample& nearest_sample(const Branch& b, double value, double dir) {
  // Only the part before the first fold, where the parameter is monotone.
  const BranchSample* best = &b.samples.front();
  for (const auto& s : b.samples) {
    if (s.fold) break;
    if (std::abs(s.value - value) < std::abs(best->value - value) && (s.value - value) * dir <= 1e-15) best = &s;
  }
  return *best;
}

double multiplier_gap(const PeriodicOrbit& o) {
  double gap = kInf;
  for (const auto& mu : o.eigen.eigenvalues()) {
    if (std::abs(mu.imag()) < 1e-12) gap = std::min(gap, std::abs(mu.real() - 1.0));
  }
  return gap;
}

}  // namespace

BifurcationEvent locate_fold(const Branch& a, const Branch& b, double tol, const NewtonOptions& newton) {
  if (!(tol > 0.0)) throw Error(ErrorKind::invalid_argument, "tolerance must be positive");
  if (a.samples.size() < 2 || b.samples.size() < 2) {
    throw Error(ErrorKind::insufficient_data, "fold location needs two samples per branch");
  }
  if (!a.family) throw Error(ErrorKind::invalid_argument, "branch has no map family");
  if (a.parameter != b.parameter || a.samples.front().orbit.points.size() != b.samples.front().orbit.points.size()) {
    throw Error(ErrorKind::invalid_argument, "fold branches differ in parameter or period");
  }
  const BranchSample& end_a = pre_fold_end(a);
  const BranchSample& end_b = pre_fold_end(b);
  const double dir_a = end_a.value - a.samples.front().value;
  const double dir_b = end_b.value - b.samples.front().value;
  if (!(dir_a * dir_b > 0.0)) throw Error(ErrorKind::no_fold, "branches do not move in the same direction");
  const double dir = dir_a > 0.0 ? 1.0 : -1.0;

  // Both orbits are known at the less advanced of the two ends.
  double lo = dir > 0.0 ? std::min(end_a.value, end_b.value) : std::max(end_a.value, end_b.value);
  auto converge_at = [&](const Branch& br, double value) {
    const BranchSample& s = nearest_sample(br, value, dir);
    return find_periodic_orbit(*a.family(value), s.orbit.points, newton);
  };
  PeriodicOrbit pa = converge_at(a, lo), pb = converge_at(b, lo);
  if (orbit_distance(pa.points, pb.points) < 1e-12) {
    throw Error(ErrorKind::no_fold, "the two branches coincide at the start of the bracket");
  }

  // Existence probe: Newton from either known orbit or their midpoint,
  // accepted only near the pair.
  auto probe = [&](double value) -> std::optional<std::pair<PeriodicOrbit, PeriodicOrbit>> {
    const auto map = a.family(value);
    const double reach = orbit_distance(pa.points, pb.points) + 1e-6;
    std::vector<PeriodicOrbit> found;
    for (const auto& guess : {pa.points, pb.points, interpolate(pa.points, pb.points, 0.5)}) {
      auto o = try_converge(*map, guess, newton);
      if (o && orbit_distance(o->points, guess) <= reach) found.push_back(std::move(*o));
    }
    if (found.empty()) return std::nullopt;
    // Keep the most separated pair so both sides of the fold stay tracked.
    std::pair<PeriodicOrbit, PeriodicOrbit> best{found.front(), found.front()};
    double sep = -1.0;
    for (const auto& x : found) {
      for (const auto& y : found) {
        const double d = orbit_distance(x.points, y.points);
        if (d > sep) {
          sep = d;
          best = {x, y};
        }
      }
    }
    return best;
  };

  double h = std::max(std::abs(end_a.value - end_b.value), 16.0 * tol);
  double hi = lo + dir * h;
  for (int k = 0;; ++k) {
    auto pair = probe(hi);
    if (!pair) break;
    if (k >= 20) throw Error(ErrorKind::no_fold, "orbit pair persists beyond the branches");
    lo = hi;
    std::tie(pa, pb) = *pair;
    h *= 2.0;
    hi = lo + dir * h;
  }
  while (std::abs(hi - lo) > 2.0 * tol) {
    const double mid = 0.5 * (lo + hi);
    if (auto pair = probe(mid)) {
      lo = mid;
      std::tie(pa, pb) = *pair;
    } else {
      hi = mid;
    }
  }
  const PeriodicOrbit& witness = multiplier_gap(pa) <= multiplier_gap(pb) ? pa : pb;
  const double gap = multiplier_gap(witness);
  if (!(gap <= 1e-3)) {
    throw Error(ErrorKind::no_fold, "no real multiplier near +1 where the orbits disappear (gap " +
                                        std::to_string(gap) + ")");
  }
  BifurcationEvent ev;
  ev.kind = EventKind::fold;
  ev.parameter = a.parameter;
  ev.value = 0.5 * (lo + hi);
  ev.uncertainty = 0.5 * std::abs(hi - lo);
  ev.orbit = witness;
  ev.eigenvalues = spectrum(witness);
  ev.diagnostics["multiplier_gap"] = gap;
  ev.diagnostics["pair_distance"] = orbit_distance(pa.points, pb.points);
  ev.diagnostics["last_existing"] = lo;
  return ev;
}

double transversal_side(const ClosestApproach& c) {
  return (c.on_a - c.on_b).dot(c.tangent_a.cross(c.tangent_b));
}

void TangencyConfig::validate() const {
  growth.validate();
  if (!(tol > 0.0)) throw Error(ErrorKind::invalid_argument, "tangency tolerance must be positive");
  if (scan_samples < 1) throw Error(ErrorKind::invalid_argument, "scan_samples must be at least 1");
}

BifurcationEvent locate_crossing(const std::function<ClosestApproach(double)>& witness, ParamName parameter,
                                 double from, double to, double tol, int scan_samples,
                                 std::vector<IndicatorSample>* samples) {
  if (!(tol > 0.0) || scan_samples < 1) throw Error(ErrorKind::invalid_argument, "bad crossing tolerances");
  std::vector<IndicatorSample> log;
  auto eval = [&](double v) {
    const ClosestApproach c = witness(v);
    log.push_back({v, transversal_side(c), c.distance});
    return log.back();
  };
  auto listing = [&] {
    std::ostringstream s;
    s.precision(9);
    for (const auto& x : log) s << "\n  " << x.value << ": side " << x.indicator << ", distance " << x.distance;
    return s.str();
  };
  auto sign = [](double x) { return x > 0.0 ? 1 : x < 0.0 ? -1 : 0; };

  std::vector<IndicatorSample> scan;
  for (int i = 0; i <= scan_samples; ++i) scan.push_back(eval(from + (to - from) * i / scan_samples));
  // Sign changes between consecutive nonzero samples; an exact zero in
  // between lies inside the bracket.
  std::size_t changes = 0, lo_at = 0, hi_at = 0;
  std::optional<std::size_t> last;
  for (std::size_t i = 0; i < scan.size(); ++i) {
    if (sign(scan[i].indicator) == 0) continue;
    if (last && sign(scan[*last].indicator) != sign(scan[i].indicator)) {
      ++changes;
      lo_at = *last;
      hi_at = i;
    }
    last = i;
  }
  if (samples) *samples = log;
  if (changes == 0) throw Error(ErrorKind::no_transition, "the manifolds do not cross in the range" + listing());
  if (changes > 1) {
    throw Error(ErrorKind::indicator_not_monotone, "the crossing indicator changes sign " +
                                                       std::to_string(changes) + " times" + listing());
  }
  IndicatorSample lo = scan[lo_at], hi = scan[hi_at];
  const int lo_sign = sign(lo.indicator);
  while (std::abs(hi.value - lo.value) > 2.0 * tol) {
    const IndicatorSample m = eval(0.5 * (lo.value + hi.value));
    (sign(m.indicator) == lo_sign ? lo : hi) = m;
  }
  if (samples) *samples = log;
  BifurcationEvent ev;
  ev.kind = EventKind::heteroclinic_tangency;
  ev.parameter = parameter;
  ev.value = 0.5 * (lo.value + hi.value);
  ev.uncertainty = 0.5 * std::abs(hi.value - lo.value);
  ev.diagnostics["distance_before"] = lo.distance;
  ev.diagnostics["distance_after"] = hi.distance;
  ev.diagnostics["side_before"] = lo.indicator;
  ev.diagnostics["side_after"] = hi.indicator;
  return ev;
}

BifurcationEvent locate_heteroclinic_tangency(const PeriodicOrbit& saddle_u, const PeriodicOrbit& saddle_s,
                                              std::shared_ptr<const PlanarMap> map, const Params& base,
                                              ParamName parameter, double from, double to, const TangencyConfig& cfg,
                                              std::vector<IndicatorSample>* samples) {
  cfg.validate();
  const MapFamily family = boundary_map_family(std::move(map), base, parameter);
  struct Pair {
    PeriodicOrbit u, s;
  };
  std::map<double, Pair> known;
  {
    const auto beta = family(from);
    known[from] = {find_periodic_orbit(*beta, saddle_u.points), find_periodic_orbit(*beta, saddle_s.points)};
  }
  auto saddles_at = [&](double v) -> const Pair& {
    auto it = known.lower_bound(v);
    if (it != known.end() && it->first == v) return it->second;
    auto best = it == known.end() ? std::prev(it) : it;
    if (it != known.begin() && (it == known.end() || std::abs(std::prev(it)->first - v) < std::abs(it->first - v))) {
      best = std::prev(it);
    }
    const auto beta = family(v);
    Pair p{find_periodic_orbit(*beta, best->second.u.points), find_periodic_orbit(*beta, best->second.s.points)};
    return known.emplace(v, std::move(p)).first->second;
  };

  Side side_u = cfg.side_u.value_or(Side::plus), side_s = cfg.side_s.value_or(Side::plus);
  if (!cfg.side_u || !cfg.side_s) {
    const auto beta = family(from);
    const Pair& p = saddles_at(from);
    double best = kInf;
    for (Side su : {Side::plus, Side::minus}) {
      if (cfg.side_u && su != *cfg.side_u) continue;
      const auto bu = grow_unstable(p.u, *beta, cfg.growth, su);
      for (Side ss : {Side::plus, Side::minus}) {
        if (cfg.side_s && ss != *cfg.side_s) continue;
        const double d = manifold_min_distance(bu, grow_stable(p.s, *beta, cfg.growth, ss)).distance;
        if (d < best) {
          best = d;
          side_u = su;
          side_s = ss;
        }
      }
    }
  }

  auto witness = [&](double v) {
    const Pair& p = saddles_at(v);
    const auto beta = family(v);
    return manifold_min_distance(grow_unstable(p.u, *beta, cfg.growth, side_u),
                                 grow_stable(p.s, *beta, cfg.growth, side_s));
  };
  BifurcationEvent ev = locate_crossing(witness, parameter, from, to, cfg.tol, cfg.scan_samples, samples);
  const Pair& at = saddles_at(ev.value);
  ev.orbit = at.u;
  ev.eigenvalues = spectrum(at.u);
  ev.diagnostics["side_u"] = side_u == Side::plus ? 1.0 : -1.0;
  ev.diagnostics["side_s"] = side_s == Side::plus ? 1.0 : -1.0;
  ev.diagnostics["distance"] = witness(ev.value).distance;
  return ev;
}

void EngineConfig::validate() const {
  grid.validate();
  sampling.validate();
  if (collar < 0) throw Error(ErrorKind::invalid_argument, "collar must be non-negative");
  if (workers < 1) throw Error(ErrorKind::invalid_argument, "workers must be at least 1");
}

TopologicalScan topological_bifurcation_scan(const std::vector<double>& values, std::shared_ptr<const PlanarMap> map,
                                             const Params& base, ParamName parameter, const EngineConfig& cfg) {
  cfg.validate();
  const bool ascending = std::is_sorted(values.begin(), values.end());
  const bool descending = std::is_sorted(values.begin(), values.end(), std::greater<>());
  if (!ascending && !descending) throw Error(ErrorKind::invalid_argument, "scan parameters must be sorted");

  TopologicalScan scan;
  scan.parameter = parameter;
  scan.records.resize(values.size());
  const auto n = static_cast<std::ptrdiff_t>(values.size());
#ifdef NOISEBOUND_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(cfg.workers)
#endif
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    ScanRecord& r = scan.records[static_cast<std::size_t>(i)];
    r.value = values[static_cast<std::size_t>(i)];
    r.hausdorff_to_previous = kNaN;
    r.collision_distance = kNaN;
    const Params p = with_param(base, parameter, r.value);
    try {
      r.attractor = minimal_attractor(cfg.seed, p, *map, cfg.grid, cfg.sampling, cfg.attractor);
      r.domain = domain_of_attraction(r.attractor, p, *map, cfg.sampling, cfg.collar);
      const BoxSet repeller = dual_repeller(r.domain);
      r.repeller_boxes = repeller.size();
      r.components = count_components(r.attractor);
      r.collision_distance = repeller.empty() ? kInf : collision_distance(r.attractor, repeller);
    } catch (const Error& e) {
      r.escaped = e.kind() == ErrorKind::escape;
      r.error = e.what();
    }
  }

  auto ok = [](const ScanRecord& r) { return r.error.empty(); };
  std::vector<double> steps;
  for (std::size_t i = 1; i < scan.records.size(); ++i) {
    if (ok(scan.records[i]) && ok(scan.records[i - 1])) {
      scan.records[i].hausdorff_to_previous = hausdorff_boxes(scan.records[i - 1].attractor, scan.records[i].attractor);
      steps.push_back(scan.records[i].hausdorff_to_previous);
    }
  }
  double median = kNaN;
  if (!steps.empty()) {
    std::nth_element(steps.begin(), steps.begin() + static_cast<std::ptrdiff_t>(steps.size() / 2), steps.end());
    median = steps[steps.size() / 2];
  }

  const double diag = cfg.grid.cell_diagonal();
  for (std::size_t i = 1; i < scan.records.size(); ++i) {
    const ScanRecord& prev = scan.records[i - 1];
    const ScanRecord& cur = scan.records[i];
    BifurcationEvent ev;
    ev.kind = EventKind::topological_collision;
    ev.parameter = parameter;
    ev.value = 0.5 * (prev.value + cur.value);
    ev.uncertainty = 0.5 * std::abs(cur.value - prev.value);
    if (ok(prev) && cur.escaped) {
      ev.diagnostics["escape"] = 1.0;
      ev.diagnostics["collision_diagonals"] = prev.collision_distance / diag;
      scan.events.push_back(ev);
      continue;
    }
    if (!ok(prev) || !ok(cur)) continue;
    const double collision = std::min(prev.collision_distance, cur.collision_distance) / diag;
    const bool count_change = prev.components != cur.components;
    const bool jump = std::isfinite(median) && cur.hausdorff_to_previous > 10.0 * median && collision <= 2.0;
    if (!count_change && !jump) continue;
    ev.diagnostics["components_before"] = prev.components;
    ev.diagnostics["components_after"] = cur.components;
    ev.diagnostics["collision_diagonals"] = collision;
    ev.diagnostics["hausdorff"] = cur.hausdorff_to_previous;
    scan.events.push_back(ev);
  }
  return scan;
}

std::vector<double> locate_disappearances(const std::function<double(double)>& level, double top, double bottom,
                                          const StaircaseOptions& opts) {
  if (!(top > bottom)) throw Error(ErrorKind::invalid_argument, "staircase range needs top > bottom");
  if (!(opts.grid_step > 0.0) || !(opts.tol > 0.0) || !(opts.threshold > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "staircase step, tolerance and threshold must be positive");
  }
  std::vector<double> out;
  // The level rises as the parameter decreases; a rise above the threshold
  // across an interval means a discontinuity inside it.
  std::function<void(double, double, double, double)> refine = [&](double hi, double l_hi, double lo, double l_lo) {
    if (out.size() >= opts.max_count) return;
    if (!(l_lo - l_hi > opts.threshold)) return;
    if (hi - lo <= opts.tol) {
      out.push_back(0.5 * (hi + lo));
      return;
    }
    const double mid = 0.5 * (hi + lo);
    const double l_mid = level(mid);
    refine(hi, l_hi, mid, l_mid);
    refine(mid, l_mid, lo, l_lo);
  };
  double hi = top;
  double l_hi = level(top);
  while (hi > bottom && out.size() < opts.max_count) {
    const double lo = std::max(bottom, hi - opts.grid_step);
    const double l_lo = level(lo);
    refine(hi, l_hi, lo, l_lo);
    hi = lo;
    l_hi = l_lo;
  }
  return out;
}

CascadeConfig::CascadeConfig() {
  growth.max_step = 2e-3;
  growth.target_tol = 1e-3;
  growth.max_arc = 12.0;
  growth.max_points = 300000;
  staircase.max_count = 6;
}

void CascadeConfig::validate() const {
  growth.validate();
  if (stable_orbit.empty()) throw Error(ErrorKind::invalid_argument, "cascade needs a stable orbit guess");
  if (!(top > bottom)) throw Error(ErrorKind::invalid_argument, "cascade range needs top > bottom");
}

double outermost_wedge_level(const PeriodicOrbit& saddle, const std::vector<BoundaryPoint>& targets,
                             const ChartMap& beta, const CascadeConfig& cfg) {
  const ManifoldBranch br = grow_unstable(saddle, beta, cfg.growth, cfg.side, 0, targets);
  const auto wedges = detect_wedges(br, std::nullopt, cfg.min_sharpness);
  return wedges.empty() ? kInf : wedges.front().level;
}

CascadeEstimate cascade_birth_estimate(std::shared_ptr<const PlanarMap> map, const Params& base, ParamName parameter,
                                       const CascadeConfig& cfg) {
  cfg.validate();
  const MapFamily family = boundary_map_family(std::move(map), base, parameter);
  struct Pair {
    PeriodicOrbit saddle, stable;
  };
  std::map<double, Pair> known;
  {
    const auto beta = family(cfg.top);
    Pair p{find_periodic_orbit(*beta, {cfg.saddle}), find_periodic_orbit(*beta, cfg.stable_orbit)};
    if (p.saddle.stability != Stability::saddle_1u) {
      throw Error(ErrorKind::not_a_saddle, "cascade saddle guess converged to a " + to_string(p.saddle.stability) +
                                               " point");
    }
    known.emplace(cfg.top, std::move(p));
  }

  CascadeEstimate est;
  auto level = [&](double v) {
    auto it = known.lower_bound(v);
    auto best = it == known.end() ? std::prev(it) : it;
    if (it != known.begin() && (it == known.end() || std::abs(std::prev(it)->first - v) < std::abs(it->first - v))) {
      best = std::prev(it);
    }
    const auto beta = family(v);
    Pair p{find_periodic_orbit(*beta, best->second.saddle.points),
           find_periodic_orbit(*beta, best->second.stable.points)};
    const double l = outermost_wedge_level(p.saddle, p.stable.points, *beta, cfg);
    known.emplace(v, std::move(p));
    est.levels.emplace_back(v, l);
    return l;
  };
  const auto jumps = locate_disappearances(level, cfg.top, cfg.bottom, cfg.staircase);
  std::sort(est.levels.begin(), est.levels.end());
  if (jumps.size() < 3) {
    throw Error(ErrorKind::insufficient_data,
                "only " + std::to_string(jumps.size()) + " wedge disappearances found in the range");
  }
  est.fit = scaling_fit(jumps);
  est.event.kind = EventKind::cascade_birth;
  est.event.parameter = parameter;
  est.event.value = est.fit.a_inf;
  est.event.uncertainty = std::max(est.fit.residual, cfg.staircase.tol);
  est.event.diagnostics["c"] = est.fit.c;
  est.event.diagnostics["a0"] = est.fit.a0;
  est.event.diagnostics["a1"] = est.fit.a1;
  est.event.diagnostics["residual"] = est.fit.residual;
  est.event.diagnostics["disappearances"] = static_cast<double>(jumps.size());
  return est;
}

void write_branch_csv(std::ostream& out, const Branch& branch) {
  out.precision(9);
  const std::size_t p = branch.samples.empty() ? 0 : branch.samples.front().orbit.points.size();
  out << to_string(branch.parameter) << ",stability,spectrum,arclength,fold";
  for (std::size_t i = 0; i < p; ++i) out << ",x" << i << ",y" << i << ",theta" << i;
  out << ",lambda1,re2,im2,re3,im3,discriminant\n";
  for (const auto& s : branch.samples) {
    const auto& e = s.orbit.eigen;
    out << s.value << ',' << to_string(s.orbit.stability) << ',' << to_string(e.kind) << ',' << s.arclength << ','
        << s.fold;
    for (const auto& z : s.orbit.points) out << ',' << z.pos.x << ',' << z.pos.y << ',' << z.theta;
    out << ',' << e.lambda1 << ',' << e.lambda2.real() << ',' << e.lambda2.imag() << ',' << e.lambda3.real() << ','
        << e.lambda3.imag() << ',' << e.discriminant << '\n';
  }
}

namespace {

nlohmann::json event_json(const BifurcationEvent& ev) {
  using nlohmann::json;
  json j = {{"kind", to_string(ev.kind)},
            {"parameter", to_string(ev.parameter)},
            {"value", ev.value},
            {"uncertainty", ev.uncertainty}};
  j["orbit"] = nullptr;
  if (ev.orbit) {
    j["orbit"] = json::array();
    for (const auto& z : ev.orbit->points) j["orbit"].push_back({z.pos.x, z.pos.y, z.theta});
    j["stability"] = to_string(ev.orbit->stability);
  }
  j["eigenvalues"] = json::array();
  for (const auto& mu : ev.eigenvalues) j["eigenvalues"].push_back({mu.real(), mu.imag()});
  j["diagnostics"] = json::object();
  for (const auto& [k, v] : ev.diagnostics) j["diagnostics"][k] = v;
  return j;
}

}  // namespace

std::vector<SweepRecord> branch_records(const Branch& branch) {
  std::vector<SweepRecord> out;
  for (const auto& s : branch.samples) {
    SweepRecord r;
    r.value = s.value;
    for (std::size_t i = 0; i < s.orbit.points.size(); ++i) {
      const auto& z = s.orbit.points[i];
      const std::string k = std::to_string(i);
      r.fields["x" + k] = z.pos.x;
      r.fields["y" + k] = z.pos.y;
      r.fields["theta" + k] = z.theta;
    }
    const auto& e = s.orbit.eigen;
    r.fields["lambda1"] = e.lambda1;
    r.fields["re2"] = e.lambda2.real();
    r.fields["im2"] = e.lambda2.imag();
    r.fields["re3"] = e.lambda3.real();
    r.fields["im3"] = e.lambda3.imag();
    r.fields["discriminant"] = e.discriminant;
    r.fields["arclength"] = s.arclength ? 1.0 : 0.0;
    r.fields["fold"] = s.fold ? 1.0 : 0.0;
    r.note = to_string(s.orbit.stability) + " " + to_string(e.kind);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SweepRecord> scan_records(const TopologicalScan& scan) {
  std::vector<SweepRecord> out;
  for (const auto& s : scan.records) {
    SweepRecord r;
    r.value = s.value;
    r.fields["escaped"] = s.escaped ? 1.0 : 0.0;
    r.fields["attractor_boxes"] = static_cast<double>(s.attractor.size());
    r.fields["domain_boxes"] = static_cast<double>(s.domain.size());
    r.fields["repeller_boxes"] = static_cast<double>(s.repeller_boxes);
    r.fields["components"] = s.components;
    r.fields["collision_distance"] = s.collision_distance;
    r.fields["hausdorff_to_previous"] = s.hausdorff_to_previous;
    r.note = s.error;
    out.push_back(std::move(r));
  }
  return out;
}

void write_sweep_report(std::ostream& out, const SweepReport& report) {
  using nlohmann::json;
  json j;
  j["kind"] = report.kind;
  j["parameter"] = to_string(report.parameter);
  j["base"] = {{"a", report.base.a}, {"b", report.base.b}, {"eps", report.base.eps}};
  j["records"] = json::array();
  for (const auto& r : report.records) {
    json rec = {{"value", r.value}, {"note", r.note}};
    for (const auto& [k, v] : r.fields) rec[k] = v;
    j["records"].push_back(rec);
  }
  j["events"] = json::array();
  for (const auto& ev : report.events) j["events"].push_back(event_json(ev));
  j["errors"] = report.errors;
  detail::round_floats(j);
  out << j.dump(2) << '\n';
}

void write_events_csv(std::ostream& out, const std::vector<BifurcationEvent>& events) {
  out.precision(9);
  out << "parameter,kind,value,uncertainty\n";
  for (const auto& ev : events) {
    out << to_string(ev.parameter) << ',' << to_string(ev.kind) << ',' << ev.value << ',' << ev.uncertainty << '\n';
  }
}

void write_events_json(std::ostream& out, const std::vector<BifurcationEvent>& events) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& ev : events) j.push_back(event_json(ev));
  detail::round_floats(j);
  out << j.dump(2) << '\n';
}

}  // namespace noisebound
