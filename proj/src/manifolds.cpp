#include "noisebound/manifolds.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "json_util.hpp"

namespace noisebound {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double chart_norm(const Vec3& v, double w) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + w * w * v[2] * v[2]); }

// Shifts the angle of z by a multiple of 2 pi so it lies within pi of ref.
Vec3 lift_near(Vec3 z, double ref_theta) {
  z[2] = ref_theta + wrap_angle(z[2] - ref_theta);
  return z;
}

std::shared_ptr<const PlanarMap> borrow(const PlanarMap& map) {
  return std::shared_ptr<const PlanarMap>(std::shared_ptr<void>(), &map);
}

// Closest points between segments [p0, p1] and [q0, q1]; returns (s, t).
std::pair<double, double> segment_params(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1) {
  const Vec3 d1 = p1 - p0, d2 = q1 - q0, r = p0 - q0;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  constexpr double tiny = 1e-300;
  double s = 0.0, t = 0.0;
  if (a <= tiny && e <= tiny) return {0.0, 0.0};
  if (a <= tiny) return {0.0, std::clamp(f / e, 0.0, 1.0)};
  const double c = d1.dot(r);
  if (e <= tiny) return {std::clamp(-c / a, 0.0, 1.0), 0.0};
  const double b = d1.dot(d2), denom = a * e - b * b;
  s = denom > 0.0 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
  t = (b * s + f) / e;
  if (t < 0.0) {
    t = 0.0;
    s = std::clamp(-c / a, 0.0, 1.0);
  } else if (t > 1.0) {
    t = 1.0;
    s = std::clamp((b - c) / a, 0.0, 1.0);
  }
  return {s, t};
}

struct Aabb {
  Vec3 lo = Vec3::Constant(kInf);
  Vec3 hi = Vec3::Constant(-kInf);

  void grow(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void grow(const Aabb& o) {
    lo = lo.cwiseMin(o.lo);
    hi = hi.cwiseMax(o.hi);
  }
  double distance(const Aabb& o) const {
    const Vec3 gap = (lo - o.hi).cwiseMax(o.lo - hi).cwiseMax(Vec3::Zero());
    return gap.norm();
  }
};

struct Hit {
  double distance = kInf;
  std::size_t seg = 0;
  double s = 0.0, t = 0.0;
  double shift = 0.0;  // scaled angle shift applied to the query
};

// Bounding-volume hierarchy over segments in scaled chart coordinates
// (x, y, w theta) with lifted angles.
class SegmentTree {
public:
  SegmentTree(const std::vector<const std::vector<Vec3>*>& polylines, double w) : w_(w) {
    for (std::size_t c = 0; c < polylines.size(); ++c) {
      const auto& pl = *polylines[c];
      if (pl.size() == 1) add(c, 0, scaled(pl[0]), scaled(pl[0]));
      for (std::size_t i = 0; i + 1 < pl.size(); ++i) add(c, i, scaled(pl[i]), scaled(pl[i + 1]));
    }
    if (segs_.empty()) throw Error(ErrorKind::empty_input, "no segments to search");
    std::vector<std::size_t> idx(segs_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    order_.reserve(idx.size());
    build(idx, 0, idx.size());
  }

  Vec3 scaled(const Vec3& v) const { return {v[0], v[1], w_ * v[2]}; }
  double period() const { return w_ * kTwoPi; }
  const Aabb& bounds() const { return nodes_[0].box; }

  struct Segment {
    Vec3 a, b;
    Aabb box;
    std::size_t chain = 0;
    std::size_t index = 0;
  };
  const Segment& segment(std::size_t i) const { return segs_[i]; }

  // Nearest segment to the scaled query segment [q0, q1], over every theta sheet.
  Hit nearest(const Vec3& q0, const Vec3& q1, Hit best = {}) const {
    const double per = period();
    const double qlo = std::min(q0[2], q1[2]), qhi = std::max(q0[2], q1[2]);
    const double half = 0.5 * per;
    const auto& root = bounds();
    const long kmin = static_cast<long>(std::floor((root.lo[2] - half - qhi) / per));
    const long kmax = static_cast<long>(std::ceil((root.hi[2] + half - qlo) / per));
    for (long k = kmin; k <= kmax; ++k) {
      const Vec3 shift(0.0, 0.0, k * per);
      query(q0 + shift, q1 + shift, k * per, best);
    }
    return best;
  }

private:
  struct Node {
    Aabb box;
    std::size_t left = 0, right = 0;   // children when internal
    std::size_t first = 0, count = 0;  // range in order_ when a leaf
  };

  void add(std::size_t chain, std::size_t index, const Vec3& a, const Vec3& b) {
    Segment s{a, b, {}, chain, index};
    s.box.grow(a);
    s.box.grow(b);
    segs_.push_back(s);
  }

  std::size_t build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi) {
    const std::size_t id = nodes_.size();
    nodes_.emplace_back();
    Aabb box;
    for (std::size_t i = lo; i < hi; ++i) box.grow(segs_[idx[i]].box);
    nodes_[id].box = box;
    if (hi - lo <= 4) {
      nodes_[id].first = order_.size();
      nodes_[id].count = hi - lo;
      for (std::size_t i = lo; i < hi; ++i) order_.push_back(idx[i]);
      return id;
    }
    const Vec3 ext = box.hi - box.lo;
    int axis = 0;
    if (ext[1] > ext[axis]) axis = 1;
    if (ext[2] > ext[axis]) axis = 2;
    const std::size_t mid = (lo + hi) / 2;
    std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi, [&](std::size_t a, std::size_t b) {
      return segs_[a].box.lo[axis] + segs_[a].box.hi[axis] < segs_[b].box.lo[axis] + segs_[b].box.hi[axis];
    });
    const std::size_t l = build(idx, lo, mid);
    const std::size_t r = build(idx, mid, hi);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  void query(const Vec3& q0, const Vec3& q1, double shift, Hit& best) const {
    Aabb qb;
    qb.grow(q0);
    qb.grow(q1);
    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
      const Node& n = nodes_[stack.back()];
      stack.pop_back();
      if (n.box.distance(qb) >= best.distance) continue;
      if (n.count > 0) {
        for (std::size_t i = n.first; i < n.first + n.count; ++i) {
          const Segment& s = segs_[order_[i]];
          const auto [u, v] = segment_params(q0, q1, s.a, s.b);
          const double d = ((q0 + u * (q1 - q0)) - (s.a + v * (s.b - s.a))).norm();
          if (d < best.distance) best = {d, order_[i], u, v, shift};
        }
        continue;
      }
      const double dl = nodes_[n.left].box.distance(qb), dr = nodes_[n.right].box.distance(qb);
      if (dl < dr) {
        stack.push_back(n.right);
        stack.push_back(n.left);
      } else {
        stack.push_back(n.left);
        stack.push_back(n.right);
      }
    }
  }

  double w_;
  std::vector<Segment> segs_;
  std::vector<Node> nodes_;
  std::vector<std::size_t> order_;
};

Vec3 unit_or_zero(const Vec3& v) {
  const double n = v.norm();
  return n > 0.0 ? Vec3(v / n) : Vec3::Zero();
}

struct EigenDirection {
  double value = 0.0;
  Vec3 vector = Vec3::Zero();
};

// The single real eigenvalue of m that is expanding (modulus > 1) or
// contracting (modulus < 1), with its eigenvector normalised in the chart
// metric and oriented so that its first nonzero component is positive.
EigenDirection isolated_eigen(const Jacobian3& m, bool expanding, double w) {
  Eigen::EigenSolver<Jacobian3> solver(m);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::ill_conditioned, "eigen decomposition failed");
  const auto vals = solver.eigenvalues();
  int found = -1, count = 0;
  for (int i = 0; i < 3; ++i) {
    const double mod = std::abs(vals[i]);
    if (expanding ? mod > 1.0 : mod < 1.0) {
      ++count;
      found = i;
    }
  }
  if (count != 1) {
    throw Error(ErrorKind::not_a_saddle, std::string("need exactly one ") + (expanding ? "expanding" : "contracting") +
                                             " multiplier, found " + std::to_string(count));
  }
  if (std::abs(vals[found].imag()) > 1e-12 * std::max(1.0, std::abs(vals[found]))) {
    throw Error(ErrorKind::not_a_saddle, "isolated multiplier is not real");
  }
  Vec3 v = solver.eigenvectors().col(found).real();
  const double n = chart_norm(v, w);
  if (!(n > 0.0)) throw Error(ErrorKind::ill_conditioned, "degenerate eigenvector");
  v /= n;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(v[i]) > 1e-14) {
      if (v[i] < 0.0) v = -v;
      break;
    }
  }
  return {vals[found].real(), v};
}

ManifoldBranch grow_branch(const PeriodicOrbit& orbit, const ChartMap& beta, const GrowthConfig& cfg, Side side,
                           std::size_t base_index, const std::vector<BoundaryPoint>& targets, ManifoldKind kind) {
  cfg.validate();
  if (orbit.points.empty()) throw Error(ErrorKind::empty_input, "orbit has no points");
  if (base_index >= orbit.points.size()) throw Error(ErrorKind::invalid_argument, "base index out of range");
  const double w = cfg.theta_weight;
  const bool unstable = kind == ManifoldKind::unstable;
  const int period = static_cast<int>(orbit.points.size());

  const Jacobian3 m = orbit_monodromy(beta, orbit.points, base_index);
  const EigenDirection dir = isolated_eigen(m, unstable, w);
  // Growth factor of the map actually iterated (beta^period or its inverse).
  double lambda = unstable ? dir.value : 1.0 / dir.value;
  int steps = period;
  if (lambda < 0.0) {
    lambda *= lambda;
    steps *= 2;
  }

  ManifoldBranch br;
  br.base = orbit;
  br.base_index = base_index;
  br.side = side;
  br.kind = kind;
  br.config = cfg;
  br.eigenvalue = dir.value;
  br.eigenvector = dir.vector;
  br.steps_per_iterate = steps;

  auto grow_map = [&](const Vec3& z) {
    BoundaryPoint p = BoundaryPoint::from_chart(z);
    for (int i = 0; i < steps; ++i) p = unstable ? beta.apply(p) : beta.apply_inverse(p);
    const Vec3 c = p.chart();
    if (!c.allFinite()) throw Error(ErrorKind::divergence, "growth map produced a non-finite point");
    return c;
  };

  const Vec3 z0 = orbit.points[base_index].chart();
  const Vec3 v = (side == Side::plus ? 1.0 : -1.0) * dir.vector;
  // Fundamental domain [delta0, lambda delta0] along the eigenvector.
  const double span = cfg.delta0 * (lambda - 1.0);
  const auto seeds = static_cast<std::size_t>(std::max(10.0, std::ceil(span / (0.5 * cfg.max_step))));
  auto& pts = br.points;
  auto& arc = br.arc;
  auto& level = br.level;
  for (std::size_t j = 0; j <= seeds; ++j) {
    const double t = static_cast<double>(j) / static_cast<double>(seeds);
    const double r = 1.0 + (lambda - 1.0) * t;
    pts.push_back(z0 + cfg.delta0 * r * v);
    arc.push_back(j == 0 ? 0.0 : arc.back() + chart_norm(pts[j] - pts[j - 1], w));
    level.push_back(std::log(r) / std::log(lambda));
  }

  std::vector<Vec3> lifted_targets;
  for (const auto& t : targets) lifted_targets.push_back(t.chart());
  auto reached = [&](const Vec3& p) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < lifted_targets.size(); ++i) {
      if (chart_norm(lift_near(lifted_targets[i], p[2]) - p, w) <= cfg.target_tol) return i;
    }
    return std::nullopt;
  };

  // sigma is a fractional vertex index on the branch; the image of the point
  // at sigma is the current front.
  auto interp = [&](double sigma) {
    const auto j = static_cast<std::size_t>(std::floor(sigma));
    if (j + 1 >= pts.size()) return pts.back();
    const double t = sigma - static_cast<double>(j);
    return Vec3((1.0 - t) * pts[j] + t * pts[j + 1]);
  };
  auto interp_level = [&](double sigma) {
    const auto j = static_cast<std::size_t>(std::floor(sigma));
    if (j + 1 >= level.size()) return level.back();
    const double t = sigma - static_cast<double>(j);
    return (1.0 - t) * level[j] + t * level[j + 1];
  };

  double sigma = 0.0, dsigma = 1.0;
  br.termination = Termination::max_arc;
  while (true) {
    if (pts.size() >= cfg.max_points) {
      br.termination = Termination::max_points;
      break;
    }
    if (arc.back() >= cfg.max_arc) {
      br.termination = Termination::max_arc;
      break;
    }
    Vec3 cand;
    double step = 0.0;
    bool collapsed = false, failed = false;
    while (true) {
      const Vec3 pre = interp(sigma + dsigma);
      if (chart_norm(pre - interp(sigma), w) < cfg.min_step && dsigma < 1.0) {
        collapsed = true;
        break;
      }
      try {
        cand = lift_near(grow_map(pre), pts.back()[2]);
      } catch (const Error&) {
        failed = true;
        break;
      }
      step = chart_norm(cand - pts.back(), w);
      bool ok = step <= cfg.max_step;
      if (ok && pts.size() >= 2 && step > 10.0 * cfg.min_step) {
        const Vec3 t1 = pts.back() - pts[pts.size() - 2];
        const Vec3 t2 = cand - pts.back();
        const double c = t1.dot(t2) / std::max(t1.norm() * t2.norm(), 1e-300);
        ok = std::acos(std::clamp(c, -1.0, 1.0)) <= cfg.max_turn;
      }
      if (ok) break;
      dsigma *= 0.5;
    }
    if (collapsed || failed) {
      br.termination = collapsed ? Termination::step_collapse : Termination::map_failure;
      br.truncated = true;
      break;
    }
    sigma += dsigma;
    pts.push_back(cand);
    arc.push_back(arc.back() + step);
    level.push_back(interp_level(sigma) + 1.0);
    if (step < 0.25 * cfg.max_step) dsigma = std::min(1.5 * dsigma, 1.0);
    if (const auto hit = reached(cand)) {
      const Vec3 t = lift_near(lifted_targets[*hit], cand[2]);
      const double gap = chart_norm(t - cand, w);
      if (gap > 0.0) {
        pts.push_back(t);
        arc.push_back(arc.back() + gap);
        level.push_back(level.back());
      }
      br.termination = Termination::reached_target;
      br.reached_target = *hit;
      break;
    }
  }
  return br;
}

ManifoldBranch grow_for_planar(const PeriodicOrbit& orbit, const Params& params, const PlanarMap& map,
                               const GrowthConfig& cfg, Side side, std::size_t base_index,
                               const std::vector<BoundaryPoint>& targets, ManifoldKind kind) {
  const BoundaryMap beta(borrow(map), params);
  ManifoldBranch br = grow_branch(orbit, beta, cfg, side, base_index, targets, kind);
  br.params = params;
  return br;
}

}  // namespace

std::string to_string(ManifoldKind k) { return k == ManifoldKind::unstable ? "unstable" : "stable"; }
std::string to_string(Side s) { return s == Side::plus ? "plus" : "minus"; }
std::string to_string(Termination t) {
  switch (t) {
    case Termination::max_arc: return "max_arc";
    case Termination::max_points: return "max_points";
    case Termination::reached_target: return "reached_target";
    case Termination::step_collapse: return "step_collapse";
    case Termination::map_failure: return "map_failure";
  }
  return "unknown";
}

void GrowthConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::invalid_argument, "growth config: " + what); };
  if (!(delta0 >= 1e-8) || !std::isfinite(delta0)) bad("delta0 must be at least 1e-8");
  if (!(min_step > 0.0) || !(min_step <= max_step) || !std::isfinite(max_step)) bad("need 0 < min_step <= max_step");
  if (!(max_arc > 0.0)) bad("max_arc must be positive");
  if (max_points < 2) bad("max_points must be at least 2");
  if (!(max_turn > 0.0) || !(max_turn < std::numbers::pi)) bad("max_turn must lie in (0, pi)");
  if (!(theta_weight > 0.0) || !std::isfinite(theta_weight)) bad("theta_weight must be positive");
  if (!(target_tol >= 0.0)) bad("target_tol must be nonnegative");
}

ManifoldBranch grow_unstable(const PeriodicOrbit& orbit, const ChartMap& beta, const GrowthConfig& cfg, Side side,
                             std::size_t base_index, const std::vector<BoundaryPoint>& targets) {
  return grow_branch(orbit, beta, cfg, side, base_index, targets, ManifoldKind::unstable);
}

ManifoldBranch grow_unstable(const PeriodicOrbit& orbit, const Params& params, const PlanarMap& map,
                             const GrowthConfig& cfg, Side side, std::size_t base_index,
                             const std::vector<BoundaryPoint>& targets) {
  return grow_for_planar(orbit, params, map, cfg, side, base_index, targets, ManifoldKind::unstable);
}

ManifoldBranch grow_stable(const PeriodicOrbit& orbit, const ChartMap& beta, const GrowthConfig& cfg, Side side,
                           std::size_t base_index, const std::vector<BoundaryPoint>& targets) {
  return grow_branch(orbit, beta, cfg, side, base_index, targets, ManifoldKind::stable);
}

ManifoldBranch grow_stable(const PeriodicOrbit& orbit, const Params& params, const PlanarMap& map,
                           const GrowthConfig& cfg, Side side, std::size_t base_index,
                           const std::vector<BoundaryPoint>& targets) {
  return grow_for_planar(orbit, params, map, cfg, side, base_index, targets, ManifoldKind::stable);
}

std::vector<ManifoldBranch> grow_all(ManifoldKind kind, const PeriodicOrbit& orbit, const ChartMap& beta,
                                     const GrowthConfig& cfg, const std::vector<BoundaryPoint>& targets) {
  std::vector<ManifoldBranch> out;
  for (std::size_t i = 0; i < orbit.points.size(); ++i) {
    for (Side s : {Side::plus, Side::minus}) out.push_back(grow_branch(orbit, beta, cfg, s, i, targets, kind));
  }
  return out;
}

std::vector<ManifoldBranch> grow_all(ManifoldKind kind, const PeriodicOrbit& orbit, const Params& params,
                                     const PlanarMap& map, const GrowthConfig& cfg,
                                     const std::vector<BoundaryPoint>& targets) {
  const BoundaryMap beta(borrow(map), params);
  auto out = grow_all(kind, orbit, beta, cfg, targets);
  for (auto& br : out) br.params = params;
  return out;
}

Polyline2 Polyline2::from_points(const std::vector<Point2>& pts) {
  Polyline2 out;
  for (const auto& p : pts) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw Error(ErrorKind::invalid_argument, "non-finite vertex");
    if (!out.points.empty() && p == out.points.back()) continue;
    out.arc.push_back(out.points.empty() ? 0.0 : out.arc.back() + distance(out.points.back(), p));
    out.points.push_back(p);
  }
  return out;
}

Polyline2 project(const ManifoldBranch& branch) {
  std::vector<Point2> pts;
  pts.reserve(branch.points.size());
  for (const auto& z : branch.points) pts.push_back({z[0], z[1]});
  return Polyline2::from_points(pts);
}

std::vector<Polyline2> prune_noncontributing(const Polyline2& proj, const BoxSet& cover, double tol) {
  const GridSpec& g = cover.grid();
  if (tol <= 0.0) tol = 1.5 * g.cell_diagonal();
  const BoxSet boundary = boundary_boxes(cover);
  const long n = g.cells();
  std::vector<char> mark(static_cast<std::size_t>(n) * n, 0);
  for (const auto& b : boundary.members()) mark[static_cast<std::size_t>(b.iy) * n + b.ix] = 1;
  const double cw = g.cell_width(), ch = g.cell_height();
  const long rx = static_cast<long>(std::ceil(tol / cw)) + 1, ry = static_cast<long>(std::ceil(tol / ch)) + 1;

  auto near_boundary = [&](const Point2& p) {
    const long cx = static_cast<long>(std::floor((p.x - g.lo.x) / cw));
    const long cy = static_cast<long>(std::floor((p.y - g.lo.y) / ch));
    const long x0 = std::max(0L, cx - rx), x1 = std::min(n - 1, cx + rx);
    const long y0 = std::max(0L, cy - ry), y1 = std::min(n - 1, cy + ry);
    for (long iy = y0; iy <= y1; ++iy) {
      for (long ix = x0; ix <= x1; ++ix) {
        if (!mark[static_cast<std::size_t>(iy) * n + ix]) continue;
        const double lx = g.lo.x + ix * cw, ly = g.lo.y + iy * ch;
        const double dx = std::max({lx - p.x, 0.0, p.x - (lx + cw)});
        const double dy = std::max({ly - p.y, 0.0, p.y - (ly + ch)});
        if (std::hypot(dx, dy) <= tol) return true;
      }
    }
    return false;
  };

  std::vector<Polyline2> out;
  std::vector<Point2> run;
  auto flush = [&] {
    if (run.size() >= 2) out.push_back(Polyline2::from_points(run));
    run.clear();
  };
  for (const auto& p : proj.points) {
    if (near_boundary(p)) {
      run.push_back(p);
    } else {
      flush();
    }
  }
  flush();
  if (out.empty()) throw Error(ErrorKind::empty_input, "no part of the projection lies near the cover boundary");
  return out;
}

double distance_to_polyline(const Vec3& q, const std::vector<Vec3>& poly, double theta_weight) {
  const SegmentTree tree({&poly}, theta_weight);
  const Vec3 s = tree.scaled(q);
  return tree.nearest(s, s).distance;
}

double bundle_invariance_residual(const std::vector<std::vector<Vec3>>& polylines, const ChartMap& beta,
                                  double theta_weight, std::size_t stride) {
  if (polylines.empty()) throw Error(ErrorKind::empty_input, "no polylines");
  stride = std::max<std::size_t>(stride, 1);
  std::vector<const std::vector<Vec3>*> refs;
  for (const auto& p : polylines) {
    if (p.empty()) throw Error(ErrorKind::empty_input, "empty polyline");
    refs.push_back(&p);
  }
  const SegmentTree tree(refs, theta_weight);
  double worst = 0.0;
  for (const auto& pl : polylines) {
    for (std::size_t i = 0; i < pl.size(); i += stride) {
      const Vec3 img = tree.scaled(beta.apply(BoundaryPoint::from_chart(pl[i])).chart());
      if (!img.allFinite()) return kInf;
      worst = std::max(worst, tree.nearest(img, img).distance);
    }
  }
  return worst;
}

double bundle_invariance_residual(const std::vector<ManifoldBranch>& branches, const ChartMap& beta,
                                  std::size_t stride) {
  if (branches.empty()) throw Error(ErrorKind::empty_input, "no branches");
  std::vector<std::vector<Vec3>> polys;
  for (const auto& b : branches) polys.push_back(b.points);
  return bundle_invariance_residual(polys, beta, branches.front().config.theta_weight, stride);
}

double bundle_invariance_residual(const std::vector<ManifoldBranch>& branches, const Params& params,
                                  const PlanarMap& map, std::size_t stride) {
  const BoundaryMap beta(borrow(map), params);
  return bundle_invariance_residual(branches, beta, stride);
}

ClosestApproach manifold_min_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b, double theta_weight) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::empty_input, "manifold_min_distance needs two nonempty polylines");
  const SegmentTree tree({&b}, theta_weight);
  Hit best;
  std::size_t best_a = 0;
  const std::size_t na = a.size() == 1 ? 1 : a.size() - 1;
  for (std::size_t i = 0; i < na; ++i) {
    const Vec3 p0 = tree.scaled(a[i]), p1 = tree.scaled(a[std::min(i + 1, a.size() - 1)]);
    const Hit h = tree.nearest(p0, p1, best);
    if (h.distance < best.distance) {
      best = h;
      best_a = i;
    }
  }
  const auto& seg = tree.segment(best.seg);
  const Vec3 a0 = a[best_a], a1 = a[std::min(best_a + 1, a.size() - 1)];
  const Vec3 b0 = b[seg.index], b1 = b[std::min(seg.index + 1, b.size() - 1)];
  ClosestApproach out;
  out.distance = best.distance;
  out.segment_a = best_a;
  out.segment_b = seg.index;
  out.on_a = a0 + best.s * (a1 - a0);
  out.on_b = lift_near(b0 + best.t * (b1 - b0), out.on_a[2]);
  out.tangent_a = unit_or_zero(a1 - a0);
  out.tangent_b = unit_or_zero(b1 - b0);
  return out;
}

ClosestApproach manifold_min_distance(const ManifoldBranch& a, const ManifoldBranch& b) {
  return manifold_min_distance(a.points, b.points, a.config.theta_weight);
}

void write_manifold_csv(std::ostream& out, const ManifoldBranch& branch) {
  out.precision(9);
  out << "s,x,y,theta\n";
  for (std::size_t i = 0; i < branch.points.size(); ++i) {
    const auto& z = branch.points[i];
    out << branch.arc[i] << ',' << z[0] << ',' << z[1] << ',' << wrap_angle(z[2]) << '\n';
  }
}

void write_manifold_sidecar(std::ostream& out, const ManifoldBranch& branch) {
  using nlohmann::json;
  json orbit = json::array();
  for (const auto& p : branch.base.points) orbit.push_back({p.pos.x, p.pos.y, p.theta});
  auto cplx = [](std::complex<double> c) { return json::array({c.real(), c.imag()}); };
  const auto& e = branch.base.eigen;
  json j = {
      {"kind", to_string(branch.kind)},
      {"side", to_string(branch.side)},
      {"base_index", branch.base_index},
      {"period", branch.base.period},
      {"base_orbit", orbit},
      {"orbit_eigenvalues", json::array({cplx(e.lambda1), cplx(e.lambda2), cplx(e.lambda3)})},
      {"stability", to_string(branch.base.stability)},
      {"growth_eigenvalue", branch.eigenvalue},
      {"eigenvector", {branch.eigenvector[0], branch.eigenvector[1], branch.eigenvector[2]}},
      {"steps_per_iterate", branch.steps_per_iterate},
      {"points", branch.points.size()},
      {"arc_length", branch.arc.empty() ? 0.0 : branch.arc.back()},
      {"termination", to_string(branch.termination)},
      {"truncated", branch.truncated},
      {"config",
       {{"delta0", branch.config.delta0},
        {"max_arc", branch.config.max_arc},
        {"max_points", branch.config.max_points},
        {"min_step", branch.config.min_step},
        {"max_step", branch.config.max_step},
        {"max_turn", branch.config.max_turn},
        {"theta_weight", branch.config.theta_weight},
        {"target_tol", branch.config.target_tol}}},
  };
  if (branch.reached_target) j["reached_target"] = *branch.reached_target;
  if (branch.params) j["params"] = {{"a", branch.params->a}, {"b", branch.params->b}, {"eps", branch.params->eps}};
  detail::round_floats(j);
  out << j.dump(2) << '\n';
}

void write_polyline_csv(std::ostream& out, const Polyline2& poly) {
  out.precision(9);
  out << "s,x,y\n";
  for (std::size_t i = 0; i < poly.points.size(); ++i) {
    out << poly.arc[i] << ',' << poly.points[i].x << ',' << poly.points[i].y << '\n';
  }
}

}  // namespace noisebound
