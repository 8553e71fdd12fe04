#include "noisebound/singularities.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include <json.hpp>

#include "json_util.hpp"

namespace noisebound {

namespace {

// Error-free transformations for expansion arithmetic.
void two_sum(double a, double b, double& s, double& e) {
  s = a + b;
  const double bv = s - a;
  const double av = s - bv;
  e = (a - av) + (b - bv);
}

void two_product(double a, double b, double& p, double& e) {
  p = a * b;
  e = std::fma(a, b, -p);
}

// Adds q to a nonoverlapping expansion ordered by increasing magnitude.
void grow_expansion(std::vector<double>& e, double q) {
  std::vector<double> out;
  out.reserve(e.size() + 1);
  for (double c : e) {
    double s, err;
    two_sum(q, c, s, err);
    if (err != 0.0) out.push_back(err);
    q = s;
  }
  if (q != 0.0) out.push_back(q);
  e.swap(out);
}

int exact_orient(const Point2& a, const Point2& b, const Point2& c) {
  // a.x b.y - a.x c.y - a.y b.x + a.y c.x + b.x c.y - b.y c.x
  const double terms[6][3] = {{a.x, b.y, 1.0}, {a.x, c.y, -1.0}, {a.y, b.x, -1.0},
                              {a.y, c.x, 1.0}, {b.x, c.y, 1.0}, {b.y, c.x, -1.0}};
  std::vector<double> e;
  for (const auto& t : terms) {
    double p, err;
    two_product(t[0], t[1], p, err);
    grow_expansion(e, t[2] * err);
    grow_expansion(e, t[2] * p);
  }
  for (auto it = e.rbegin(); it != e.rend(); ++it) {
    if (*it > 0.0) return 1;
    if (*it < 0.0) return -1;
  }
  return 0;
}

double cross(const Point2& u, const Point2& v) { return u.x * v.y - u.y * v.x; }

bool collinear_overlap(const Point2& a0, const Point2& a1, const Point2& b0, const Point2& b1) {
  // Called only when all four points are collinear; compare along the
  // dominant axis of the first segment.
  const bool use_x = std::abs(a1.x - a0.x) >= std::abs(a1.y - a0.y);
  auto key = [use_x](const Point2& p) { return use_x ? p.x : p.y; };
  const double lo_a = std::min(key(a0), key(a1)), hi_a = std::max(key(a0), key(a1));
  const double lo_b = std::min(key(b0), key(b1)), hi_b = std::max(key(b0), key(b1));
  return std::min(hi_a, hi_b) > std::max(lo_a, lo_b);
}

enum class PairKind { none, cross, overlap };

PairKind classify(const Point2& a0, const Point2& a1, const Point2& b0, const Point2& b1) {
  if (std::max(a0.x, a1.x) < std::min(b0.x, b1.x) || std::max(b0.x, b1.x) < std::min(a0.x, a1.x) ||
      std::max(a0.y, a1.y) < std::min(b0.y, b1.y) || std::max(b0.y, b1.y) < std::min(a0.y, a1.y)) {
    return PairKind::none;
  }
  const int o1 = orient2d(a0, a1, b0), o2 = orient2d(a0, a1, b1);
  if (o1 == 0 && o2 == 0) {
    return collinear_overlap(a0, a1, b0, b1) ? PairKind::overlap : PairKind::none;
  }
  if (o1 * o2 >= 0) return PairKind::none;
  const int o3 = orient2d(b0, b1, a0), o4 = orient2d(b0, b1, a1);
  return o3 * o4 < 0 ? PairKind::cross : PairKind::none;
}

Intersection make_intersection(const Polyline2& poly, std::size_t i, std::size_t j) {
  const Point2 &p = poly.points[i], &p1 = poly.points[i + 1];
  const Point2 &q = poly.points[j], &q1 = poly.points[j + 1];
  const Point2 r = p1 - p, s = q1 - q;
  const double den = cross(r, s);
  Intersection x;
  x.seg_i = i;
  x.seg_j = j;
  x.t_i = std::clamp(cross(q - p, s) / den, 0.0, 1.0);
  x.t_j = std::clamp(cross(q - p, r) / den, 0.0, 1.0);
  x.point = p + x.t_i * r;
  x.arc_i = poly.arc[i] + x.t_i * r.norm();
  x.arc_j = poly.arc[j] + x.t_j * s.norm();
  return x;
}

void check_input(const Polyline2& poly) {
  if (poly.points.size() < 4) throw Error(ErrorKind::invalid_argument, "self-intersection needs at least 4 points");
  if (poly.arc.size() != poly.points.size()) throw Error(ErrorKind::invalid_argument, "polyline arc lengths missing");
}

void sort_results(std::vector<Intersection>& xs, std::vector<SegmentOverlap>* overlaps) {
  std::sort(xs.begin(), xs.end(), [](const Intersection& a, const Intersection& b) {
    return std::pair(a.seg_i, a.seg_j) < std::pair(b.seg_i, b.seg_j);
  });
  if (overlaps) {
    std::sort(overlaps->begin(), overlaps->end(), [](const SegmentOverlap& a, const SegmentOverlap& b) {
      return std::pair(a.seg_i, a.seg_j) < std::pair(b.seg_i, b.seg_j);
    });
  }
}

std::pair<double, double> least_squares_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  return {my - slope * mx, slope};
}

}  // namespace

int orient2d(const Point2& a, const Point2& b, const Point2& c) {
  const double left = (a.x - c.x) * (b.y - c.y);
  const double right = (a.y - c.y) * (b.x - c.x);
  const double det = left - right;
  // Static filter: the rounded determinant has the right sign when it
  // exceeds this bound.
  constexpr double eps = std::numeric_limits<double>::epsilon() * 0.5;
  const double bound = (3.0 + 16.0 * eps) * eps * (std::abs(left) + std::abs(right));
  if (det > bound) return 1;
  if (-det > bound) return -1;
  return exact_orient(a, b, c);
}

bool segments_cross(const Point2& a0, const Point2& a1, const Point2& b0, const Point2& b1) {
  return classify(a0, a1, b0, b1) == PairKind::cross;
}

std::vector<Intersection> self_intersections_brute_force(const Polyline2& poly,
                                                         std::vector<SegmentOverlap>* overlaps) {
  check_input(poly);
  if (overlaps) overlaps->clear();
  std::vector<Intersection> out;
  const std::size_t n = poly.points.size() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      const PairKind k = classify(poly.points[i], poly.points[i + 1], poly.points[j], poly.points[j + 1]);
      if (k == PairKind::cross) out.push_back(make_intersection(poly, i, j));
      else if (k == PairKind::overlap && overlaps) overlaps->push_back({i, j});
    }
  }
  return out;
}

std::vector<Intersection> self_intersections(const Polyline2& poly, std::vector<SegmentOverlap>* overlaps) {
  check_input(poly);
  if (overlaps) overlaps->clear();
  const auto& pts = poly.points;
  const std::size_t n = pts.size() - 1;

  double xmin = pts[0].x, xmax = pts[0].x, ymin = pts[0].y, ymax = pts[0].y;
  std::vector<double> lengths(n);
  for (std::size_t i = 0; i <= n; ++i) {
    xmin = std::min(xmin, pts[i].x);
    xmax = std::max(xmax, pts[i].x);
    ymin = std::min(ymin, pts[i].y);
    ymax = std::max(ymax, pts[i].y);
    if (i < n) lengths[i] = distance(pts[i], pts[i + 1]);
  }
  // Cells of about two median segment lengths, but never so small that the
  // grid would need more than about 4n cells across the bounding box.
  std::vector<double> sorted = lengths;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 2), sorted.end());
  const double extent = std::max(xmax - xmin, ymax - ymin);
  const double floor_size = extent / (2.0 * std::sqrt(static_cast<double>(n)));
  double cell = std::max(2.0 * sorted[n / 2], floor_size);
  if (!(cell > 0.0)) cell = 1.0;

  auto cell_of = [&](double v, double lo) { return static_cast<std::int64_t>(std::floor((v - lo) / cell)); };
  auto key = [](std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(cx) << 32) ^ static_cast<std::uint64_t>(cy & 0xffffffff);
  };
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x0 = cell_of(std::min(pts[i].x, pts[i + 1].x), xmin);
    const auto x1 = cell_of(std::max(pts[i].x, pts[i + 1].x), xmin);
    const auto y0 = cell_of(std::min(pts[i].y, pts[i + 1].y), ymin);
    const auto y1 = cell_of(std::max(pts[i].y, pts[i + 1].y), ymin);
    for (auto cx = x0; cx <= x1; ++cx) {
      for (auto cy = y0; cy <= y1; ++cy) grid[key(cx, cy)].push_back(i);
    }
  }

  std::vector<Intersection> out;
  for (const auto& [k, segs] : grid) {
    for (std::size_t a = 0; a < segs.size(); ++a) {
      for (std::size_t b = a + 1; b < segs.size(); ++b) {
        const std::size_t i = std::min(segs[a], segs[b]), j = std::max(segs[a], segs[b]);
        if (j < i + 2) continue;
        const Point2 &p0 = pts[i], &p1 = pts[i + 1], &q0 = pts[j], &q1 = pts[j + 1];
        // Test each pair once: in the cell holding the lower-left corner of
        // the overlap of the two bounding boxes.
        const double ox = std::max(std::min(p0.x, p1.x), std::min(q0.x, q1.x));
        const double oy = std::max(std::min(p0.y, p1.y), std::min(q0.y, q1.y));
        if (ox > std::min(std::max(p0.x, p1.x), std::max(q0.x, q1.x)) ||
            oy > std::min(std::max(p0.y, p1.y), std::max(q0.y, q1.y))) {
          continue;
        }
        if (key(cell_of(ox, xmin), cell_of(oy, ymin)) != k) continue;
        const PairKind kind = classify(p0, p1, q0, q1);
        if (kind == PairKind::cross) out.push_back(make_intersection(poly, i, j));
        else if (kind == PairKind::overlap && overlaps) overlaps->push_back({i, j});
      }
    }
  }
  sort_results(out, overlaps);
  return out;
}

std::vector<Wedge> detect_wedges(const Polyline2& poly, const std::optional<Point2>& reference) {
  std::vector<Wedge> out;
  if (poly.points.size() < 4) return out;
  for (const Intersection& x : self_intersections(poly)) {
    Wedge w;
    w.apex = x;
    w.lobe_span = x.arc_j - x.arc_i;
    if (reference) w.distance = distance(x.point, *reference);
    if (w.lobe_span > 0.0) out.push_back(w);
  }
  if (reference) {
    std::stable_sort(out.begin(), out.end(), [](const Wedge& a, const Wedge& b) { return a.distance > b.distance; });
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i);
  return out;
}

std::vector<Wedge> detect_wedges(const ManifoldBranch& branch, const std::optional<Point2>& reference,
                                 double min_sharpness) {
  // Projection without repeated vertices, remembering the branch index of
  // each kept vertex.
  std::vector<Point2> pts;
  std::vector<std::size_t> source;
  for (std::size_t i = 0; i < branch.points.size(); ++i) {
    const Point2 p{branch.points[i][0], branch.points[i][1]};
    if (!pts.empty() && p == pts.back()) continue;
    pts.push_back(p);
    source.push_back(i);
  }
  std::vector<Wedge> out;
  if (pts.size() < 4) return out;
  const Polyline2 poly = Polyline2::from_points(pts);
  auto normal = [&](std::size_t seg, double t) {
    const double th = (1.0 - t) * branch.points[source[seg]][2] + t * branch.points[source[seg + 1]][2];
    return Point2{std::cos(th), std::sin(th)};
  };
  for (const Intersection& x : self_intersections(poly)) {
    const Point2 ti = poly.points[x.seg_i + 1] - poly.points[x.seg_i];
    const Point2 tj = poly.points[x.seg_j + 1] - poly.points[x.seg_j];
    const double si = -ti.dot(normal(x.seg_j, x.t_j)) / ti.norm();
    const double sj = tj.dot(normal(x.seg_i, x.t_i)) / tj.norm();
    const double sharp = std::min(si, sj);
    if (!(sharp > min_sharpness)) continue;
    Wedge w;
    w.apex = x;
    w.lobe_span = x.arc_j - x.arc_i;
    w.sharpness = sharp;
    const std::size_t b = source[x.seg_i];
    w.level = branch.level.size() == branch.points.size()
                  ? (1.0 - x.t_i) * branch.level[b] + x.t_i * branch.level[source[x.seg_i + 1]]
                  : 0.0;
    if (reference) w.distance = distance(x.point, *reference);
    out.push_back(w);
  }
  if (reference) {
    std::stable_sort(out.begin(), out.end(), [](const Wedge& a, const Wedge& b) { return a.distance > b.distance; });
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = static_cast<int>(i);
  return out;
}

std::vector<Wedge> wedges_near(const std::vector<Wedge>& wedges, const Point2& centre, double radius) {
  std::vector<Wedge> out;
  for (const Wedge& w : wedges) {
    if (distance(w.apex.point, centre) <= radius) out.push_back(w);
  }
  return out;
}

CascadeFit detect_cascade(const std::vector<Wedge>& wedges, const Point2& accumulation, double residual_limit) {
  if (wedges.size() < 3) throw Error(ErrorKind::insufficient_data, "a cascade needs at least 3 wedges");
  CascadeFit fit;
  fit.accumulation = accumulation;
  fit.wedges = wedges;
  for (Wedge& w : fit.wedges) w.distance = distance(w.apex.point, accumulation);
  std::sort(fit.wedges.begin(), fit.wedges.end(), [](const Wedge& a, const Wedge& b) {
    if (a.distance != b.distance) return a.distance > b.distance;
    return std::pair(a.apex.seg_i, a.apex.seg_j) < std::pair(b.apex.seg_i, b.apex.seg_j);
  });
  std::vector<double> k, logd;
  for (std::size_t i = 0; i < fit.wedges.size(); ++i) {
    fit.wedges[i].rank = static_cast<int>(i);
    if (!(fit.wedges[i].distance > 0.0)) throw Error(ErrorKind::invalid_argument, "wedge apex at the accumulation point");
    k.push_back(static_cast<double>(i));
    logd.push_back(std::log(fit.wedges[i].distance));
  }
  const auto [b0, b1] = least_squares_line(k, logd);
  fit.ratio = std::exp(b1);
  double ss = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) ss += std::pow(logd[i] - (b0 + b1 * k[i]), 2);
  fit.geometry_residual = std::sqrt(ss / static_cast<double>(k.size()));
  fit.geometric = fit.geometry_residual <= residual_limit && fit.ratio < 1.0;
  return fit;
}

double accumulation_parameter(double a0, double a1, double c) {
  if (!(c < 0.0)) throw Error(ErrorKind::divergent_series, "decay exponent c must be negative");
  return a1 - (a0 - a1) / (std::exp(-c) - 1.0);
}

CascadeFit scaling_fit(const std::vector<double>& a) {
  if (a.size() < 3) throw Error(ErrorKind::insufficient_data, "scaling fit needs at least 3 parameters");
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    if (!(a[i] > a[i + 1])) throw Error(ErrorKind::non_monotone_input, "parameters must strictly decrease");
  }
  std::vector<double> idx, logd;
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    idx.push_back(static_cast<double>(i));
    logd.push_back(std::log(a[i] - a[i + 1]));
  }
  const auto [b0, b1] = least_squares_line(idx, logd);
  CascadeFit fit;
  fit.disappearances = a;
  fit.intercept = b0;
  fit.c = b1;
  fit.a0 = a[0];
  fit.a1 = a[1];
  double ss = 0.0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const double r = std::abs(logd[i] - (b0 + b1 * idx[i]));
    ss += r * r;
    fit.max_residual = std::max(fit.max_residual, r);
  }
  fit.residual = std::sqrt(ss / static_cast<double>(idx.size()));
  fit.a_inf = accumulation_parameter(fit.a0, fit.a1, fit.c);
  return fit;
}

CascadeFit scaling_fit(const std::vector<std::pair<int, double>>& indexed) {
  auto sorted = indexed;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> a;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].first != static_cast<int>(i)) {
      throw Error(ErrorKind::invalid_argument, "indices must run 0, 1, 2, ... without gaps");
    }
    a.push_back(sorted[i].second);
  }
  return scaling_fit(a);
}

void write_singularity_report(std::ostream& out, const std::vector<Intersection>& intersections,
                              const std::vector<Wedge>& wedges, const std::optional<CascadeFit>& cascade,
                              const std::optional<CascadeFit>& scaling) {
  using nlohmann::json;
  auto point = [](const Point2& p) { return json::array({p.x, p.y}); };
  auto crossing = [&](const Intersection& x) {
    return json{{"point", point(x.point)},
                {"segments", json::array({x.seg_i, x.seg_j})},
                {"arc", json::array({x.arc_i, x.arc_j})}};
  };
  json j;
  j["intersections"] = json::array();
  for (const auto& x : intersections) j["intersections"].push_back(crossing(x));
  j["wedges"] = json::array();
  for (const auto& w : wedges) {
    j["wedges"].push_back({{"apex", point(w.apex.point)}, {"rank", w.rank}, {"lobe_span", w.lobe_span}});
  }
  j["cascade"] = nullptr;
  if (cascade) {
    j["cascade"] = {{"accumulation", point(cascade->accumulation)},
                    {"wedges", cascade->wedges.size()},
                    {"ratio", cascade->ratio},
                    {"residual", cascade->geometry_residual},
                    {"geometric", cascade->geometric}};
  }
  j["scaling_fit"] = nullptr;
  if (scaling) {
    j["scaling_fit"] = {{"c", scaling->c},         {"a0", scaling->a0},
                        {"a1", scaling->a1},       {"a_inf", scaling->a_inf},
                        {"residual", scaling->residual}, {"disappearances", scaling->disappearances}};
  }
  detail::round_floats(j);
  out << j.dump(2) << '\n';
}

}  // namespace noisebound
