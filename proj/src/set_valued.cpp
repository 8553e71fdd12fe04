#include "noisebound/set_valued.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#ifdef NOISEBOUND_HAVE_OPENMP
#include <omp.h>
#endif

namespace noisebound {

void GridSpec::validate() const {
  if (!(std::isfinite(lo.x) && std::isfinite(lo.y) && std::isfinite(hi.x) && std::isfinite(hi.y))) {
    throw Error(ErrorKind::invalid_argument, "grid corners must be finite");
  }
  if (!(lo.x < hi.x && lo.y < hi.y)) throw Error(ErrorKind::invalid_argument, "grid corners are not ordered");
  if (depth < 0 || depth > kMaxDepth) {
    throw Error(ErrorKind::invalid_argument, "grid depth must lie in [0, " + std::to_string(kMaxDepth) + "]");
  }
}

BoxSet::BoxSet(const GridSpec& grid, std::vector<BoxIndex> members) : grid_(grid), members_(std::move(members)) {
  const std::uint32_t n = grid_.cells();
  for (const auto& b : members_) {
    if (b.ix >= n || b.iy >= n) throw Error(ErrorKind::invalid_argument, "box index outside the grid");
  }
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
}

BoxSet BoxSet::full(const GridSpec& grid) {
  BoxSet s(grid);
  const std::uint32_t n = grid.cells();
  s.members_.reserve(static_cast<std::size_t>(n) * n);
  for (std::uint32_t ix = 0; ix < n; ++ix) {
    for (std::uint32_t iy = 0; iy < n; ++iy) s.members_.push_back({ix, iy});
  }
  return s;
}

bool BoxSet::contains(const BoxIndex& b) const {
  return std::binary_search(members_.begin(), members_.end(), b);
}

std::optional<BoxIndex> BoxSet::locate(const Point2& p) const {
  if (!(p.x >= grid_.lo.x && p.x <= grid_.hi.x && p.y >= grid_.lo.y && p.y <= grid_.hi.y)) return std::nullopt;
  const std::uint32_t n = grid_.cells();
  auto ix = static_cast<std::uint32_t>(std::min<double>(n - 1, std::floor((p.x - grid_.lo.x) / grid_.cell_width())));
  auto iy = static_cast<std::uint32_t>(std::min<double>(n - 1, std::floor((p.y - grid_.lo.y) / grid_.cell_height())));
  return BoxIndex{ix, iy};
}

namespace {

void require_same_grid(const BoxSet& a, const BoxSet& b) {
  if (!(a.grid() == b.grid())) throw Error(ErrorKind::invalid_argument, "box sets live on different grids");
}

void require_engine_depth(const GridSpec& g) {
  g.validate();
  if (g.depth > GridSpec::kMaxEngineDepth) {
    throw Error(ErrorKind::invalid_argument,
                "depth " + std::to_string(g.depth) + " exceeds the engine limit " +
                    std::to_string(GridSpec::kMaxEngineDepth));
  }
}

// Dense occupancy bitmap, row-major in iy (rows) then ix.
struct Bitmap {
  std::uint32_t n = 0;
  std::vector<std::uint8_t> bits;

  explicit Bitmap(std::uint32_t cells) : n(cells), bits(static_cast<std::size_t>(cells) * cells, 0) {}
  std::size_t at(std::uint32_t ix, std::uint32_t iy) const { return static_cast<std::size_t>(iy) * n + ix; }
  bool get(std::uint32_t ix, std::uint32_t iy) const { return bits[at(ix, iy)] != 0; }
  void set(std::uint32_t ix, std::uint32_t iy) { bits[at(ix, iy)] = 1; }

  static Bitmap from(const BoxSet& s) {
    Bitmap m(s.grid().cells());
    for (const auto& b : s.members()) m.set(b.ix, b.iy);
    return m;
  }
  BoxSet to_set(const GridSpec& g) const {
    std::vector<BoxIndex> out;
    for (std::uint32_t ix = 0; ix < n; ++ix) {
      for (std::uint32_t iy = 0; iy < n; ++iy) {
        if (get(ix, iy)) out.push_back({ix, iy});
      }
    }
    return BoxSet(g, std::move(out));
  }
};

// Union of equal closed disks rasterized as per-row spans; overlapping spans
// in a row are merged so each box is visited once. Stops early when fn
// returns false.
// With centres set, a box counts when its centre lies in the union instead of
// when it meets the union.
template <class Fn>
void for_each_union_span(const GridSpec& g, const std::vector<Point2>& centers, double r, bool centres, Fn&& fn) {
  const double w = g.cell_width(), h = g.cell_height();
  const auto n = static_cast<long long>(g.cells());
  double ylo = std::numeric_limits<double>::infinity(), yhi = -ylo;
  for (const auto& c : centers) {
    if (!std::isfinite(c.x) || !std::isfinite(c.y)) continue;
    ylo = std::min(ylo, c.y);
    yhi = std::max(yhi, c.y);
  }
  if (!(ylo <= yhi)) return;
  const long long iy0 = std::max(static_cast<long long>(std::floor((ylo - r - g.lo.y) / h)), 0LL);
  const long long iy1 = std::min(static_cast<long long>(std::floor((yhi + r - g.lo.y) / h)), n - 1);
  std::vector<std::pair<long long, long long>> spans;
  spans.reserve(centers.size());
  for (long long iy = iy0; iy <= iy1; ++iy) {
    const double y0 = g.lo.y + iy * h, y1 = y0 + h, yc = y0 + 0.5 * h;
    spans.clear();
    for (const auto& c : centers) {
      if (!std::isfinite(c.x) || !std::isfinite(c.y)) continue;
      const double dy = centres ? std::abs(yc - c.y) : std::max({0.0, y0 - c.y, c.y - y1});
      if (dy > r) continue;
      const double half = std::sqrt(r * r - dy * dy);
      const double shift = centres ? 0.5 : 0.0;
      const double fa = centres ? std::ceil((c.x - half - g.lo.x) / w - shift) : std::floor((c.x - half - g.lo.x) / w);
      const double fb = std::floor((c.x + half - g.lo.x) / w - shift);
      const long long a = std::max(static_cast<long long>(std::max(fa, -1.0)), 0LL);
      const long long b = std::min(static_cast<long long>(std::min(fb, static_cast<double>(n))), n - 1);
      if (a <= b) spans.emplace_back(a, b);
    }
    if (spans.empty()) continue;
    long long max_lo = spans[0].first, min_hi = spans[0].second, lo = max_lo, hi = min_hi;
    for (const auto& [a, b] : spans) {
      max_lo = std::max(max_lo, a);
      min_hi = std::min(min_hi, b);
      lo = std::min(lo, a);
      hi = std::max(hi, b);
    }
    if (max_lo <= min_hi + 1) {
      // All spans share a box or touch it: the union is one span.
      if (!fn(static_cast<std::uint32_t>(iy), static_cast<std::uint32_t>(lo), static_cast<std::uint32_t>(hi))) return;
      continue;
    }
    std::sort(spans.begin(), spans.end());
    long long a = spans[0].first, b = spans[0].second;
    for (std::size_t k = 1; k < spans.size(); ++k) {
      if (spans[k].first <= b + 1) {
        b = std::max(b, spans[k].second);
      } else {
        if (!fn(static_cast<std::uint32_t>(iy), static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b))) return;
        a = spans[k].first;
        b = spans[k].second;
      }
    }
    if (!fn(static_cast<std::uint32_t>(iy), static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b))) return;
  }
}

bool disk_escapes(const GridSpec& g, const Point2& c, double r) {
  return !(c.x - r >= g.lo.x && c.x + r <= g.hi.x && c.y - r >= g.lo.y && c.y + r <= g.hi.y);
}

// Images f(p) of the k x k lattice of one box (index i * k + j for the
// sample at column i, row j) and the dilation radius shared by all of them.
double box_images(const GridSpec& g, const Params& params, const PlanarMap& map, const SamplingSpec& s,
                  std::uint32_t ix, std::uint32_t iy, std::vector<Point2>& out) {
  out.clear();
  const int k = s.k;
  const double w = g.cell_width(), h = g.cell_height();
  const double x0 = g.lo.x + ix * w, y0 = g.lo.y + iy * h;
  if (s.mode == CoverMode::centre) {
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) out.push_back(map.eval({x0 + w * (i + 0.5) / k, y0 + h * (j + 0.5) / k}, params));
    }
    return params.eps + s.bloat;
  }
  double curvature = 0.0;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const Point2 p{x0 + w * i / (k - 1), y0 + h * j / (k - 1)};
      out.push_back(map.eval(p, params));
      if (s.pad) {
        const auto [dx, dy] = map.jacobian_derivative(p, params);
        curvature = std::max(curvature, dx.spectral_norm() + dy.spectral_norm());
      }
    }
  }
  if (!s.pad) return params.eps + s.bloat;
  // Both triangles of every lattice cell share the diagonal (i, j)-(i+1, j+1).
  double spread = 0.0;
  auto at = [&](int i, int j) { return out[static_cast<std::size_t>(i * k + j)]; };
  for (int i = 0; i + 1 < k; ++i) {
    for (int j = 0; j + 1 < k; ++j) {
      const Point2 a = at(i, j), b = at(i + 1, j), c = at(i, j + 1), d = at(i + 1, j + 1);
      spread = std::max({spread, distance(a, b), distance(a, c), distance(a, d), distance(b, d), distance(c, d)});
    }
  }
  const double cell = std::hypot(w, h) / (k - 1);
  const double interp = 0.5 * curvature * cell * cell;
  return std::hypot(params.eps, spread) + interp + s.bloat;
}

// Per-row difference counts: painting a span costs O(1); resolve() turns the
// counts into occupancy.
struct SpanCounter {
  std::uint32_t n = 0;
  std::vector<std::int32_t> diff;

  explicit SpanCounter(std::uint32_t cells) : n(cells), diff(static_cast<std::size_t>(cells) * (cells + 1), 0) {}
  void add(std::uint32_t iy, std::uint32_t a, std::uint32_t b) {
    const std::size_t row = static_cast<std::size_t>(iy) * (n + 1);
    ++diff[row + a];
    --diff[row + b + 1];
  }
  void merge(const SpanCounter& o) {
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] += o.diff[i];
  }
  void resolve(Bitmap& dst) const {
    for (std::uint32_t iy = 0; iy < n; ++iy) {
      const std::int32_t* row = diff.data() + static_cast<std::size_t>(iy) * (n + 1);
      std::int32_t run = 0;
      for (std::uint32_t ix = 0; ix < n; ++ix) {
        run += row[ix];
        if (run > 0) dst.set(ix, iy);
      }
    }
  }
};

// Rasterizes the image of the listed boxes into dst; returns the escape flag.
bool rasterize_images(const GridSpec& g, const std::vector<BoxIndex>& boxes, const Params& params,
                      const PlanarMap& map, const SamplingSpec& s, Bitmap& dst) {
  bool escaped = false;
  const auto count = static_cast<long long>(boxes.size());
  auto paint = [&](SpanCounter& acc, std::vector<Point2>& imgs, long long i) {
    const double r = box_images(g, params, map, s, boxes[i].ix, boxes[i].iy, imgs);
    bool esc = false;
    for (const auto& c : imgs) esc = esc || disk_escapes(g, c, r);
    for_each_union_span(g, imgs, r, s.mode == CoverMode::centre, [&](std::uint32_t iy, std::uint32_t a, std::uint32_t b) {
      acc.add(iy, a, b);
      return true;
    });
    return esc;
  };
  SpanCounter total(dst.n);
#ifdef NOISEBOUND_HAVE_OPENMP
#pragma omp parallel reduction(|| : escaped)
  {
    SpanCounter local(dst.n);
    std::vector<Point2> imgs;
#pragma omp for schedule(static)
    for (long long i = 0; i < count; ++i) escaped = paint(local, imgs, i) || escaped;
#pragma omp critical
    total.merge(local);
  }
#else
  std::vector<Point2> imgs;
  for (long long i = 0; i < count; ++i) escaped = paint(total, imgs, i) || escaped;
#endif
  total.resolve(dst);
  return escaped;
}

}  // namespace

BoxSet BoxSet::complement() const {
  const Bitmap m = Bitmap::from(*this);
  std::vector<BoxIndex> out;
  const std::uint32_t n = grid_.cells();
  for (std::uint32_t ix = 0; ix < n; ++ix) {
    for (std::uint32_t iy = 0; iy < n; ++iy) {
      if (!m.get(ix, iy)) out.push_back({ix, iy});
    }
  }
  BoxSet s(grid_);
  s.members_ = std::move(out);
  return s;
}

BoxSet BoxSet::united(const BoxSet& other) const {
  require_same_grid(*this, other);
  BoxSet s(grid_);
  std::set_union(members_.begin(), members_.end(), other.members_.begin(), other.members_.end(),
                 std::back_inserter(s.members_));
  return s;
}

BoxSet BoxSet::intersected(const BoxSet& other) const {
  require_same_grid(*this, other);
  BoxSet s(grid_);
  std::set_intersection(members_.begin(), members_.end(), other.members_.begin(), other.members_.end(),
                        std::back_inserter(s.members_));
  return s;
}

bool BoxSet::is_subset_of(const BoxSet& other) const {
  require_same_grid(*this, other);
  return std::includes(other.members_.begin(), other.members_.end(), members_.begin(), members_.end());
}

void SamplingSpec::validate() const {
  if (k < (mode == CoverMode::outer ? 2 : 1)) {
    throw Error(ErrorKind::invalid_argument, "sample lattice needs k >= 2 (k >= 1 for centre covers)");
  }
  if (!(bloat >= 0.0) || !std::isfinite(bloat)) throw Error(ErrorKind::invalid_argument, "bloat must be >= 0");
}

ImageCover image_cover(const BoxSet& src, const Params& params, const PlanarMap& map, const SamplingSpec& s) {
  const GridSpec& g = src.grid();
  require_engine_depth(g);
  s.validate();
  Bitmap dst(g.cells());
  const bool escaped = rasterize_images(g, src.members(), params, map, s, dst);
  return {dst.to_set(g), escaped};
}

BoxSet minimal_attractor(const Point2& seed, const Params& params, const PlanarMap& map, const GridSpec& grid,
                         const SamplingSpec& s, const AttractorOptions& opts) {
  require_engine_depth(grid);
  s.validate();
  params.validate();
  const std::size_t max_iter = opts.max_iterations ? opts.max_iterations : 10 * static_cast<std::size_t>(grid.cells());

  std::vector<Point2> orbit;
  try {
    orbit = sample_orbit(seed, params, map, std::max<std::size_t>(opts.transient, 1), opts.rng_seed,
                         GuardBox{grid.lo, grid.hi});
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::divergence) throw Error(ErrorKind::escape, "seed orbit left the grid");
    throw;
  }
  BoxSet probe(grid);
  const auto tail = probe.locate(orbit.back());
  if (!tail) throw Error(ErrorKind::escape, "orbit tail outside the grid");

  // Forward closure from the tail box.
  Bitmap reached(grid.cells());
  reached.set(tail->ix, tail->iy);
  std::vector<BoxIndex> frontier{*tail};
  std::size_t iter = 0;
  while (!frontier.empty()) {
    if (++iter > max_iter) throw Error(ErrorKind::no_convergence, "forward closure did not stabilise");
    Bitmap img(grid.cells());
    if (rasterize_images(grid, frontier, params, map, s, img)) {
      throw Error(ErrorKind::escape, "image cover left the grid");
    }
    std::vector<BoxIndex> next;
    for (std::size_t i = 0; i < img.bits.size(); ++i) {
      if (img.bits[i] && !reached.bits[i]) {
        reached.bits[i] = 1;
        next.push_back({static_cast<std::uint32_t>(i % grid.cells()), static_cast<std::uint32_t>(i / grid.cells())});
      }
    }
    frontier = std::move(next);
  }

  // The closure is forward invariant; image iteration from it decreases to
  // the least invariant set inside it.
  BoxSet current = reached.to_set(grid);
  for (;;) {
    if (++iter > max_iter) throw Error(ErrorKind::no_convergence, "attractor iteration did not stabilise");
    ImageCover img = image_cover(current, params, map, s);
    if (img.escaped) throw Error(ErrorKind::escape, "image cover left the grid");
    if (img.cover == current) return current;
    current = std::move(img.cover);
  }
}

namespace {

// Exact squared Euclidean distance transform (Felzenszwalb-Huttenlocher) of
// the box centres of a set, in physical units, evaluated at every box centre.
std::vector<double> squared_distance_field(const BoxSet& set) {
  const GridSpec& g = set.grid();
  const std::uint32_t n = g.cells();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> f(static_cast<std::size_t>(n) * n, inf);
  for (const auto& b : set.members()) f[static_cast<std::size_t>(b.iy) * n + b.ix] = 0.0;

  std::vector<double> d(n), z(n + 1), buf(n);
  std::vector<std::uint32_t> v(n);
  auto pass = [&](double spacing, auto get, auto put) {
    const double s2 = spacing * spacing;
    for (std::uint32_t q = 0; q < n; ++q) buf[q] = get(q);
    int k = -1;
    for (std::uint32_t q = 0; q < n; ++q) {
      if (buf[q] == inf) continue;
      const double fq = buf[q] / s2 + static_cast<double>(q) * q;
      while (k >= 0) {
        const double fv = buf[v[k]] / s2 + static_cast<double>(v[k]) * v[k];
        const double sq = (fq - fv) / (2.0 * (static_cast<double>(q) - v[k]));
        if (sq <= z[k]) {
          --k;
        } else {
          break;
        }
      }
      ++k;
      v[k] = q;
      if (k == 0) {
        z[k] = -inf;
      } else {
        const double fv = buf[v[k - 1]] / s2 + static_cast<double>(v[k - 1]) * v[k - 1];
        z[k] = (fq - fv) / (2.0 * (static_cast<double>(q) - v[k - 1]));
      }
      z[k + 1] = inf;
    }
    if (k < 0) {
      for (std::uint32_t q = 0; q < n; ++q) put(q, inf);
      return;
    }
    int j = 0;
    for (std::uint32_t q = 0; q < n; ++q) {
      while (z[j + 1] < q) ++j;
      const double dq = static_cast<double>(q) - v[j];
      put(q, buf[v[j]] + dq * dq * s2);
    }
  };
  const double w = g.cell_width(), h = g.cell_height();
  for (std::uint32_t iy = 0; iy < n; ++iy) {
    double* row = f.data() + static_cast<std::size_t>(iy) * n;
    pass(w, [&](std::uint32_t q) { return row[q]; }, [&](std::uint32_t q, double val) { d[q] = val; });
    std::copy(d.begin(), d.end(), row);
  }
  for (std::uint32_t ix = 0; ix < n; ++ix) {
    pass(h, [&](std::uint32_t q) { return f[static_cast<std::size_t>(q) * n + ix]; },
         [&](std::uint32_t q, double val) { d[q] = val; });
    for (std::uint32_t q = 0; q < n; ++q) f[static_cast<std::size_t>(q) * n + ix] = d[q];
  }
  return f;
}

void require_nonempty(const BoxSet& a, const BoxSet& b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::empty_input, "distance between box sets needs nonempty sets");
}

}  // namespace

BoxSet dilate(const BoxSet& set, int margin) {
  if (margin <= 0 || set.empty()) return set;
  const GridSpec& g = set.grid();
  const std::uint32_t n = g.cells();
  const auto field = squared_distance_field(set);
  const double reach = margin * std::min(g.cell_width(), g.cell_height()) * (1.0 + 1e-12);
  std::vector<BoxIndex> out;
  for (std::uint32_t ix = 0; ix < n; ++ix) {
    for (std::uint32_t iy = 0; iy < n; ++iy) {
      if (field[static_cast<std::size_t>(iy) * n + ix] <= reach * reach) out.push_back({ix, iy});
    }
  }
  return BoxSet(g, std::move(out));
}

BoxSet domain_of_attraction(const BoxSet& attractor, const Params& params, const PlanarMap& map,
                            const SamplingSpec& s, int collar) {
  const GridSpec& g = attractor.grid();
  require_engine_depth(g);
  s.validate();
  if (attractor.empty()) throw Error(ErrorKind::empty_input, "attractor cover is empty");
  if (collar < 0) throw Error(ErrorKind::invalid_argument, "collar must be nonnegative");
  const std::uint32_t n = g.cells();

  Bitmap in(n);
  const BoxSet start = dilate(attractor, collar);
  for (const auto& b : start.members()) in.set(b.ix, b.iy);

  // Candidates: boxes outside the attractor whose sample balls stay on the grid.
  std::vector<BoxIndex> pending;
  std::vector<std::vector<Point2>> centers;
  std::vector<double> radius;
  {
    std::vector<Point2> imgs;
    for (std::uint32_t ix = 0; ix < n; ++ix) {
      for (std::uint32_t iy = 0; iy < n; ++iy) {
        if (in.get(ix, iy)) continue;
        const double r = box_images(g, params, map, s, ix, iy, imgs);
        bool esc = false;
        for (const auto& c : imgs) esc = esc || !std::isfinite(c.x) || !std::isfinite(c.y) || disk_escapes(g, c, r);
        if (esc) continue;
        pending.push_back({ix, iy});
        centers.push_back(imgs);
        radius.push_back(r);
      }
    }
  }

  std::vector<std::uint32_t> prefix(static_cast<std::size_t>(n) * (n + 1));
  for (;;) {
    for (std::uint32_t iy = 0; iy < n; ++iy) {
      std::uint32_t* row = prefix.data() + static_cast<std::size_t>(iy) * (n + 1);
      row[0] = 0;
      for (std::uint32_t ix = 0; ix < n; ++ix) row[ix + 1] = row[ix] + in.bits[in.at(ix, iy)];
    }
    auto inside = [&](const std::vector<Point2>& cs, double r) {
      bool ok = true;
      for_each_union_span(g, cs, r, s.mode == CoverMode::centre, [&](std::uint32_t iy, std::uint32_t a, std::uint32_t b) {
        const std::uint32_t* row = prefix.data() + static_cast<std::size_t>(iy) * (n + 1);
        ok = row[b + 1] - row[a] == b - a + 1;
        return ok;
      });
      return ok;
    };

    std::vector<char> accept(pending.size(), 0);
    const auto count = static_cast<long long>(pending.size());
#ifdef NOISEBOUND_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 256)
#endif
    for (long long i = 0; i < count; ++i) {
      accept[i] = inside(centers[i], radius[i]);
    }

    std::size_t added = 0, w = 0;
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (accept[i]) {
        in.set(pending[i].ix, pending[i].iy);
        ++added;
      } else {
        if (w != i) {
          pending[w] = pending[i];
          centers[w] = std::move(centers[i]);
          radius[w] = radius[i];
        }
        ++w;
      }
    }
    pending.resize(w);
    centers.resize(w);
    radius.resize(w);
    if (added == 0) break;
  }
  return in.to_set(g);
}

BoxSet dual_repeller(const BoxSet& domain) { return domain.complement(); }


double hausdorff_boxes(const BoxSet& a, const BoxSet& b) {
  require_same_grid(a, b);
  require_nonempty(a, b);
  const std::uint32_t n = a.grid().cells();
  const auto da = squared_distance_field(a);
  const auto db = squared_distance_field(b);
  double m = 0.0;
  for (const auto& x : a.members()) m = std::max(m, db[static_cast<std::size_t>(x.iy) * n + x.ix]);
  for (const auto& x : b.members()) m = std::max(m, da[static_cast<std::size_t>(x.iy) * n + x.ix]);
  return std::sqrt(m);
}

double collision_distance(const BoxSet& attractor, const BoxSet& repeller) {
  require_same_grid(attractor, repeller);
  require_nonempty(attractor, repeller);
  const std::uint32_t n = attractor.grid().cells();
  const auto dr = squared_distance_field(repeller);
  double m = std::numeric_limits<double>::infinity();
  for (const auto& x : attractor.members()) m = std::min(m, dr[static_cast<std::size_t>(x.iy) * n + x.ix]);
  return std::sqrt(m);
}

int count_components(const BoxSet& set) {
  const std::uint32_t n = set.grid().cells();
  if (set.empty()) return 0;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(n) * n, 2);
  for (const auto& b : set.members()) seen[static_cast<std::size_t>(b.iy) * n + b.ix] = 0;
  int comps = 0;
  std::vector<BoxIndex> stack;
  for (const auto& start : set.members()) {
    auto& s0 = seen[static_cast<std::size_t>(start.iy) * n + start.ix];
    if (s0 != 0) continue;
    ++comps;
    s0 = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const BoxIndex b = stack.back();
      stack.pop_back();
      for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          const long long x = static_cast<long long>(b.ix) + dx, y = static_cast<long long>(b.iy) + dy;
          if (x < 0 || y < 0 || x >= n || y >= n) continue;
          auto& st = seen[static_cast<std::size_t>(y) * n + static_cast<std::size_t>(x)];
          if (st == 0) {
            st = 1;
            stack.push_back({static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y)});
          }
        }
      }
    }
  }
  return comps;
}

BoxSet boundary_boxes(const BoxSet& set) {
  const std::uint32_t n = set.grid().cells();
  std::vector<std::uint8_t> m(static_cast<std::size_t>(n) * n, 0);
  for (const auto& b : set.members()) m[static_cast<std::size_t>(b.iy) * n + b.ix] = 1;
  auto member = [&](long long x, long long y) {
    return x >= 0 && y >= 0 && x < n && y < n && m[static_cast<std::size_t>(y) * n + static_cast<std::size_t>(x)];
  };
  std::vector<BoxIndex> out;
  for (const auto& b : set.members()) {
    const long long x = b.ix, y = b.iy;
    if (!member(x - 1, y) || !member(x + 1, y) || !member(x, y - 1) || !member(x, y + 1)) out.push_back(b);
  }
  return BoxSet(set.grid(), std::move(out));
}

void write_boxset_csv(std::ostream& out, const BoxSet& set) {
  const GridSpec& g = set.grid();
  const auto old = out.precision(9);
  out << "depth,xmin,ymin,xmax,ymax\n";
  out << g.depth << ',' << g.lo.x << ',' << g.lo.y << ',' << g.hi.x << ',' << g.hi.y << '\n';
  for (const auto& b : set.members()) out << b.ix << ',' << b.iy << '\n';
  out.precision(old);
}

BoxSet read_boxset_csv(std::istream& in) {
  std::string line;
  auto fail = [](const std::string& what) { return Error(ErrorKind::io, "box set CSV: " + what); };
  if (!std::getline(in, line) || line != "depth,xmin,ymin,xmax,ymax") throw fail("bad header");
  if (!std::getline(in, line)) throw fail("missing grid line");
  GridSpec g;
  {
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    if (!(ss >> g.depth >> g.lo.x >> g.lo.y >> g.hi.x >> g.hi.y)) throw fail("malformed grid line");
  }
  g.validate();
  std::vector<BoxIndex> members;
  int lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw fail("line " + std::to_string(lineno) + ": expected ix,iy");
    try {
      members.push_back({static_cast<std::uint32_t>(std::stoul(line.substr(0, comma))),
                         static_cast<std::uint32_t>(std::stoul(line.substr(comma + 1)))});
    } catch (const std::exception&) {
      throw fail("line " + std::to_string(lineno) + ": bad index");
    }
  }
  return BoxSet(g, std::move(members));
}

}  // namespace noisebound
