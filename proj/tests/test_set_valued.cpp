#include <doctest.h>

#include <numbers>
#include <random>
#include <sstream>

#include "noisebound/set_valued.hpp"

using namespace noisebound;

namespace {

GridSpec unit_grid(int depth) { return GridSpec{{-1, -1}, {1, 1}, depth}; }

BoxSet random_set(const GridSpec& g, std::mt19937_64& rng, std::size_t count) {
  std::uniform_int_distribution<std::uint32_t> u(0, g.cells() - 1);
  std::vector<BoxIndex> m;
  for (std::size_t i = 0; i < count; ++i) m.push_back({u(rng), u(rng)});
  return BoxSet(g, m);
}

double brute_hausdorff(const BoxSet& a, const BoxSet& b) {
  auto directed = [](const BoxSet& p, const BoxSet& q) {
    double m = 0.0;
    for (const auto& x : p.members()) {
      double best = 1e300;
      for (const auto& y : q.members()) {
        best = std::min(best, distance(p.grid().center(x.ix, x.iy), q.grid().center(y.ix, y.iy)));
      }
      m = std::max(m, best);
    }
    return m;
  };
  return std::max(directed(a, b), directed(b, a));
}

}  // namespace

TEST_CASE("BoxSet basics") {
  const GridSpec g = unit_grid(3);
  const BoxSet s(g, {{3, 4}, {1, 2}, {3, 4}, {0, 7}});
  CHECK(s.size() == 3);
  CHECK(s.members().front() == BoxIndex{0, 7});
  CHECK(s.contains({1, 2}));
  CHECK(!s.contains({2, 1}));
  CHECK_THROWS_AS(BoxSet(g, {{8, 0}}), Error);
  CHECK(s.complement().size() == 64 - 3);
  CHECK(s.united(s.complement()) == BoxSet::full(g));
  CHECK(s.intersected(s.complement()).empty());
  CHECK(*s.locate({-1, -1}) == BoxIndex{0, 0});
  CHECK(*s.locate({1, 1}) == BoxIndex{7, 7});
  CHECK(!s.locate({1.01, 0}));
  CHECK_THROWS_AS((GridSpec{{1, 0}, {0, 1}, 3}).validate(), Error);
  CHECK_THROWS_AS((GridSpec{{0, 0}, {1, 1}, 25}).validate(), Error);
}

TEST_CASE("image cover saturates for a huge ball") {
  const GridSpec g = unit_grid(4);
  const AffineMap f = AffineMap::scaling(0.5);
  const BoxSet src(g, {{8, 8}});
  const auto img = image_cover(src, Params{0, 0.3, 5.0}, f, SamplingSpec{3, 0.0});
  CHECK(img.cover == BoxSet::full(g));
  CHECK(img.escaped);
}

TEST_CASE("image cover matches a brute-force probe") {
  const GridSpec g = unit_grid(7);
  const AffineMap f = AffineMap::scaling(0.5);
  const Params p{0, 0.3, 0.1};
  const SamplingSpec s = SamplingSpec{};
  const BoxSet src(g, {{64, 64}});
  const auto img = image_cover(src, p, f, s);
  CHECK(!img.escaped);

  // Union of the closed balls around the images of the 3 x 3 lattice.
  std::vector<Point2> centers;
  const double w = g.cell_width();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) centers.push_back(f.eval({w * i / 2, w * j / 2}, p));
  // Lattice cell images have diagonal 0.5 * diag / 2 and the map is affine.
  const double r = std::hypot(p.eps, 0.5 * g.cell_diagonal() / 2);
  const int probe = 8;
  std::size_t mismatches = 0;
  for (std::uint32_t ix = 0; ix < g.cells(); ++ix) {
    for (std::uint32_t iy = 0; iy < g.cells(); ++iy) {
      bool hit = false;
      const double x0 = g.lo.x + ix * w, y0 = g.lo.y + iy * w;
      for (int a = 0; a <= probe && !hit; ++a) {
        for (int b = 0; b <= probe && !hit; ++b) {
          const Point2 q{x0 + w * a / probe, y0 + w * b / probe};
          for (const auto& c : centers) hit = hit || distance(q, c) <= r;
        }
      }
      if (hit != img.cover.contains({ix, iy})) {
        // The probe lattice can only miss boxes clipped by a sliver of a disk.
        bool near = false;
        for (const auto& c : centers) {
          const double dx = std::max({0.0, x0 - c.x, c.x - (x0 + w)});
          const double dy = std::max({0.0, y0 - c.y, c.y - (y0 + w)});
          near = near || std::abs(std::hypot(dx, dy) - r) < w / probe;
        }
        if (!near) ++mismatches;
        CHECK(img.cover.contains({ix, iy}));
      }
    }
  }
  CHECK(mismatches == 0);
  // Radius of the covered disk: r + 0.5 * box radius, up to a box.
  const double expect = r + 0.5 * 0.5 * g.cell_diagonal();
  double far = 0.0;
  for (const auto& b : img.cover.members()) far = std::max(far, g.center(b.ix, b.iy).norm());
  CHECK(far <= expect + g.cell_diagonal());
  CHECK(far >= expect - g.cell_diagonal());
}

TEST_CASE("image cover is monotone") {
  const GridSpec g{{-2.5, -2.5}, {2.5, 2.5}, 6};
  const HenonMap h;
  const Params p{0.6, 0.3, 0.0625};
  const SamplingSpec s = SamplingSpec{};
  std::mt19937_64 rng(99);
  for (int t = 0; t < 50; ++t) {
    const BoxSet small = random_set(g, rng, 20);
    const BoxSet big = small.united(random_set(g, rng, 30));
    CHECK(image_cover(small, p, h, s).cover.is_subset_of(image_cover(big, p, h, s).cover));
  }
}

TEST_CASE("linear contraction attractor is the invariant disk") {
  const GridSpec g = unit_grid(8);
  const AffineMap f = AffineMap::scaling(0.5);
  const Params p{0, 0.3, 0.1};
  const SamplingSpec s = SamplingSpec{};
  const BoxSet a = minimal_attractor({0.3, 0.1}, p, f, g, s);
  CHECK(image_cover(a, p, f, s).cover == a);
  CHECK(count_components(a) == 1);

  // Reference cover: boxes whose centre lies in the disk of radius 0.2.
  std::vector<BoxIndex> ref;
  for (std::uint32_t ix = 0; ix < g.cells(); ++ix)
    for (std::uint32_t iy = 0; iy < g.cells(); ++iy)
      if (g.center(ix, iy).norm() <= 0.2) ref.push_back({ix, iy});
  CHECK(hausdorff_boxes(a, BoxSet(g, ref)) <= 2.0 * g.cell_diagonal());

  SUBCASE("domain keeps every box whose cover stays on the grid") {
    const BoxSet d = domain_of_attraction(a, p, f, s);
    CHECK(a.is_subset_of(d));
    for (std::uint32_t ix = 0; ix < g.cells(); ix += 5) {
      for (std::uint32_t iy = 0; iy < g.cells(); iy += 3) {
        const auto img = image_cover(BoxSet(g, {{ix, iy}}), p, f, s);
        CHECK(d.contains({ix, iy}) == !img.escaped);
      }
    }
    CHECK(dual_repeller(d).united(d) == BoxSet::full(g));
    CHECK(dual_repeller(d).intersected(d).empty());
  }
}

TEST_CASE("refinement never moves the linear attractor by more than a coarse diagonal") {
  const AffineMap f = AffineMap::scaling(0.5);
  const Params p{0, 0.3, 0.1};
  auto ref_cover = [](const GridSpec& g) {
    std::vector<BoxIndex> ref;
    for (std::uint32_t ix = 0; ix < g.cells(); ++ix)
      for (std::uint32_t iy = 0; iy < g.cells(); ++iy)
        if (g.center(ix, iy).norm() <= 0.2) ref.push_back({ix, iy});
    return BoxSet(g, ref);
  };
  double prev = -1.0;
  for (int depth = 5; depth <= 8; ++depth) {
    const GridSpec g = unit_grid(depth);
    const BoxSet a = minimal_attractor({0, 0}, p, f, g, SamplingSpec{});
    const double d = hausdorff_boxes(a, ref_cover(g));
    if (prev >= 0.0) CHECK(d <= prev + unit_grid(depth - 1).cell_diagonal());
    prev = d;
  }
}

TEST_CASE("domain of attraction is a least fixed point") {
  const GridSpec g{{-4, -4}, {4, 4}, 7};
  const HenonMap h;
  const Params p{0.3, 0.3, 0.6};
  const SamplingSpec s = SamplingSpec{};
  const BoxSet a = minimal_attractor({0.25, -0.45}, p, h, g, s);
  const BoxSet d = domain_of_attraction(a, p, h, s);
  CHECK(a.is_subset_of(d));
  const BoxSet rep = dual_repeller(d);
  CHECK(!rep.empty());

  const BoxSet collar = dilate(a, kDefaultCollar);
  CHECK(collar.is_subset_of(d));
  const BoxSet outside = d.intersected(collar.complement());
  REQUIRE(outside.size() > 20);

  // Every member outside the collar has its cover inside the domain.
  for (const auto& b : outside.members()) {
    const auto img = image_cover(BoxSet(g, {b}), p, h, s);
    CHECK(!img.escaped);
    CHECK(img.cover.is_subset_of(d));
  }
  // Removing such a member breaks the fixed-point property: its cover lies in
  // what is left, so the admission rule puts it back.
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> pick(0, outside.size() - 1);
  for (int t = 0; t < 20; ++t) {
    const BoxIndex b = outside.members()[pick(rng)];
    const BoxSet smaller = d.intersected(BoxSet(g, {b}).complement());
    CHECK(image_cover(BoxSet(g, {b}), p, h, s).cover.is_subset_of(smaller));
  }
  // No repeller box has a cover inside the domain.
  for (std::size_t i = 0; i < rep.size(); i += 7) {
    const auto img = image_cover(BoxSet(g, {rep.members()[i]}), p, h, s);
    CHECK((img.escaped || !img.cover.is_subset_of(d)));
  }
  CHECK_THROWS_AS(domain_of_attraction(a, p, h, s, -1), Error);
}

TEST_CASE("Hausdorff and collision distances") {
  const GridSpec g = unit_grid(6);
  const BoxSet a(g, {{10, 10}});
  const BoxSet b(g, {{17, 10}});
  CHECK(hausdorff_boxes(a, a) == 0.0);
  CHECK(hausdorff_boxes(a, b) == doctest::Approx(7 * g.cell_width()).epsilon(1e-12));
  CHECK(collision_distance(a, b) == doctest::Approx(7 * g.cell_width()).epsilon(1e-12));
  CHECK(collision_distance(a, a.united(b)) == 0.0);
  CHECK_THROWS_AS(hausdorff_boxes(a, BoxSet(g)), Error);
  CHECK_THROWS_AS(collision_distance(BoxSet(g), a), Error);

  std::mt19937_64 rng(12);
  const GridSpec g2{{-2, -1}, {3, 1}, 6};  // anisotropic cells
  for (int t = 0; t < 30; ++t) {
    const BoxSet x = random_set(g2, rng, 1 + t * 6);
    const BoxSet y = random_set(g2, rng, 200 - t * 6);
    CHECK(hausdorff_boxes(x, y) == doctest::Approx(brute_hausdorff(x, y)).epsilon(1e-12));
  }
}

TEST_CASE("dilation") {
  const GridSpec g = unit_grid(5);
  const BoxSet one(g, {{10, 10}});
  CHECK(dilate(one, 0) == one);
  CHECK(dilate(one, 1).size() == 5);
  CHECK(dilate(one, 2).size() == 13);
}

TEST_CASE("components and boundary") {
  const GridSpec g = unit_grid(4);
  CHECK(count_components(BoxSet(g)) == 0);
  CHECK(count_components(BoxSet(g, {{0, 0}, {1, 1}})) == 1);
  CHECK(count_components(BoxSet(g, {{0, 0}, {2, 0}})) == 2);
  CHECK(boundary_boxes(BoxSet::full(g)).size() == 4 * 16 - 4);
  std::vector<BoxIndex> block;
  for (std::uint32_t i = 4; i < 8; ++i)
    for (std::uint32_t j = 4; j < 8; ++j) block.push_back({i, j});
  CHECK(boundary_boxes(BoxSet(g, block)).size() == 12);
}

TEST_CASE("BoxSet CSV round trip") {
  const GridSpec g{{-2.5, -2.5}, {2.5, 2.5}, 5};
  std::mt19937_64 rng(1);
  const BoxSet s = random_set(g, rng, 40);
  std::stringstream ss;
  write_boxset_csv(ss, s);
  const std::string text = ss.str();
  CHECK(text.rfind("depth,xmin,ymin,xmax,ymax\n5,-2.5,-2.5,2.5,2.5\n", 0) == 0);
  CHECK(read_boxset_csv(ss) == s);
  std::stringstream bad("depth,xmin\n");
  CHECK_THROWS_AS(read_boxset_csv(bad), Error);
}

TEST_CASE("outer covers enclose every noisy image of a box") {
  const GridSpec g{{-2, -1}, {2, 1}, 7};
  const HenonMap h;
  const Params p{0.6, 0.3, 0.0625};
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::uint32_t> pick_x(20, 100), pick_y(30, 90);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k : {2, 3, 5}) {
    const SamplingSpec s{k};
    for (int t = 0; t < 40; ++t) {
      const BoxIndex b{pick_x(rng), pick_y(rng)};
      const auto img = image_cover(BoxSet(g, {b}), p, h, s);
      const BoxSet probe(g);
      for (int m = 0; m < 200; ++m) {
        const Point2 q{g.lo.x + (b.ix + u(rng)) * g.cell_width(), g.lo.y + (b.iy + u(rng)) * g.cell_height()};
        const double ang = 2.0 * std::numbers::pi * u(rng), rad = p.eps * std::sqrt(u(rng));
        // Points on the rim are the hardest to cover.
        const double r = m % 2 ? p.eps : rad;
        const Point2 z = h.eval(q, p) + Point2{r * std::cos(ang), r * std::sin(ang)};
        const auto at = probe.locate(z);
        REQUIRE(at);
        CHECK(img.cover.contains(*at));
      }
    }
  }
}

TEST_CASE("centre covers") {
  const GridSpec g = unit_grid(8);
  const AffineMap f = AffineMap::scaling(0.5);
  const Params p{0, 0.3, 0.1};
  SamplingSpec s;
  s.mode = CoverMode::centre;
  s.k = 1;
  CHECK_NOTHROW(s.validate());
  s.k = 0;
  CHECK_THROWS_AS(s.validate(), Error);
  s.k = 2;

  // A single box: exactly the boxes whose centres lie within eps of a sample image.
  const BoxIndex src{150, 90};
  const auto img = image_cover(BoxSet(g, {src}), p, f, s);
  std::vector<Point2> samples;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      samples.push_back(f.eval({g.lo.x + (src.ix + (i + 0.5) / 2) * g.cell_width(),
                                g.lo.y + (src.iy + (j + 0.5) / 2) * g.cell_height()},
                               p));
    }
  }
  std::size_t expected = 0;
  for (std::uint32_t ix = 0; ix < g.cells(); ++ix) {
    for (std::uint32_t iy = 0; iy < g.cells(); ++iy) {
      bool in = false;
      for (const auto& c : samples) in = in || distance(g.center(ix, iy), c) <= p.eps;
      expected += in;
      if (in != img.cover.contains({ix, iy})) {
        // Only centres on a rim to rounding can disagree.
        double gap = 1e300;
        for (const auto& c : samples) gap = std::min(gap, std::abs(distance(g.center(ix, iy), c) - p.eps));
        CHECK(gap < 1e-12);
      }
    }
  }
  CHECK(img.cover.size() == expected);

  // The invariant disk of radius 0.2 within one box diagonal.
  const BoxSet a = minimal_attractor({0.0, 0.0}, p, f, g, s);
  std::vector<BoxIndex> ref;
  for (std::uint32_t ix = 0; ix < g.cells(); ++ix)
    for (std::uint32_t iy = 0; iy < g.cells(); ++iy)
      if (g.center(ix, iy).norm() <= 0.2) ref.push_back({ix, iy});
  CHECK(hausdorff_boxes(a, BoxSet(g, ref)) <= g.cell_diagonal());
}
