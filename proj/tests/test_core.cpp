#include <doctest.h>

#include <random>

#include "noisebound/core.hpp"

using namespace noisebound;

namespace {

const Params kP{0.6, 0.3, 0.0625};

bool close(const Point2& a, const Point2& b, double tol) { return distance(a, b) <= tol; }

}  // namespace

TEST_CASE("henon_eval examples") {
  CHECK(henon_eval({0, 0}, kP) == Point2{1, 0});
  CHECK(henon_eval({0, 0}, Params{1.4, -0.7, 0.1}) == Point2{1, 0});
  CHECK(close(henon_eval({1, 0}, kP), {0.4, 0.3}, 1e-15));
  CHECK(close(henon_eval({0.4, 0.3}, kP), {1.204, 0.12}, 1e-15));
}

TEST_CASE("henon_inverse examples and round trip") {
  CHECK(close(henon_inverse({1, 0}, kP), {0, 0}, 1e-15));
  CHECK(close(henon_inverse({1, 0}, Params{1.1, -2.0, 0.1}), {0, 0}, 1e-15));
  CHECK(close(henon_inverse({1.204, 0.12}, kP), {0.4, 0.3}, 1e-14));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Point2 p{u(rng), u(rng)};
    const Point2 q = henon_inverse(henon_eval(p, kP), kP);
    const Point2 r = henon_eval(henon_inverse(p, kP), kP);
    worst = std::max({worst, distance(p, q) / std::max(1.0, p.norm()), distance(p, r) / std::max(1.0, p.norm())});
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("henon_inverse rejects b = 0") {
  try {
    henon_inverse({1, 1}, Params{0.6, 0.0, 0.1});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degenerate_parameter);
  }
}

TEST_CASE("henon_jacobian") {
  const Mat2 j = henon_jacobian({0, 0}, kP);
  CHECK(j.a11 == 0.0);
  CHECK(j.a12 == 1.0);
  CHECK(j.a21 == 0.3);
  CHECK(j.a22 == 0.0);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const double h = 1e-6;
  for (int i = 0; i < 100; ++i) {
    const Point2 p{u(rng), u(rng)};
    const Mat2 m = henon_jacobian(p, kP);
    CHECK(std::abs(m.det() + 0.3) < 1e-14 * 0.3 + 1e-16);
    const Point2 dx = (henon_eval({p.x + h, p.y}, kP) - henon_eval({p.x - h, p.y}, kP)) * (0.5 / h);
    const Point2 dy = (henon_eval({p.x, p.y + h}, kP) - henon_eval({p.x, p.y - h}, kP)) * (0.5 / h);
    const Mat2 fd{dx.x, dy.x, dx.y, dy.y};
    const Mat2 diff = fd - m;
    const double err = std::abs(diff.a11) + std::abs(diff.a12) + std::abs(diff.a21) + std::abs(diff.a22);
    const double scale = std::abs(m.a11) + std::abs(m.a12) + std::abs(m.a21) + std::abs(m.a22);
    CHECK(err / scale < 1e-6);
  }
}

TEST_CASE("inv_transpose_action examples") {
  auto r = inv_transpose_action(Mat2::identity(), {1, 0});
  CHECK(close(r.direction, {1, 0}, 1e-15));
  CHECK(r.scale == doctest::Approx(1.0));

  r = inv_transpose_action(henon_jacobian({0, 0}, kP), {1, 0});
  CHECK(close(r.direction, {0, 1}, 1e-15));
  CHECK(r.scale == doctest::Approx(10.0 / 3.0).epsilon(1e-14));

  r = inv_transpose_action(Mat2::diag(2, 0.5), {0, 1});
  CHECK(close(r.direction, {0, 1}, 1e-15));
  CHECK(r.scale == doctest::Approx(2.0).epsilon(1e-14));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const double t = u(rng) * 1.6;
    const auto a = inv_transpose_action(henon_jacobian({u(rng), u(rng)}, kP), {std::cos(t), std::sin(t)});
    CHECK(std::abs(a.direction.norm() - 1.0) < 1e-14);
    CHECK(a.scale > 0.0);
  }

  try {
    inv_transpose_action(Mat2{1, 2, 2, 4}, {1, 0});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::singular_matrix);
  }
}

TEST_CASE("sample_orbit") {
  SUBCASE("zero noise is the deterministic orbit") {
    const Params p{0.6, 0.3, 0.0};
    const auto orbit = sample_orbit({0.1, 0.1}, p, HenonMap(), 50, 1);
    REQUIRE(orbit.size() == 51);
    Point2 z{0.1, 0.1};
    for (std::size_t i = 1; i < orbit.size(); ++i) {
      z = henon_eval(z, p);
      CHECK(orbit[i] == z);
    }
  }
  SUBCASE("increments stay in the closed ball") {
    const HenonMap h;
    const auto orbit = sample_orbit({0.1, 0.1}, kP, h, 10000, 42);
    double worst = 0.0;
    for (std::size_t i = 1; i < orbit.size(); ++i) {
      worst = std::max(worst, distance(orbit[i], h.eval(orbit[i - 1], kP)));
    }
    CHECK(worst <= kP.eps + 1e-15);
  }
  SUBCASE("same seed replays the same orbit") {
    const HenonMap h;
    CHECK(sample_orbit({0.1, 0.1}, kP, h, 500, 9) == sample_orbit({0.1, 0.1}, kP, h, 500, 9));
    CHECK(sample_orbit({0.1, 0.1}, kP, h, 500, 9) != sample_orbit({0.1, 0.1}, kP, h, 500, 10));
  }
  SUBCASE("leaving the guard box is divergence") {
    try {
      sample_orbit({5, 5}, Params{1.4, 0.3, 0.01}, HenonMap(), 100, 1);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::divergence);
    }
  }
}

TEST_CASE("Params validation") {
  CHECK_THROWS_AS(Params({0.6, 0.0, 0.1}).validate(), Error);
  CHECK_THROWS_AS(Params({0.6, 0.3, -0.1}).validate(), Error);
  CHECK_NOTHROW(Params({0.6, 0.3, 0.0}).validate());
}

TEST_CASE("affine map inverse and Jacobian") {
  const AffineMap m(Mat2{0.5, 0.2, -0.1, 0.7}, {0.3, -0.4});
  const Params p{0, 0.3, 0.1};
  const Point2 z{0.9, -1.3};
  CHECK(close(m.inverse(m.eval(z, p), p), z, 1e-14));
  CHECK(m.jacobian(z, p).a12 == 0.2);
  CHECK_THROWS_AS(AffineMap(Mat2{1, 2, 2, 4}, {}), Error);
}
