#include <doctest.h>

#include <cmath>

#include "finslab/geodesic.hpp"

using namespace finslab;

TEST_CASE("euclidean geodesics are straight lines") {
  auto m = MetricSpec::euclidean(2);
  auto path = geodesic(m, vec2(0.1, 0.2), vec2(0.3, -0.4), 2.0, 200);
  REQUIRE(!path.exited_domain);
  auto& xe = path.x.back();
  CHECK(xe[0] == doctest::Approx(0.1 + 2.0 * 0.3).epsilon(1e-12));
  CHECK(xe[1] == doctest::Approx(0.2 - 2.0 * 0.4).epsilon(1e-12));
}

TEST_CASE("minkowski geodesics are straight lines") {
  auto m = MetricSpec::randers_constant(2, vec2(0.5, 0.1));
  auto path = geodesic(m, Vec4{}, vec2(1.0, 0.5), 1.0, 100);
  REQUIRE(!path.exited_domain);
  CHECK(path.x.back()[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(path.x.back()[1] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("poincare disk radial geodesic matches |x(t)| = tanh(t/2)") {
  auto m = MetricSpec::poincare_disk();
  // unit initial speed: F(0,y) = 2|y|, so y0 = (0.5, 0)
  auto path = geodesic(m, Vec4{}, vec2(0.5, 0.0), 2.0, 2000);
  REQUIRE(!path.exited_domain);
  for (std::size_t k = 0; k < path.t.size(); k += 200) {
    double t = path.t[k];
    CHECK(path.x[k][0] == doctest::Approx(std::tanh(t / 2.0)).epsilon(1e-5));
    CHECK(std::abs(path.x[k][1]) < 1e-12);
  }
}

TEST_CASE("speed F(gamma') is a first integral") {
  auto m = MetricSpec::funk_disk();
  Vec4 x0 = vec2(-0.2, 0.1);
  Vec4 y0 = vec2(0.4, 0.3);
  double f0 = m.norm(x0, y0);
  auto path = geodesic(m, x0, y0, 1.0, 1000);
  for (std::size_t k = 0; k < path.t.size(); k += 100) {
    double f = m.norm(path.x[k], path.y[k]);
    CHECK(f == doctest::Approx(f0).epsilon(1e-6));
  }
}

TEST_CASE("domain exit truncates the path and flags it") {
  auto m = MetricSpec::funk_disk();
  auto path = geodesic(m, vec2(0.9, 0.0), vec2(1.0, 0.0), 50.0, 5000);
  CHECK(path.exited_domain);
  CHECK(path.x.back()[0] < 1.0);
}
