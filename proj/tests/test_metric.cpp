#include <doctest.h>

#include <cmath>
#include <random>

#include "finslab/metric.hpp"

using namespace finslab;

TEST_CASE("parsed euclidean norm evaluates exactly") {
  MetricSpec m = MetricSpec::parse("sqrt(y1^2+y2^2)", 2);
  CHECK(m.norm(Vec4{0, 0}, vec2(3, 4)) == doctest::Approx(5.0));
  CHECK(m.validity().ok);
  CHECK(m.validity().homogeneity_residual < 1e-10);
  CHECK(m.validity().min_g_eigenvalue > 0.9);
}

TEST_CASE("parsed randers with constant drift") {
  MetricSpec m = MetricSpec::parse("sqrt(y1^2+y2^2) + 0.5*y1", 2);
  CHECK(m.norm(Vec4{0, 0}, vec2(3, 4)) == doctest::Approx(6.5));
}

TEST_CASE("2-homogeneous expression is rejected") {
  CHECK_THROWS_AS(MetricSpec::parse("y1^2+y2^2", 2), MetricError);
}

TEST_CASE("degenerate expression is rejected") {
  // F = |y1| is not strongly convex; g degenerates in the y2 direction
  CHECK_THROWS_AS(MetricSpec::parse("sqrt(y1^2)", 2), MetricError);
}

TEST_CASE("funk disk domain is the open unit disk") {
  MetricSpec m = MetricSpec::funk_disk();
  CHECK(m.in_domain(std::array<double, 2>{0.5, 0.0}));
  CHECK(!m.in_domain(std::array<double, 2>{0.999999999, 0.2}));
  double f = m.norm(vec2(0.3, 0.1), vec2(1.0, -0.5));
  CHECK(f > 0.0);
  // outward motion costs 1/(1-|x|): the boundary is infinitely far forward
  double fwd = m.norm(vec2(0.5, 0.0), vec2(1.0, 0.0));
  double bwd = m.norm(vec2(0.5, 0.0), vec2(-1.0, 0.0));
  CHECK(fwd == doctest::Approx(2.0));
  CHECK(bwd == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("builtin certificates") {
  for (const MetricSpec& m :
       {MetricSpec::euclidean(2), MetricSpec::funk_disk(), MetricSpec::poincare_disk(),
        MetricSpec::randers_constant(2, vec2(0.5, 0.0))}) {
    CHECK(m.validity().ok);
    CHECK(m.validity().homogeneity_residual < 1e-10);
    CHECK(m.validity().min_g_eigenvalue > 0.0);
    CHECK(m.validity().min_F > 0.0);
  }
}

TEST_CASE("reversed metric flips the drift") {
  MetricSpec m = MetricSpec::randers_constant(2, vec2(0.5, 0.0));
  MetricSpec rev = m.reversed();
  CHECK(m.norm(Vec4{}, vec2(1, 0)) == doctest::Approx(1.5));
  CHECK(rev.norm(Vec4{}, vec2(1, 0)) == doctest::Approx(0.5));
  CHECK(rev.norm(Vec4{}, vec2(-1, 0)) == doctest::Approx(1.5));
}

TEST_CASE("jet table matches central finite differences") {
  MetricSpec m = MetricSpec::funk_disk();
  Vec4 x = vec2(0.21, -0.13), y = vec2(0.9, 0.55);
  JetTable t = fsq_jet_table(m, x, y);
  const double h = 1e-4;

  auto fsq_at = [&](double dx1, double dx2, double dy1, double dy2) {
    return m.fsq(vec2(x[0] + dx1, x[1] + dx2), vec2(y[0] + dy1, y[1] + dy2));
  };

  MultiIndex k{};
  // dF2/dy1
  k = MultiIndex{};
  k[kMaxDim + 0] = 1;
  double fd = (fsq_at(0, 0, h, 0) - fsq_at(0, 0, -h, 0)) / (2 * h);
  CHECK(t.partials.at(k) == doctest::Approx(fd).epsilon(1e-5));
  // d2F2/dy1 dy2
  k = MultiIndex{};
  k[kMaxDim + 0] = 1;
  k[kMaxDim + 1] = 1;
  fd = (fsq_at(0, 0, h, h) - fsq_at(0, 0, h, -h) - fsq_at(0, 0, -h, h) + fsq_at(0, 0, -h, -h)) /
       (4 * h * h);
  CHECK(t.partials.at(k) == doctest::Approx(fd).epsilon(1e-5));
  // d2F2/dx1 dy1
  k = MultiIndex{};
  k[0] = 1;
  k[kMaxDim + 0] = 1;
  fd = (fsq_at(h, 0, h, 0) - fsq_at(h, 0, -h, 0) - fsq_at(-h, 0, h, 0) + fsq_at(-h, 0, -h, 0)) /
       (4 * h * h);
  CHECK(t.partials.at(k) == doctest::Approx(fd).epsilon(1e-5));
  // d2F2/dx1^2
  k = MultiIndex{};
  k[0] = 2;
  fd = (fsq_at(h, 0, 0, 0) - 2 * fsq_at(0, 0, 0, 0) + fsq_at(-h, 0, 0, 0)) / (h * h);
  CHECK(t.partials.at(k) == doctest::Approx(fd).epsilon(1e-4));
  // d3F2/dy1^3
  k = MultiIndex{};
  k[kMaxDim + 0] = 3;
  fd = (fsq_at(0, 0, 2 * h, 0) - 2 * fsq_at(0, 0, h, 0) + 2 * fsq_at(0, 0, -h, 0) -
        fsq_at(0, 0, -2 * h, 0)) /
       (2 * h * h * h);
  CHECK(t.partials.at(k) == doctest::Approx(fd).epsilon(1e-3));
}

TEST_CASE("minkowski rejects x dependence") {
  CHECK_THROWS_AS(MetricSpec::minkowski("sqrt(y1^2+y2^2)+x1*y1", 2), ConfigError);
}
