#include <doctest.h>

#include <cmath>
#include <random>

#include "finslab/fundamental.hpp"
#include "finslab/pde.hpp"

using namespace finslab;

namespace {

FieldGrid torus_with(int n, double L, const std::string& expr) {
  FieldGrid g = FieldGrid::torus(n, L, L);
  g.fill(Expr::parse(expr, 2));
  return g;
}

}  // namespace

TEST_CASE("euclidean operator reduces to the 5-point laplacian") {
  auto m = MetricSpec::euclidean(2);
  auto mu = MeasureSpec::lebesgue();
  FieldGrid u = torus_with(256, 2.0 * M_PI, "2+sin(x1)");
  auto lap = nonlinear_laplacian_u(m, mu, u);
  double worst = 0.0;
  for (int j = 0; j < u.ny; ++j)
    for (int i = 0; i < u.nx; ++i) {
      Vec4 x = u.cell(i, j);
      worst = std::max(worst,
                       std::abs(lap[static_cast<std::size_t>(u.idx(i, j))] + std::sin(x[0])));
    }
  CHECK(worst < 1e-3);
}

TEST_CASE("constant field maps to exactly zero") {
  auto m = MetricSpec::randers_constant(2, vec2(0.4, 0.1));
  auto mu = MeasureSpec::lebesgue();
  FieldGrid u = FieldGrid::torus(32, 2.0 * M_PI, 2.0 * M_PI);
  u.fill_constant(3.7);
  auto lap = nonlinear_laplacian_u(m, mu, u);
  for (double v : lap) CHECK(v == 0.0);
}

TEST_CASE("randers operator matches a pointwise AD+FD oracle") {
  auto m = MetricSpec::randers_constant(2, vec2(0.3, 0.0));
  auto mu = MeasureSpec::lebesgue();
  const int n = 384;
  FieldGrid u = torus_with(n, 2.0 * M_PI, "2 + 0.5*sin(x1) + 0.3*cos(x2)");
  auto lap = nonlinear_laplacian_u(m, mu, u);

  Expr ue = Expr::parse("2 + 0.5*sin(x1) + 0.3*cos(x2)", 2);
  // exact flux field: l^{-1}(du)(x) with du from jets; divergence by a
  // central difference of the exact flux (step 1e-4)
  auto flux = [&](const Vec4& x, int comp) {
    std::array<J1, 4> xj{}, yj{};
    for (int i = 0; i < 2; ++i) {
      xj[static_cast<std::size_t>(i)] = J1(x[static_cast<std::size_t>(i)]);
      xj[static_cast<std::size_t>(i)].d[i] = 1.0;
    }
    J1 r = ue.eval(std::span<const J1>(xj.data(), 2), std::span<const J1>(yj.data(), 2));
    Vec4 du = vec2(r.d[0], r.d[1]);
    auto lt = legendre_to_tangent(m, x, du);
    return lt.v[static_cast<std::size_t>(comp)];
  };
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> pick(3, n - 4);
  double worst = 0.0;
  const double h = 1e-4;
  for (int t = 0; t < 40; ++t) {
    int i = pick(rng), j = pick(rng);
    Vec4 x = u.cell(i, j);
    double div = 0.0;
    for (int c = 0; c < 2; ++c) {
      Vec4 xp = x, xm = x;
      xp[static_cast<std::size_t>(c)] += h;
      xm[static_cast<std::size_t>(c)] -= h;
      div += (flux(xp, c) - flux(xm, c)) / (2.0 * h);
    }
    worst = std::max(worst, std::abs(lap[static_cast<std::size_t>(u.idx(i, j))] - div));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("torus mass conservation with q = 0") {
  auto m = MetricSpec::randers_constant(2, vec2(0.3, 0.0));
  auto mu = MeasureSpec::expression(2, "0.2*sin(x1+x2)");
  FieldGrid u0 = torus_with(48, 2.0 * M_PI, "1 + 0.5*cos(x1)");
  SolverConfig cfg;
  cfg.t_end = 0.25;
  auto res = solve_schrodinger(m, mu, u0, PotentialSpec::none(), cfg);
  REQUIRE(!res.aborted);
  FinslerLaplacian op(m, mu, u0);
  double m0 = op.mass(u0.v);
  double m1 = op.mass(res.geometry.v);
  CHECK(std::abs(m1 - m0) <= 1e-6 * std::abs(m0) * cfg.t_end);
}

TEST_CASE("fourier mode decay on the euclidean torus") {
  auto m = MetricSpec::euclidean(2);
  auto mu = MeasureSpec::lebesgue();
  FieldGrid u0 = torus_with(128, 2.0 * M_PI, "1 + 0.5*cos(x1)");
  SolverConfig cfg;
  cfg.t_end = 1.0;
  auto res = solve_schrodinger(m, mu, u0, PotentialSpec::none(), cfg);
  REQUIRE(!res.aborted);
  // amplitude of the cos mode decays like e^{-t}
  double amp = 0.0;
  for (std::size_t c = 0; c < res.geometry.v.size(); ++c)
    amp = std::max(amp, std::abs(res.geometry.v[c] - 1.0));
  CHECK(amp == doctest::Approx(0.5 * std::exp(-1.0)).epsilon(0.01));
}

TEST_CASE("constant potential acts as an exact gauge factor") {
  auto m = MetricSpec::randers_constant(2, vec2(0.3, 0.0));
  auto mu = MeasureSpec::lebesgue();
  FieldGrid u0 = torus_with(32, 2.0 * M_PI, "1 + 0.4*cos(x1) + 0.2*sin(x2)");
  SolverConfig cfg;
  cfg.t_end = 0.25;
  cfg.dt = 2.5e-4;  // shared step for both runs, within the CFL bound
  auto r0 = solve_schrodinger(m, mu, u0, PotentialSpec::none(), cfg);
  auto r1 = solve_schrodinger(m, mu, u0, PotentialSpec::constant(0.7), cfg);
  REQUIRE(!r0.aborted);
  REQUIRE(!r1.aborted);
  double fac = std::exp(-0.7 * cfg.t_end);  // dt^2 commutation error ~ t dt^2 / 4
  double worst = 0.0;
  for (std::size_t c = 0; c < r0.geometry.v.size(); ++c)
    worst = std::max(worst, std::abs(r1.geometry.v[c] - fac * r0.geometry.v[c]));
  CHECK(worst < 1e-8);
}

TEST_CASE("heat kernel evolution on a large torus patch") {
  auto m = MetricSpec::euclidean(2);
  auto mu = MeasureSpec::lebesgue();
  FieldGrid u0 = FieldGrid::torus(128, 8.0, 8.0);
  const double t0 = 0.1;
  // kernel centered at the torus midpoint (4,4)
  for (int j = 0; j < u0.ny; ++j)
    for (int i = 0; i < u0.nx; ++i) {
      Vec4 x = u0.cell(i, j);
      double r2 = (x[0] - 4.0) * (x[0] - 4.0) + (x[1] - 4.0) * (x[1] - 4.0);
      u0.v[static_cast<std::size_t>(u0.idx(i, j))] =
          std::exp(-r2 / (4.0 * t0)) / (4.0 * M_PI * t0) + 1e-12;
    }
  SolverConfig cfg;
  cfg.t_end = 0.4;  // kernel time 0.1 -> 0.5
  auto res = solve_schrodinger(m, mu, u0, PotentialSpec::none(), cfg);
  REQUIRE(!res.aborted);
  double tk = 0.5;
  double worst = 0.0, scale = 1.0 / (4.0 * M_PI * tk);
  for (int j = 0; j < u0.ny; ++j)
    for (int i = 0; i < u0.nx; ++i) {
      Vec4 x = u0.cell(i, j);
      double r2 = (x[0] - 4.0) * (x[0] - 4.0) + (x[1] - 4.0) * (x[1] - 4.0);
      double exact = std::exp(-r2 / (4.0 * tk)) / (4.0 * M_PI * tk);
      worst = std::max(worst,
                       std::abs(res.geometry.v[static_cast<std::size_t>(u0.idx(i, j))] - exact));
    }
  CHECK(worst / scale < 0.02);
}

TEST_CASE("maximum principle for q >= 0") {
  auto m = MetricSpec::randers_constant(2, vec2(0.4, 0.0));
  auto mu = MeasureSpec::lebesgue();
  FieldGrid u0 = torus_with(48, 2.0 * M_PI, "1 + 0.5*cos(x1) + 0.2*sin(2*x2)");
  SolverConfig cfg;
  cfg.t_end = 0.3;
  for (int s = 1; s <= 12; ++s) cfg.snapshot_times.push_back(0.025 * s);
  auto res = solve_schrodinger(m, mu, u0, PotentialSpec::constant(0.1), cfg);
  REQUIRE(!res.aborted);
  double prev = u0.max_inside();
  for (const auto& s : res.snapshots) {
    double mx = -1e300;
    for (std::size_t c = 0; c < s.u.size(); ++c) mx = std::max(mx, s.u[c]);
    CHECK(mx <= prev * (1.0 + 1e-10));
    prev = mx;
  }
}

TEST_CASE("reverse metric duality of the operator") {
  auto m = MetricSpec::parse("sqrt(y1^2+y2^2)*(1+0.1*sin(x1)) + 0.2*y2", 2);
  auto mrev = m.reversed();
  auto mu = MeasureSpec::lebesgue();
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> amp(-0.4, 0.4), ph(0.0, 2 * M_PI);
  for (int trial = 0; trial < 12; ++trial) {
    FieldGrid u = FieldGrid::torus(32, 2.0 * M_PI, 2.0 * M_PI);
    double a1 = amp(rng), a2 = amp(rng), p1 = ph(rng), p2 = ph(rng);
    FieldGrid nu = u;
    for (int j = 0; j < u.ny; ++j)
      for (int i = 0; i < u.nx; ++i) {
        Vec4 x = u.cell(i, j);
        double v = 2.0 + a1 * std::sin(x[0] + p1) + a2 * std::cos(2 * x[1] + p2);
        u.v[static_cast<std::size_t>(u.idx(i, j))] = v;
        nu.v[static_cast<std::size_t>(u.idx(i, j))] = -v;
      }
    auto fwd = nonlinear_laplacian_u(m, mu, u);
    auto rev = nonlinear_laplacian_u(mrev, mu, nu);
    double worst = 0.0;
    for (std::size_t c = 0; c < fwd.size(); ++c)
      worst = std::max(worst, std::abs(rev[c] + fwd[c]));
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("CFL violations are rejected up front") {
  auto m = MetricSpec::euclidean(2);
  auto mu = MeasureSpec::lebesgue();
  FieldGrid u0 = torus_with(32, 2.0 * M_PI, "1+0.1*cos(x1)");
  SolverConfig cfg;
  cfg.t_end = 0.1;
  cfg.dt = 1.0;  // far beyond h^2/4
  CHECK_THROWS_AS(solve_schrodinger(m, mu, u0, PotentialSpec::none(), cfg), SolverError);
}

TEST_CASE("nonpositive initial data is rejected") {
  auto m = MetricSpec::euclidean(2);
  auto mu = MeasureSpec::lebesgue();
  FieldGrid u0 = torus_with(16, 2.0 * M_PI, "sin(x1)");
  SolverConfig cfg;
  CHECK_THROWS_AS(solve_schrodinger(m, mu, u0, PotentialSpec::none(), cfg), SolverError);
}

TEST_CASE("semi-implicit scheme tracks the explicit one") {
  auto m = MetricSpec::euclidean(2);
  auto mu = MeasureSpec::lebesgue();
  FieldGrid u0 = torus_with(48, 2.0 * M_PI, "1 + 0.3*cos(x1)");
  SolverConfig ce;
  ce.t_end = 0.2;
  auto re = solve_schrodinger(m, mu, u0, PotentialSpec::none(), ce);
  SolverConfig ci;
  ci.t_end = 0.2;
  ci.scheme = Scheme::kSemiImplicit;
  ci.dt = 2e-3;  // larger than the explicit CFL step
  auto ri = solve_schrodinger(m, mu, u0, PotentialSpec::none(), ci);
  REQUIRE(!re.aborted);
  REQUIRE(!ri.aborted);
  double worst = 0.0;
  for (std::size_t c = 0; c < re.geometry.v.size(); ++c)
    worst = std::max(worst, std::abs(re.geometry.v[c] - ri.geometry.v[c]));
  CHECK(worst < 5e-3);  // first-order-in-time scheme at a coarse dt
}

TEST_CASE("potential bounds from sampling") {
  auto m = MetricSpec::euclidean(2);
  auto mu = MeasureSpec::lebesgue();
  auto q = PotentialSpec::expression(2, "0.1*sin(x1)");
  Region reg = Region::box(2, Vec4{}, vec2(2 * M_PI, 2 * M_PI));
  auto b = potential_bounds(m, mu, q, reg);
  // F(grad q) = 0.1|cos x1| <= 0.1; Delta q = -0.1 sin x1 <= 0.1
  CHECK(b.gamma == doctest::Approx(0.1).epsilon(0.02));
  CHECK(b.theta == doctest::Approx(0.1).epsilon(0.02));
  CHECK(b.q_min == doctest::Approx(-0.1).epsilon(0.02));
}
