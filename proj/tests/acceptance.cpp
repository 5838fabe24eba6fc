// Acceptance suite: one test case per shipped verification criterion, each
// printing a PASS/FAIL line with the measured numbers.

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "finslab/comparison.hpp"
#include "finslab/csv.hpp"
#include "finslab/connection.hpp"
#include "finslab/constants.hpp"
#include "finslab/curvature.hpp"
#include "finslab/estimates.hpp"
#include "finslab/fundamental.hpp"
#include "finslab/nonriemann.hpp"
#include "finslab/pde.hpp"

using namespace finslab;

namespace {

struct Tally {
  const char* name;
  bool ok = true;
  std::string detail;
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
  ~Tally() {
    std::printf("ACCEPTANCE %s: %s%s%s\n", name, ok ? "PASS" : "FAIL",
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
  }
};

std::vector<MetricSpec> family_five() {
  return {
      MetricSpec::euclidean(2),
      MetricSpec::riemannian(2, std::vector<std::vector<std::string>>{{"1", "0"}, {"0", "exp(2*x1)"}}),
      MetricSpec::randers_constant(2, vec2(0.5, 0.0)),
      MetricSpec::randers(2, {{"1", "0"}, {"0", "1"}},
                          {"0.2*exp(-(x1-0.3)^2-x2^2)", "0"}),
      MetricSpec::funk_disk(),
  };
}

Vec4 rand_x(std::mt19937_64& rng, const MetricSpec& m) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (;;) {
    Vec4 x = vec2(0.7 * u(rng), 0.7 * u(rng));
    if (m.in_domain(std::span<const double>(x.data(), 2))) return x;
  }
}

Vec4 rand_y(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> a(0.0, 2.0 * M_PI), s(0.4, 2.5);
  double th = a(rng), sc = s(rng);
  return vec2(sc * std::cos(th), sc * std::sin(th));
}

}  // namespace

TEST_CASE("criterion 1: tensor identities at 1000 samples per metric family") {
  Tally t{"1 tensor-identities"};
  std::mt19937_64 rng(2024);
  double worst_f2 = 0.0, worst_cy = 0.0, worst_gk = 0.0, worst_lr = 0.0;
  for (const auto& m : family_five()) {
    for (int s = 0; s < 1000; ++s) {
      Vec4 x = rand_x(rng, m);
      Vec4 y = rand_y(rng);
      auto fd = fundamental(m, x, y);
      double q = quadratic_form(2, fd.g, y, y);
      worst_f2 = std::max(worst_f2, std::abs(q - fd.F2) / fd.F2);
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          worst_cy = std::max(worst_cy,
                              std::abs(fd.cartan[0][j][k] * y[0] + fd.cartan[1][j][k] * y[1]) /
                                  std::max(1.0, fd.F2));
      auto fd2 = fundamental(m, x, vec2(1.7 * y[0], 1.7 * y[1]));
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          worst_gk = std::max(worst_gk, std::abs(fd2.g[i][j] - fd.g[i][j]) /
                                            std::max(1.0, std::abs(fd.g[i][j])));
      auto lt = legendre_to_cotangent(m, x, y);
      auto back = legendre_to_tangent(m, x, lt.v);
      worst_lr = std::max(worst_lr, std::hypot(back.v[0] - y[0], back.v[1] - y[1]) /
                                        std::hypot(y[0], y[1]));
    }
  }
  t.note("F2=gyy rel " + format_num(worst_f2));
  t.note("Cy " + format_num(worst_cy));
  t.note("g(ky) " + format_num(worst_gk));
  t.note("legendre " + format_num(worst_lr));
  CHECK(worst_f2 < 1e-9);
  CHECK(worst_cy < 1e-9);
  CHECK(worst_gk < 1e-9);
  CHECK(worst_lr < 1e-9);
  t.ok = worst_f2 < 1e-9 && worst_cy < 1e-9 && worst_gk < 1e-9 && worst_lr < 1e-9;
}

TEST_CASE("criterion 2: riemannian reduction") {
  Tally t{"2 riemannian-reduction"};
  auto mu = MeasureSpec::lebesgue();
  double worst_chern = 0.0, worst_nr = 0.0;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.5, 0.5);

  struct Case {
    MetricSpec m;
    std::function<double(int, int, const Vec4&)> a;
  };
  std::vector<Case> cases;
  cases.push_back({MetricSpec::riemannian(2, std::vector<std::vector<std::string>>{
                                                 {"1", "0"}, {"0", "exp(2*x1)"}}),
                   [](int i, int j, const Vec4& x) {
                     if (i != j) return 0.0;
                     return i == 0 ? 1.0 : std::exp(2.0 * x[0]);
                   }});
  cases.push_back({MetricSpec::poincare_disk(), [](int i, int j, const Vec4& x) {
                     if (i != j) return 0.0;
                     double w = 1.0 - x[0] * x[0] - x[1] * x[1];
                     return 4.0 / (w * w);
                   }});

  for (auto& cs : cases) {
    for (int s = 0; s < 8; ++s) {
      Vec4 x = vec2(u(rng), u(rng));
      Vec4 y = vec2(std::cos(u(rng) * 6), std::sin(u(rng) * 6));
      auto conn = connection(cs.m, x, y);
      // fd levi-civita oracle
      const double h = 1e-5;
      Ten3T<double> da{};
      for (int k = 0; k < 2; ++k) {
        Vec4 xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            da[k][i][j] = (cs.a(i, j, xp) - cs.a(i, j, xm)) / (2 * h);
      }
      Mat4 am{};
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) am[i][j] = cs.a(i, j, x);
      Mat4 ai = inverse(2, am);
      for (int l = 0; l < 2; ++l)
        for (int jj = 0; jj < 2; ++jj)
          for (int k = 0; k < 2; ++k) {
            double acc = 0.0;
            for (int i = 0; i < 2; ++i)
              acc += 0.5 * ai[l][i] * (da[k][i][jj] + da[jj][i][k] - da[i][jj][k]);
            worst_chern = std::max(worst_chern, std::abs(conn.chern[l][jj][k] - acc));
          }
      // non-riemannian quantities vanish
      Vec4 V = vec2(1.0, 0.3), W = vec2(-0.2, 1.0);
      auto nr = non_riemannian(cs.m, mu, x, V, W);
      for (int i = 0; i < 2; ++i) {
        worst_nr = std::max({worst_nr, std::abs(nr.t_diff[i]), std::abs(nr.u_vec[i]),
                             std::abs(nr.div_c[i])});
        for (int j = 0; j < 2; ++j)
          for (int k = 0; k < 2; ++k)
            worst_nr = std::max(worst_nr, std::abs(fundamental(cs.m, x, y).cartan[i][j][k]));
      }
    }
  }
  auto rep = misalignment_local(MetricSpec::poincare_disk(), vec2(0.3, 0.2), 1e-6);
  t.note("chern-vs-oracle " + format_num(worst_chern));
  t.note("nonriemannian " + format_num(worst_nr));
  t.note("alpha " + format_num(rep.alpha) + " kappa " + format_num(rep.kappa));
  CHECK(worst_chern < 1e-6);
  CHECK(worst_nr < 1e-8);
  CHECK(std::abs(rep.alpha - 1.0) < 1e-6);
  CHECK(std::abs(rep.kappa - 1.0) < 1e-6);
  CHECK(std::abs(rep.kappa_star - 1.0) < 1e-6);
  t.ok = worst_chern < 1e-6 && worst_nr < 1e-8 && std::abs(rep.alpha - 1.0) < 1e-6 &&
         std::abs(rep.kappa - 1.0) < 1e-6;
}

TEST_CASE("criterion 3: curvature oracle") {
  Tally t{"3 curvature-oracle"};
  auto m = MetricSpec::poincare_disk();
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> ur(0.0, 0.7), ua(0.0, 2.0 * M_PI);
  double worst = 0.0;
  int checked = 0;
  while (checked < 100) {
    double r = ur(rng), px = ua(rng);
    Vec4 x = vec2(r * std::cos(px), r * std::sin(px));
    Vec4 y = vec2(std::cos(ua(rng)), std::sin(ua(rng)));
    Vec4 u = vec2(std::cos(ua(rng)), std::sin(ua(rng)));
    if (std::abs(y[0] * u[1] - y[1] * u[0]) < 0.05) continue;
    worst = std::max(worst, std::abs(flag_curvature(m, x, y, u) + 1.0));
    ++checked;
  }
  double eworst = 0.0;
  auto e = MetricSpec::euclidean(2);
  auto c = curvatures(e, vec2(0.2, -0.4), vec2(1, 0.3), vec2(0, 1));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) eworst = std::max(eworst, std::abs(c.hh[i][j][k][l]));
  t.note("poincare |K+1| " + format_num(worst));
  t.note("euclid |R| " + format_num(eworst));
  CHECK(worst < 1e-4);
  CHECK(eworst < 1e-10);
  t.ok = worst < 1e-4 && eworst < 1e-10;
}

TEST_CASE("criterion 4: misalignment structure") {
  Tally t{"4 misalignment"};
  bool ok = true;
  // product identity + chains on randers and funk
  for (auto& m : {MetricSpec::randers_constant(2, vec2(0.5, 0.0)), MetricSpec::funk_disk()}) {
    for (Vec4 x : {vec2(0.0, 0.0), vec2(0.3, 0.1), vec2(-0.2, 0.4)}) {
      auto rep = misalignment_local(m, x, 1e-6);
      ok = ok && std::abs(rep.alpha_M * rep.alpha_m - 1.0) < 1e-6;
      ok = ok && rep.rho * rep.rho <= rep.alpha * (1 + 1e-6);
      ok = ok && 1.0 / rep.alpha <= rep.kappa_star * (1 + 1e-6);
      ok = ok && rep.kappa_star <= 1.0 + 1e-6;
      ok = ok && 1.0 - 1e-6 <= rep.kappa;
      ok = ok && rep.kappa <= rep.alpha * (1 + 1e-6);
      ok = ok && rep.alpha <= rep.kappa / rep.kappa_star * (1 + 1e-6);
      CHECK(ok);
    }
  }
  // funk monotonicity and the brute-force threshold at 0.9 e1
  auto funk = MetricSpec::funk_disk();
  double prev = 1.0;
  for (double r : {0.3, 0.5, 0.7, 0.9}) {
    auto rep = misalignment_local(funk, vec2(r, 0.0), 1e-6);
    CHECK(rep.alpha > prev);
    ok = ok && rep.alpha > prev;
    prev = rep.alpha;
  }
  double oracle = misalignment_bruteforce(funk, vec2(0.9, 0.0), 1024);
  t.note("funk alpha(0.9) oracle " + format_num(oracle) + " refined " + format_num(prev));
  CHECK(oracle > 10.0);
  CHECK(prev > 10.0);
  CHECK(prev >= oracle - 1e-6);
  ok = ok && oracle > 10.0 && prev > 10.0;
  t.ok = ok;
}

TEST_CASE("criterion 5: laplacian comparison") {
  Tally t{"5 laplacian-comparison"};
  bool ok = true;
  // closed-form truth of the poincare bound
  for (double r = 0.05; r < 4.0; r += 0.05) {
    double lhs = 1.0 / std::tanh(r);
    double rhs = std::sqrt(2.0) / std::tanh(r / std::sqrt(2.0));
    ok = ok && rhs > lhs;
  }
  CHECK(ok);

  auto mu_p = MeasureSpec::riemannian_volume(
      2, {{"4/(1-x1^2-x2^2)^2", "0"}, {"0", "4/(1-x1^2-x2^2)^2"}});
  CompareConfig cfg;
  cfg.radius = 0.72;
  cfg.grid_n = 128;
  cfg.N = 3.0;
  cfg.policy = VPolicy::kFanSweep;
  cfg.fan = 16;
  cfg.k0_samples = 600;
  cfg.curvature_samples = 200;
  auto rep = verify_comparison(MetricSpec::poincare_disk(), mu_p, cfg);
  t.note("poincare min_margin " + format_num(rep.min_margin) + " violations " +
         std::to_string(rep.violations));
  CHECK(rep.violations == 0);
  CHECK(rep.min_margin > 0.0);
  ok = ok && rep.violations == 0 && rep.min_margin > 0.0;
  // measured constants reproduce the closed-form bound
  CHECK(std::abs(rep.alpha - 1.0) < 1e-5);
  CHECK(std::abs(rep.K - 1.0) < 0.02);
  CHECK(rep.C0 < 1e-6);
  for (std::size_t i = 0; i < rep.rows.size(); i += 97) {
    double r = rep.rows[i][0];
    double ideal = std::sqrt(2.0) / std::tanh(r / std::sqrt(2.0));
    ok = ok && std::abs(rep.rows[i][2] - ideal) < 0.02 * ideal + 0.02;
  }
  CHECK(ok);

  // randers bump scenario: both policies and the flag mode, >= 10^4 points
  auto bump = MetricSpec::randers(2, {{"1", "0"}, {"0", "1"}},
                                  {"0.2*exp(-(x1-0.3)^2-x2^2)", "0"});
  auto mu_l = MeasureSpec::lebesgue();
  CompareConfig bc;
  bc.radius = 1.0;
  bc.grid_n = 128;
  bc.N = 3.0;
  bc.fan = 16;
  bc.k0_samples = 2500;
  bc.curvature_samples = 200;
  for (auto mode : {CompareMode::kMixed, CompareMode::kFlag}) {
    for (auto pol : {VPolicy::kFanSweep, VPolicy::kGradient}) {
      bc.mode = mode;
      bc.policy = pol;
      auto r2 = verify_comparison(bump, mu_l, bc);
      t.note(std::string(mode == CompareMode::kMixed ? "mixed" : "flag") +
             (pol == VPolicy::kFanSweep ? "/fan" : "/grad") + " pts " +
             std::to_string(r2.evaluated) + " viol " + std::to_string(r2.violations));
      CHECK(r2.evaluated >= 10000);
      CHECK(r2.violations == 0);
      ok = ok && r2.evaluated >= 10000 && r2.violations == 0;
      if (pol == VPolicy::kGradient) break;  // gradient pass is policy-independent
    }
  }
  t.ok = ok;
}

TEST_CASE("criterion 6: pde accuracy") {
  Tally t{"6 pde-accuracy"};
  auto e = MetricSpec::euclidean(2);
  auto mu = MeasureSpec::lebesgue();
  bool ok = true;

  // heat-kernel transport at three resolutions; L-inf <= 2% on 256^2 and
  // observed order >= 1.7 across 64/128/256
  auto kernel_error = [&](int n, double t_end) {
    FieldGrid u0 = FieldGrid::torus(n, 8.0, 8.0);
    const double t0 = 0.1;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        Vec4 x = u0.cell(i, j);
        double r2 = (x[0] - 4) * (x[0] - 4) + (x[1] - 4) * (x[1] - 4);
        u0.v[static_cast<std::size_t>(u0.idx(i, j))] =
            std::exp(-r2 / (4 * t0)) / (4 * M_PI * t0) + 1e-14;
      }
    SolverConfig cfg;
    cfg.t_end = t_end;
    auto run = solve_schrodinger(e, mu, u0, PotentialSpec::none(), cfg);
    REQUIRE(!run.aborted);
    double tk = t0 + t_end;
    double worst = 0.0, scale = 1.0 / (4 * M_PI * tk);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        Vec4 x = run.geometry.cell(i, j);
        double r2 = (x[0] - 4) * (x[0] - 4) + (x[1] - 4) * (x[1] - 4);
        double exact = std::exp(-r2 / (4 * tk)) / (4 * M_PI * tk);
        worst = std::max(worst,
                         std::abs(run.geometry.v[static_cast<std::size_t>(u0.idx(i, j))] - exact));
      }
    return worst / scale;
  };
  double e64 = kernel_error(64, 0.2);
  double e128 = kernel_error(128, 0.2);
  double e256 = kernel_error(256, 0.2);
  double order1 = std::log2(e64 / e128), order2 = std::log2(e128 / e256);
  t.note("kernel err(256) " + format_num(e256) + " orders " + format_num(order1) + "," +
         format_num(order2));
  CHECK(e256 < 0.02);
  CHECK(order1 > 1.7);
  CHECK(order2 > 1.7);
  ok = ok && e256 < 0.02 && order1 > 1.7 && order2 > 1.7;

  // long-window accuracy at 256^2 through kernel time 1.0
  {
    FieldGrid u0 = FieldGrid::torus(256, 8.0, 8.0);
    const double t0 = 0.1;
    for (int j = 0; j < 256; ++j)
      for (int i = 0; i < 256; ++i) {
        Vec4 x = u0.cell(i, j);
        double r2 = (x[0] - 4) * (x[0] - 4) + (x[1] - 4) * (x[1] - 4);
        u0.v[static_cast<std::size_t>(u0.idx(i, j))] =
            std::exp(-r2 / (4 * t0)) / (4 * M_PI * t0) + 1e-14;
      }
    SolverConfig cfg;
    cfg.t_end = 0.9;
    cfg.snapshot_times = {0.4};
    auto run = solve_schrodinger(e, mu, u0, PotentialSpec::none(), cfg);
    REQUIRE(!run.aborted);
    auto err_at = [&](const std::vector<double>& u, double tk) {
      double worst = 0.0, scale = 1.0 / (4 * M_PI * tk);
      for (int j = 0; j < 256; ++j)
        for (int i = 0; i < 256; ++i) {
          Vec4 x = run.geometry.cell(i, j);
          double r2 = (x[0] - 4) * (x[0] - 4) + (x[1] - 4) * (x[1] - 4);
          double exact = std::exp(-r2 / (4 * tk)) / (4 * M_PI * tk);
          worst = std::max(worst, std::abs(u[static_cast<std::size_t>(run.geometry.idx(i, j))] - exact));
        }
      return worst / scale;
    };
    double mid = err_at(run.snapshots.front().u, 0.5);
    double fin = err_at(run.geometry.v, 1.0);
    t.note("kernel err mid " + format_num(mid) + " final " + format_num(fin));
    CHECK(mid < 0.02);
    CHECK(fin < 0.02);
    ok = ok && mid < 0.02 && fin < 0.02;
  }

  // mass conservation on a randers torus with a nonuniform measure
  {
    auto m = MetricSpec::randers_constant(2, vec2(0.3, 0.0));
    auto mu2 = MeasureSpec::expression(2, "0.2*sin(x1+x2)");
    FieldGrid u0 = FieldGrid::torus(64, 2 * M_PI, 2 * M_PI);
    u0.fill(Expr::parse("1 + 0.5*cos(x1)", 2));
    SolverConfig cfg;
    cfg.t_end = 0.5;
    auto run = solve_schrodinger(m, mu2, u0, PotentialSpec::none(), cfg);
    FinslerLaplacian op(m, mu2, u0);
    double drift = std::abs(op.mass(run.geometry.v) - op.mass(u0.v)) / op.mass(u0.v) / cfg.t_end;
    t.note("mass drift/unit-time " + format_num(drift));
    CHECK(drift < 1e-6);
    ok = ok && drift < 1e-6;
  }

  // gauge transformation exactness
  {
    auto m = MetricSpec::randers_constant(2, vec2(0.3, 0.0));
    FieldGrid u0 = FieldGrid::torus(32, 2 * M_PI, 2 * M_PI);
    u0.fill(Expr::parse("1 + 0.4*cos(x1) + 0.2*sin(x2)", 2));
    SolverConfig cfg;
    cfg.t_end = 0.25;
    cfg.dt = 2.5e-4;
    auto r0 = solve_schrodinger(m, mu, u0, PotentialSpec::none(), cfg);
    auto r1 = solve_schrodinger(m, mu, u0, PotentialSpec::constant(0.7), cfg);
    double fac = std::exp(-0.7 * cfg.t_end), worst = 0.0;
    for (std::size_t c = 0; c < r0.geometry.v.size(); ++c)
      worst = std::max(worst, std::abs(r1.geometry.v[c] - fac * r0.geometry.v[c]));
    t.note("gauge " + format_num(worst));
    CHECK(worst < 1e-8);
    ok = ok && worst < 1e-8;
  }
  t.ok = ok;
}

TEST_CASE("criterion 7: li-yau sharpness on the heat kernel") {
  Tally t{"7 li-yau-sharpness"};
  auto m = MetricSpec::euclidean(2);
  auto mu = MeasureSpec::lebesgue();
  SolveResult run;
  run.geometry = FieldGrid::torus(256, 8.0, 8.0);
  run.dt = 1e-4;
  auto kernel = [&](double t2, const Vec4& x) {
    double r2 = (x[0] - 4) * (x[0] - 4) + (x[1] - 4) * (x[1] - 4);
    return std::exp(-r2 / (4 * t2)) / (4 * M_PI * t2);
  };
  for (double tt : {0.2, 0.5, 1.0}) {
    Snapshot s;
    s.t = tt;
    s.u.resize(run.geometry.v.size());
    s.ut.resize(run.geometry.v.size());
    for (int j = 0; j < 256; ++j)
      for (int i = 0; i < 256; ++i) {
        Vec4 x = run.geometry.cell(i, j);
        std::size_t id = static_cast<std::size_t>(run.geometry.idx(i, j));
        s.u[id] = kernel(tt, x);
        s.ut[id] = (kernel(tt + run.dt, x) - kernel(tt - run.dt, x)) / (2 * run.dt);
      }
    run.snapshots.push_back(std::move(s));
  }
  auto frames = li_yau_H(m, mu, run, PotentialSpec::none(), 1.0);
  double worst = 0.0;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto& fr = frames[k];
    const auto& snap = run.snapshots[k];
    double umax = *std::max_element(snap.u.begin(), snap.u.end());
    for (std::size_t c = 0; c < fr.H.size(); ++c) {
      if (!fr.mask[c]) continue;
      int i = static_cast<int>(c) % 256, j = static_cast<int>(c) / 256;
      Vec4 x = run.geometry.cell(i, j);
      if (std::abs(x[0] - 4) > 3.0 || std::abs(x[1] - 4) > 3.0) continue;
      if (snap.u[c] < 1e-4 * umax) continue;  // resolvable support of the kernel
      worst = std::max(worst, std::abs(fr.F2[c] - fr.ft[c] - 1.0 / fr.t));
    }
  }
  t.note("max |F2 - f_t - n/2t| " + format_num(worst));
  CHECK(worst < 1e-3);
  t.ok = worst < 1e-3;
}

TEST_CASE("criterion 8: compact estimates") {
  Tally t{"8 compact-estimates"};
  auto mu = MeasureSpec::lebesgue();
  bool ok = true;

  // thm 5.1 on the flat torus and on a randers torus with q = 0.1 sin x1
  {
    auto e = MetricSpec::euclidean(2);
    FieldGrid u0 = FieldGrid::torus(96, 2 * M_PI, 2 * M_PI);
    u0.fill(Expr::parse("1 + 0.5*cos(x1)", 2));
    SolverConfig cfg;
    cfg.t_end = 1.0;
    cfg.snapshot_times = {0.1, 0.25, 0.5, 0.75};
    auto run = solve_schrodinger(e, mu, u0, PotentialSpec::none(), cfg);
    for (double beta : {1.5, 2.0}) {
      EstimateParams p;
      p.N = 3.0;
      p.beta = beta;
      p.t_lo = 0.05;
      p.t_hi = 0.95;
      auto rep = check_compact_N(e, mu, run, PotentialSpec::none(), p);
      ok = ok && rep.violations == 0;
      CHECK(rep.violations == 0);
    }
  }
  {
    auto m = MetricSpec::randers_constant(2, vec2(0.3, 0.0));
    auto q = PotentialSpec::expression(2, "0.1*sin(x1)");
    FieldGrid u0 = FieldGrid::torus(64, 2 * M_PI, 2 * M_PI);
    u0.fill(Expr::parse("1 + 0.5*cos(x1)", 2));
    SolverConfig cfg;
    cfg.t_end = 1.0;
    cfg.snapshot_times = {0.1, 0.3, 0.6, 0.9};
    auto run = solve_schrodinger(m, mu, u0, q, cfg);
    for (double beta : {1.5, 2.0}) {
      EstimateParams p;
      p.N = 3.0;
      p.beta = beta;
      p.t_lo = 0.05;
      p.t_hi = 0.95;
      auto rep = check_compact_N(m, mu, run, q, p);
      t.note("randers beta " + format_num(beta) + " min_margin " + format_num(rep.min_margin));
      ok = ok && rep.violations == 0;
      CHECK(rep.violations == 0);
    }
  }

  // thm 6.1: negative constant potential at t >= 5
  {
    auto e = MetricSpec::euclidean(2);
    auto q = PotentialSpec::constant(-0.1);
    FieldGrid u0 = FieldGrid::torus(64, 2 * M_PI, 2 * M_PI);
    u0.fill(Expr::parse("1 + 0.5*cos(x1)", 2));
    SolverConfig cfg;
    cfg.t_end = 6.0;
    cfg.snapshot_times = {5.0, 5.5};
    auto run = solve_schrodinger(e, mu, u0, q, cfg);
    EstimateParams p;
    p.t_lo = 4.5;
    auto rep = check_compact_inf(e, mu, run, q, p);
    t.note("thm6.1 q<0 violations " + std::to_string(rep.violations));
    ok = ok && rep.violations == 0 && !rep.degenerate_regime;
    CHECK(rep.violations == 0);
  }
  // thm 6.1: vanishing rhs regime checked as near-constancy at large t
  {
    auto e = MetricSpec::euclidean(2);
    FieldGrid u0 = FieldGrid::torus(48, 2 * M_PI, 2 * M_PI);
    u0.fill(Expr::parse("1 + 0.5*cos(x1)", 2));
    SolverConfig cfg;
    cfg.t_end = 20.0;
    cfg.snapshot_times = {16.0, 18.0};
    auto run = solve_schrodinger(e, mu, u0, PotentialSpec::none(), cfg);
    EstimateParams p;
    p.t_lo = 15.0;
    auto rep = check_compact_inf(e, mu, run, PotentialSpec::none(), p);
    t.note("thm6.1 degenerate violations " + std::to_string(rep.violations));
    ok = ok && rep.degenerate_regime && rep.violations == 0;
    CHECK(rep.degenerate_regime);
    CHECK(rep.violations == 0);
  }
  t.ok = ok;
}

namespace {

SolveResult kernel_ball_run(const MetricSpec& m, int n, double R2, double t_end,
                            std::vector<double> snaps) {
  auto mu = MeasureSpec::lebesgue();
  FieldGrid u0 = FieldGrid::ball(n, Vec4{}, R2, BoundaryKind::kNeumann);
  const double t0 = 0.1;
  for (int j = 0; j < u0.ny; ++j)
    for (int i = 0; i < u0.nx; ++i) {
      Vec4 x = u0.cell(i, j);
      double r2 = x[0] * x[0] + x[1] * x[1];
      u0.v[static_cast<std::size_t>(u0.idx(i, j))] =
          std::exp(-r2 / (4 * t0)) / (4 * M_PI * t0) + 1e-9;
    }
  SolverConfig cfg;
  cfg.t_end = t_end;
  cfg.snapshot_times = std::move(snaps);
  return solve_schrodinger(m, mu, u0, PotentialSpec::none(), cfg);
}

}  // namespace

TEST_CASE("criterion 9: noncompact empirical constants are finite and stable") {
  Tally t{"9 noncompact-stability"};
  auto mu = MeasureSpec::lebesgue();
  bool ok = true;
  auto stable = [](double a, double b) {
    return std::abs(a - b) <= 0.2 * std::max({std::abs(a), std::abs(b), 0.05});
  };

  for (int scenario = 0; scenario < 2; ++scenario) {
    MetricSpec m = scenario == 0
                       ? MetricSpec::euclidean(2)
                       : MetricSpec::randers(2, {{"1", "0"}, {"0", "1"}},
                                             {"0.2*exp(-(x1-0.3)^2-x2^2)", "0"});
    const char* label = scenario == 0 ? "euclid" : "randers";
    double c_base = 0.0, c_fine = 0.0, c_big = 0.0;
    double w_base = 0.0, w_fine = 0.0, w_big = 0.0;
    for (int variant = 0; variant < 3; ++variant) {
      int n = variant == 1 ? 128 : 64;
      double R = variant == 2 ? 1.5 : 1.0;
      auto run = kernel_ball_run(m, n, 2.0 * R, 0.3, {0.1, 0.2});
      REQUIRE(!run.aborted);
      EstimateParams p;
      p.N = 3.0;
      p.beta = 2.0;
      p.R = R;
      p.T = 0.3;
      p.t_lo = 0.05;
      p.curvature_samples = 64;
      auto repN = check_noncompact(m, mu, run, PotentialSpec::none(), p, NoncompactVariant::kN);
      auto repW = check_noncompact(m, mu, run, PotentialSpec::none(), p, NoncompactVariant::kInf);
      double cN = repN.empirical_constant, cW = repW.empirical_constant;
      if (variant == 0) { c_base = cN; w_base = cW; }
      if (variant == 1) { c_fine = cN; w_fine = cW; }
      if (variant == 2) { c_big = cN; w_big = cW; }
      ok = ok && std::isfinite(cN) && std::isfinite(cW);
    }
    t.note(std::string(label) + " C3 " + format_num(c_base) + "/" + format_num(c_fine) + "/" +
           format_num(c_big) + " C " + format_num(w_base) + "/" + format_num(w_fine) + "/" +
           format_num(w_big));
    CHECK(stable(c_base, c_fine));
    CHECK(stable(c_base, c_big));
    CHECK(stable(w_base, w_fine));
    CHECK(stable(w_base, w_big));
    ok = ok && stable(c_base, c_fine) && stable(c_base, c_big) && stable(w_base, w_fine) &&
         stable(w_base, w_big);
  }
  t.ok = ok;
}

TEST_CASE("criterion 10: harnack inequalities") {
  Tally t{"10 harnack"};
  auto mu = MeasureSpec::lebesgue();
  bool ok = true;

  // flat-space Q reference
  {
    auto e = MetricSpec::euclidean(2);
    FieldGrid geo = FieldGrid::torus(96, 8.0, 8.0);
    HarnackPair pr;
    pr.x1 = vec2(5.0, 4.0);
    pr.x2 = vec2(4.0, 4.0);
    pr.t1 = 0.25;
    pr.t2 = 0.5;
    double Q = harnack_Q(e, geo, PotentialSpec::none(), pr, 2.0);
    t.note("flat Q " + format_num(Q) + " (ref 2)");
    CHECK(Q == doctest::Approx(2.0).epsilon(0.05));
    ok = ok && std::abs(Q - 2.0) < 0.1;
  }

  // 100 random pairs on a randers torus
  {
    auto m = MetricSpec::randers_constant(2, vec2(0.3, 0.0));
    auto q = PotentialSpec::expression(2, "0.1*sin(x1)");
    FieldGrid u0 = FieldGrid::torus(48, 2 * M_PI, 2 * M_PI);
    u0.fill(Expr::parse("1 + 0.5*cos(x1)", 2));
    SolverConfig cfg;
    cfg.t_end = 0.6;
    cfg.snapshot_times = {0.3};
    auto run = solve_schrodinger(m, mu, u0, q, cfg);
    EstimateParams p;
    p.N = 3.0;
    p.beta = 2.0;
    Region reg = Region::box(2, Vec4{}, vec2(2 * M_PI, 2 * M_PI));
    p.K = measure_weighted_ricci(m, mu, reg, p.N, 48).K;
    auto pb = potential_bounds(m, mu, q, reg);
    p.gamma = pb.gamma;
    p.theta = pb.theta;
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ux(0.0, 2 * M_PI);
    std::vector<HarnackPair> pairs;
    for (int k = 0; k < 100; ++k)
      pairs.push_back({vec2(ux(rng), ux(rng)), vec2(ux(rng), ux(rng)), 0.3, 0.6});
    auto rep = harnack_check(m, mu, run, q, p, pairs);
    t.note("randers pairs " + std::to_string(rep.pairs) + " violations " +
           std::to_string(rep.violations));
    CHECK(rep.pairs == 100);
    CHECK(rep.violations == 0);
    ok = ok && rep.pairs == 100 && rep.violations == 0;
  }

  // 100 pairs on a euclidean ball kernel run with the chained C3
  {
    auto e = MetricSpec::euclidean(2);
    auto run = kernel_ball_run(e, 64, 2.0, 0.5, {0.25});
    EstimateParams p;
    p.N = 3.0;
    p.beta = 2.0;
    p.K = 0.0;
    p.gamma = 0.0;
    p.theta = 0.0;
    p.R = 1.0;
    p.T = 0.5;
    p.t_lo = 0.05;
    auto repC = check_noncompact(e, mu, run, PotentialSpec::none(), p, NoncompactVariant::kN);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ur(0.0, 0.9), ua(0.0, 2 * M_PI);
    std::vector<HarnackPair> pairs;
    for (int k = 0; k < 100; ++k) {
      double r1 = ur(rng), a1 = ua(rng), r2 = ur(rng), a2 = ua(rng);
      pairs.push_back({vec2(r1 * std::cos(a1), r1 * std::sin(a1)),
                       vec2(r2 * std::cos(a2), r2 * std::sin(a2)), 0.25, 0.5});
    }
    auto rep = harnack_check(e, mu, run, PotentialSpec::none(), p, pairs,
                             repC.empirical_constant);
    t.note("ball pairs " + std::to_string(rep.pairs) + " violations " +
           std::to_string(rep.violations));
    CHECK(rep.pairs == 100);
    CHECK(rep.violations == 0);
    ok = ok && rep.pairs == 100 && rep.violations == 0;
  }
  t.ok = ok;
}

TEST_CASE("criterion 11: cli determinism and negative path") {
  Tally t{"11 cli"};
#ifndef FINSLAB_CLI
  t.note("cli path not configured");
  CHECK(false);
#else
  const std::string cli = FINSLAB_CLI;
  const std::string cfgdir = FINSLAB_CONFIGS;
  auto run = [&](const std::string& args) {
    std::string cmd = cli + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return rc == -1 ? -1 : WEXITSTATUS(rc);
  };
  int rc1 = run("compare --config " + cfgdir + "/euclidean.ini --out /tmp/finslab_acc_a");
  int rc2 = run("compare --config " + cfgdir + "/euclidean.ini --out /tmp/finslab_acc_b");
  CHECK(rc1 == 0);
  CHECK(rc2 == 0);
  bool identical = false;
  {
    std::ifstream a("/tmp/finslab_acc_a/margins.csv", std::ios::binary);
    std::ifstream b("/tmp/finslab_acc_b/margins.csv", std::ios::binary);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    identical = sa.str() == sb.str() && !sa.str().empty();
  }
  t.note(std::string("seeded reruns byte-identical: ") + (identical ? "yes" : "no"));
  CHECK(identical);
  int rc3 = run("compare --config " + cfgdir +
                "/poincare_compare.ini --set compare.K=0 --set region.radius=0.82 "
                "--set compare.radius=0.82 --out /tmp/finslab_acc_c");
  t.note("understated-K exit " + std::to_string(rc3));
  CHECK(rc3 == 3);
  bool listed = false;
  {
    std::ifstream f("/tmp/finslab_acc_c/margins.csv");
    std::string line;
    std::getline(f, line);  // header
    while (std::getline(f, line))
      if (line.find('-') != std::string::npos) {
        std::stringstream ss(line);
        std::string r, lap, bound, margin;
        std::getline(ss, r, ',');
        std::getline(ss, lap, ',');
        std::getline(ss, bound, ',');
        std::getline(ss, margin, ',');
        if (!margin.empty() && std::stod(margin) < 0) listed = true;
      }
  }
  CHECK(listed);  // violation locations present in the emitted margins
  int rc4 = run("validate --config " + cfgdir + "/euclidean.ini");
  CHECK(rc4 == 0);
  t.ok = rc1 == 0 && rc2 == 0 && identical && rc3 == 3 && listed && rc4 == 0;
#endif
}
