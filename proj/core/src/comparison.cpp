#include "finslab/comparison.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "finslab/constants.hpp"
#include "finslab/curvature.hpp"
#include "finslab/detail/assembly.hpp"
#include "finslab/errors.hpp"
#include "finslab/fundamental.hpp"
#include "finslab/nonriemann.hpp"
#include "finslab/parallel.hpp"

namespace finslab {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

double ct(double c, double r) {
  if (!(r > 0.0)) throw DomainError("ct: r must be positive");
  if (c > 0.0) {
    double sc = std::sqrt(c);
    if (r >= M_PI / sc) throw DomainError("ct: r beyond the conjugate radius pi/sqrt(c)");
    return sc / std::tan(sc * r);
  }
  if (c < 0.0) {
    double sc = std::sqrt(-c);
    return sc / std::tanh(sc * r);
  }
  return 1.0 / r;
}

std::vector<double> nonlinear_laplacian_r(const MetricSpec& m, const MeasureSpec& mu,
                                          const DistanceField& field, const VField& vfield) {
  const auto& g = field.grid;
  const int nx = g.nx, ny = g.ny;
  const double h = g.h;
  const bool have_dr = !field.drx.empty();

  std::vector<double> out(static_cast<std::size_t>(g.cells()), kNaN);

  auto cell_ok = [&](int i, int j) {
    if (!g.valid(i, j)) return false;
    std::size_t id = static_cast<std::size_t>(g.idx(i, j));
    return field.reached[id] != 0 && std::isfinite(field.r[id]);
  };

  // horizontal faces: flux^1 between (i,j) and (i+1,j); vertical: flux^2
  std::vector<double> fx(static_cast<std::size_t>(g.cells()), kNaN);
  std::vector<double> fy(static_cast<std::size_t>(g.cells()), kNaN);

  auto face_flux = [&](int i, int j, bool horizontal) -> double {
    int i2 = horizontal ? i + 1 : i;
    int j2 = horizontal ? j : j + 1;
    if (!cell_ok(i, j) || !cell_ok(i2, j2)) return kNaN;
    std::size_t a = static_cast<std::size_t>(g.idx(i, j));
    std::size_t b = static_cast<std::size_t>(g.idx(i2, j2));
    Vec4 xa = g.center(i, j), xb = g.center(i2, j2);
    Vec4 xf = vec2(0.5 * (xa[0] + xb[0]), 0.5 * (xa[1] + xb[1]));
    if (!m.in_domain(std::span<const double>(xf.data(), 2))) return kNaN;

    Vec4 dr{};
    if (have_dr) {
      dr = vec2(0.5 * (field.drx[a] + field.drx[b]), 0.5 * (field.dry[a] + field.dry[b]));
    } else {
      // normal component from the two cells, tangential from a 4-cell average
      double normal = (field.r[b] - field.r[a]) / h;
      auto avg_tangent = [&](bool horiz) -> double {
        double acc = 0.0;
        int cnt = 0;
        auto add = [&](int ii, int jj, int i3, int j3) {
          if (cell_ok(ii, jj) && cell_ok(i3, j3)) {
            acc += (field.r[static_cast<std::size_t>(g.idx(ii, jj))] -
                    field.r[static_cast<std::size_t>(g.idx(i3, j3))]) /
                   (2 * h);
            ++cnt;
          }
        };
        if (horiz) {
          add(i, j + 1, i, j - 1);
          add(i2, j2 + 1, i2, j2 - 1);
        } else {
          add(i + 1, j, i - 1, j);
          add(i2 + 1, j2, i2 - 1, j2);
        }
        return cnt ? acc / cnt : kNaN;
      };
      double tang = avg_tangent(horizontal);
      if (!std::isfinite(tang)) return kNaN;
      dr = horizontal ? vec2(normal, tang) : vec2(tang, normal);
    }

    Vec4 V = vfield(xf, dr);
    if (norm2(2, V) < kZeroDirectionTol) return kNaN;
    Mat4 gm = detail::fundamental_form(m, 2, xf, V);
    Mat4 gi = inverse(2, gm);
    double phi = mu.log_density(xf, 2);
    double flux0 = gi[0][0] * dr[0] + gi[0][1] * dr[1];
    double flux1 = gi[1][0] * dr[0] + gi[1][1] * dr[1];
    return std::exp(phi) * (horizontal ? flux0 : flux1);
  };

  parallel_for(static_cast<std::size_t>(ny), [&](std::size_t jj) {
    int j = static_cast<int>(jj);
    for (int i = 0; i < nx; ++i) {
      if (i + 1 < nx) fx[static_cast<std::size_t>(g.idx(i, j))] = face_flux(i, j, true);
      if (j + 1 < ny) fy[static_cast<std::size_t>(g.idx(i, j))] = face_flux(i, j, false);
    }
  });

  parallel_for(static_cast<std::size_t>(ny), [&](std::size_t jj) {
    int j = static_cast<int>(jj);
    if (j < 1 || j >= ny - 1) return;
    for (int i = 1; i < nx - 1; ++i) {
      std::size_t id = static_cast<std::size_t>(g.idx(i, j));
      double e = fx[id];
      double w = fx[static_cast<std::size_t>(g.idx(i - 1, j))];
      double nn = fy[id];
      double s = fy[static_cast<std::size_t>(g.idx(i, j - 1))];
      if (!std::isfinite(e) || !std::isfinite(w) || !std::isfinite(nn) || !std::isfinite(s))
        continue;
      Vec4 xc = g.center(i, j);
      if (!m.in_domain(std::span<const double>(xc.data(), 2))) continue;
      double phi = mu.log_density(xc, 2);
      out[id] = std::exp(-phi) * ((e - w) + (nn - s)) / h;
    }
  });
  return out;
}

double ricci_family(const MetricSpec& m, const MeasureSpec& mu, const Vec4& x, const Vec4& V,
                    const Vec4& W, double k, RicciKind which, const Vec4& flag_u) {
  const int n = m.dimension();
  require_nonzero(n, V, "ricci_family");
  if (k < n) throw ConfigError("ricci_family: k must satisfy k >= n");
  if (k > n && k != kInf && k <= n) throw ConfigError("ricci_family: bad k");

  // normalize the pole to the indicatrix
  Vec4 pole = V;
  double f = m.norm(x, V);
  for (int i = 0; i < n; ++i) pole[static_cast<std::size_t>(i)] /= f;

  auto ds = distortion_s(m, mu, x, pole);
  const double S = ds.S, Sdot = ds.Sdot;

  double base;  // Ric-like term
  switch (which) {
    case RicciKind::kWeighted: {
      base = ricci_scalar(m, x, pole).ricci;
      break;
    }
    case RicciKind::kMixed: {
      require_nonzero(n, W, "ricci_family(mixed)");
      auto rd = ricci_scalar(m, x, pole);
      Mat4 gw = detail::fundamental_form(m, n, x, W);
      Mat4 gwi = inverse(n, gw);
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          acc += gwi[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
                 rd.flag_form[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      base = acc;
      break;
    }
    case RicciKind::kWeightedFlag: {
      require_nonzero(n, flag_u, "ricci_family(weighted_flag)");
      double kf = flag_curvature(m, x, pole, flag_u);
      // K^k(V;W) branches share the flag term; S-corrections divide by (n-1)F^2 = n-1
      if (k == kInf) return kf + Sdot / (n - 1);
      if (k == static_cast<double>(n)) {
        if (std::abs(S) > 1e-10) return -kInf;
        return kf + Sdot / (n - 1);
      }
      return kf + Sdot / (n - 1) - S * S / ((n - 1) * (k - n));
    }
  }

  if (k == kInf) return base + Sdot;
  if (k == static_cast<double>(n)) {
    if (std::abs(S) > 1e-10) return -kInf;
    return base + Sdot;
  }
  return base + Sdot - S * S / (k - n);
}

namespace {

struct CurvatureBound {
  double K = 0.0;      // max(0, -inf of the sampled curvature)
  double tol = 0.0;
  double Kprime = 0.0; // sup |S| (infty mode)
};

// sampled infimum of the mode-relevant curvature over smooth cells, pole =
// grad r, tracing/flag vectors from a direction fan
CurvatureBound curvature_lower_bound(const MetricSpec& m, const MeasureSpec& mu,
                                     const DistanceField& field, const CompareConfig& cfg) {
  const auto& g = field.grid;
  std::vector<std::size_t> pts;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      std::size_t id = static_cast<std::size_t>(g.idx(i, j));
      if (field.smooth[id]) pts.push_back(id);
    }
  if (pts.empty()) throw DomainError("verify_comparison: empty smooth region");
  std::size_t stride = std::max<std::size_t>(1, pts.size() / static_cast<std::size_t>(cfg.curvature_samples));
  std::vector<std::size_t> sel;
  for (std::size_t i = 0; i < pts.size(); i += stride) sel.push_back(pts[i]);

  const double Nk = cfg.N;
  auto eval_at = [&](std::size_t id, int fan, double* out_min, double* out_smax) {
    int i = static_cast<int>(id) % g.nx;
    int j = static_cast<int>(id) / g.nx;
    Vec4 x = g.center(i, j);
    Vec4 pole = vec2(field.gx[id], field.gy[id]);
    if (norm2(2, pole) < kZeroDirectionTol) return;
    double mn = kInf, smax = 0.0;
    try {
      auto ds = distortion_s(m, mu, x, pole);
      smax = std::abs(ds.S);
      if (cfg.mode == CompareMode::kFlag) {
        for (int a = 0; a < fan; ++a) {
          double th = 2.0 * M_PI * (a + 0.25) / fan;
          Vec4 u = vec2(std::cos(th), std::sin(th));
          if (std::abs(pole[0] * u[1] - pole[1] * u[0]) < 0.1) continue;
          double kf = flag_curvature(m, x, pole, u);
          double v = kf + ds.Sdot - ds.S * ds.S / (Nk - 2.0);  // n=2: (n-1)=1
          mn = std::min(mn, v);
        }
      } else {
        auto rd = ricci_scalar(m, x, pole);
        double corr = cfg.mode == CompareMode::kInfty ? ds.Sdot
                                                      : ds.Sdot - ds.S * ds.S / (Nk - 2.0);
        for (int a = 0; a < fan; ++a) {
          double th = 2.0 * M_PI * (a + 0.25) / fan;
          Vec4 W = vec2(std::cos(th), std::sin(th));
          Mat4 gw = detail::fundamental_form(m, 2, x, W);
          Mat4 gwi = inverse(2, gw);
          double tr = 0.0;
          for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q) tr += gwi[p][q] * rd.flag_form[p][q];
          mn = std::min(mn, tr + corr);
        }
        // include the pole itself as tracing vector
        double tr = 0.0;
        for (int p = 0; p < 2; ++p)
          for (int q = 0; q < 2; ++q) tr += rd.g_inv[p][q] * rd.flag_form[p][q];
        mn = std::min(mn, tr + corr);
      }
    } catch (const Error&) {
      return;  // stencil left the domain; skip the sample
    }
    *out_min = std::min(*out_min, mn);
    *out_smax = std::max(*out_smax, smax);
  };

  std::vector<double> mins(sel.size(), kInf), smaxs(sel.size(), 0.0);
  parallel_for(sel.size(), [&](std::size_t s) { eval_at(sel[s], 8, &mins[s], &smaxs[s]); });
  double mn = kInf, smax = 0.0;
  std::size_t arg = 0;
  for (std::size_t s = 0; s < sel.size(); ++s) {
    if (mins[s] < mn) { mn = mins[s]; arg = s; }
    smax = std::max(smax, smaxs[s]);
  }
  if (mn == kInf) throw ConvergenceError("curvature sampling produced no admissible points");

  // refinement: denser fan near the minimizer and its grid neighborhood
  double mn2 = kInf, sm2 = 0.0;
  {
    std::size_t id = sel[arg];
    int i = static_cast<int>(id) % g.nx;
    int j = static_cast<int>(id) / g.nx;
    for (int dj = -2; dj <= 2; ++dj)
      for (int di = -2; di <= 2; ++di) {
        if (!g.valid(i + di, j + dj)) continue;
        std::size_t nid = static_cast<std::size_t>(g.idx(i + di, j + dj));
        if (!field.smooth[nid]) continue;
        eval_at(nid, 32, &mn2, &sm2);
      }
  }
  double refined = std::min(mn, mn2);
  CurvatureBound out;
  out.K = std::max(0.0, -refined);
  out.tol = std::abs(refined - mn) + 1e-9;
  out.Kprime = std::max(smax, sm2);
  return out;
}

}  // namespace

ComparisonReport verify_comparison(const MetricSpec& m, const MeasureSpec& mu,
                                   const CompareConfig& cfg) {
  if (m.dimension() != 2) throw ConfigError("verify_comparison: 2-D domains only");
  const int n = 2;

  GridSpec2 grid = GridSpec2::covering(cfg.p, cfg.radius, cfg.grid_n);
  ShootingParams sp;
  sp.rays = cfg.shooting_rays;
  sp.coverage_radius = cfg.radius + 2.0 * grid.h;
  DistanceField field = distance_field_shooting(m, cfg.p, grid, sp);

  ComparisonReport rep;
  rep.N = cfg.N;

  if (cfg.crosscheck_eikonal) {
    GridSpec2 coarse = GridSpec2::covering(cfg.p, cfg.radius, std::min(cfg.grid_n, 96));
    auto fe = distance_field_eikonal(m, cfg.p, coarse);
    auto fs = distance_field_shooting(m, cfg.p, coarse, sp);
    double dis = distance_field_disagreement(fs, fe);
    rep.disagreement_warning = dis > 10.0 * coarse.h;
    rep.notes += "eikonal crosscheck max |dr| = " + std::to_string(dis) + "\n";
  }

  // constants of the bound
  rep.alpha = misalignment_region(m, Region::ball(2, cfg.p, cfg.radius), cfg.alpha_tol);
  double k0_measured = k0_bound(m, mu, Region::ball(2, cfg.p, cfg.radius), cfg.k0_samples, cfg.seed);
  auto cb = curvature_lower_bound(m, mu, field, cfg);
  double K_measured = cb.K;
  if (cfg.mode == CompareMode::kInfty) K_measured = cb.K + cb.Kprime * cb.Kprime / (cfg.N - n);

  rep.K = K_measured;
  rep.K0 = k0_measured;
  rep.override_understated = false;
  if (cfg.K_override >= 0.0) {
    if (cfg.K_override < K_measured - cb.tol) rep.override_understated = true;
    rep.K = cfg.K_override;
  }
  if (cfg.K0_override >= 0.0) {
    if (cfg.K0_override < k0_measured * 0.999) rep.override_understated = true;
    rep.K0 = cfg.K0_override;
  }
  rep.K_tol = cb.tol;
  rep.C = cfg.N + (rep.alpha - 1.0) * n - rep.alpha;
  rep.l = rep.K / rep.C;
  rep.C0 = std::sqrt(rep.alpha) * rep.K0;

  auto bound_at = [&](double r, double K) {
    if (cfg.mode == CompareMode::kFlag)
      return rep.alpha * (cfg.N - 1.0) * ct(-K, r) + rep.C0;
    return rep.C * ct(-K / rep.C, r) + rep.C0;
  };

  // laplacian passes per V-policy
  std::vector<std::vector<double>> passes;
  auto add_constant_pass = [&](const Vec4& v) {
    passes.push_back(nonlinear_laplacian_r(
        m, mu, field, [v](const Vec4&, const Vec4&) { return v; }));
  };
  // gradient pass: V = grad r, raised from the face differential
  passes.push_back(nonlinear_laplacian_r(
      m, mu, field, [&](const Vec4& xf, const Vec4& drf) {
        Vec4 hint = vec2(xf[0] - cfg.p[0], xf[1] - cfg.p[1]);  // radial warm start
        try {
          return legendre_to_tangent(
                     m, xf, drf,
                     norm2(2, hint) > 1e-9 ? std::optional<Vec4>(hint) : std::nullopt)
              .v;
        } catch (const Error&) {
          return Vec4{};
        }
      }));
  if (cfg.policy == VPolicy::kConstant) {
    add_constant_pass(cfg.constant_v);
  } else if (cfg.policy == VPolicy::kRotating) {
    passes.push_back(nonlinear_laplacian_r(m, mu, field, [&](const Vec4& xf, const Vec4&) {
      double th = 2.0 * M_PI *
                  std::fmod(std::abs(std::sin(xf[0] * 12.9898 + xf[1] * 78.233) * 43758.5453), 1.0);
      return vec2(std::cos(th), std::sin(th));
    }));
  } else if (cfg.policy == VPolicy::kFanSweep) {
    for (int a = 0; a < cfg.fan; ++a) {
      double th = 2.0 * M_PI * a / cfg.fan;
      add_constant_pass(vec2(std::cos(th), std::sin(th)));
    }
  }

  // margins on the smooth mask with a 3h boundary buffer
  const auto& g = field.grid;
  rep.min_margin = kInf;
  double margin_floor = 0.0;
  for (int j = 1; j < g.ny - 1; ++j) {
    for (int i = 1; i < g.nx - 1; ++i) {
      std::size_t id = static_cast<std::size_t>(g.idx(i, j));
      if (!field.smooth[id]) continue;
      Vec4 xc = g.center(i, j);
      double de = std::hypot(xc[0] - cfg.p[0], xc[1] - cfg.p[1]);
      if (de > cfg.radius - 3.0 * g.h) continue;
      double r = field.r[id];
      if (!std::isfinite(r) || r <= 3.0 * g.h) continue;

      double worst_lap = -kInf;
      bool have = false;
      for (const auto& pass : passes) {
        double v = pass[id];
        if (std::isfinite(v)) { worst_lap = std::max(worst_lap, v); have = true; }
      }
      if (!have) continue;

      double bound = bound_at(r, rep.K);
      double margin = bound - worst_lap;
      // measurement tolerance: how much the bound could move within K_tol
      double tol_here = std::abs(bound_at(r, rep.K + rep.K_tol) - bound) + 1e-9;
      rep.rows.push_back({r, worst_lap, bound, margin});
      ++rep.evaluated;
      if (margin < rep.min_margin) rep.min_margin = margin;
      if (margin < -tol_here) ++rep.violations;
      margin_floor = std::min(margin_floor, -tol_here);
    }
  }
  if (rep.evaluated == 0) throw DomainError("verify_comparison: no evaluable cells");
  rep.notes += "alpha=" + std::to_string(rep.alpha) + " K=" + std::to_string(rep.K) +
               " K0=" + std::to_string(rep.K0) + " C=" + std::to_string(rep.C) +
               " C0=" + std::to_string(rep.C0) + "\n";
  return rep;
}

}  // namespace finslab
