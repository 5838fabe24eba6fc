#include "finslab/constants.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "finslab/detail/assembly.hpp"
#include "finslab/errors.hpp"
#include "finslab/parallel.hpp"

namespace finslab {

namespace {

// direction on the euclidean sphere from n-1 angles
Vec4 dir_from_angles(int n, const double* a) {
  Vec4 d{};
  if (n == 2) {
    d[0] = std::cos(a[0]);
    d[1] = std::sin(a[0]);
  } else if (n == 3) {
    d[0] = std::sin(a[1]) * std::cos(a[0]);
    d[1] = std::sin(a[1]) * std::sin(a[0]);
    d[2] = std::cos(a[1]);
  } else {
    d[0] = std::sin(a[2]) * std::sin(a[1]) * std::cos(a[0]);
    d[1] = std::sin(a[2]) * std::sin(a[1]) * std::sin(a[0]);
    d[2] = std::sin(a[2]) * std::cos(a[1]);
    d[3] = std::cos(a[2]);
  }
  return d;
}

int angle_count(int n) { return n - 1; }

// angular grid over the sphere; for n=2 a uniform circle of size `base`
std::vector<std::array<double, 3>> angle_grid(int n, int base) {
  std::vector<std::array<double, 3>> grid;
  if (n == 2) {
    for (int i = 0; i < base; ++i)
      grid.push_back({2.0 * M_PI * i / base, 0.0, 0.0});
    return grid;
  }
  int polar = std::max(4, base / 2);
  if (n == 3) {
    for (int j = 1; j < polar; ++j) {
      double phi = M_PI * j / polar;
      for (int i = 0; i < base; ++i) grid.push_back({2.0 * M_PI * i / base, phi, 0.0});
    }
    grid.push_back({0.0, 0.0, 0.0});
    grid.push_back({0.0, M_PI, 0.0});
    return grid;
  }
  for (int k = 1; k < polar; ++k)
    for (int j = 1; j < polar; ++j)
      for (int i = 0; i < base; ++i)
        grid.push_back({2.0 * M_PI * i / base, M_PI * j / polar, M_PI * k / polar});
  grid.push_back({0.0, 0.0, 0.0});
  grid.push_back({0.0, 0.0, M_PI});
  return grid;
}

// Nelder-Mead maximization, small and deterministic
double nelder_mead(std::function<double(const std::vector<double>&)> f, std::vector<double>& x0,
                   double scale, int max_iter, double tol) {
  const std::size_t d = x0.size();
  std::vector<std::vector<double>> pts(d + 1, x0);
  std::vector<double> vals(d + 1);
  for (std::size_t i = 0; i < d; ++i) pts[i + 1][i] += scale;
  for (std::size_t i = 0; i <= d; ++i) vals[i] = f(pts[i]);

  for (int it = 0; it < max_iter; ++it) {
    // order descending (maximization)
    std::vector<std::size_t> idx(d + 1);
    for (std::size_t i = 0; i <= d; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
    if (vals[idx[0]] - vals[idx[d]] < tol) break;

    std::vector<double> centroid(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t k = 0; k < d; ++k) centroid[k] += pts[idx[i]][k] / static_cast<double>(d);
    auto mix = [&](double t) {
      std::vector<double> p(d);
      for (std::size_t k = 0; k < d; ++k)
        p[k] = centroid[k] + t * (pts[idx[d]][k] - centroid[k]);
      return p;
    };
    auto refl = mix(-1.0);
    double fr = f(refl);
    if (fr > vals[idx[0]]) {
      auto exp_ = mix(-2.0);
      double fe = f(exp_);
      if (fe > fr) { pts[idx[d]] = exp_; vals[idx[d]] = fe; }
      else { pts[idx[d]] = refl; vals[idx[d]] = fr; }
    } else if (fr > vals[idx[d - 1]]) {
      pts[idx[d]] = refl;
      vals[idx[d]] = fr;
    } else {
      auto con = mix(0.5);
      double fc = f(con);
      if (fc > vals[idx[d]]) { pts[idx[d]] = con; vals[idx[d]] = fc; }
      else {
        for (std::size_t i = 1; i <= d; ++i) {
          for (std::size_t k = 0; k < d; ++k)
            pts[idx[i]][k] = 0.5 * (pts[idx[i]][k] + pts[idx[0]][k]);
          vals[idx[i]] = f(pts[idx[i]]);
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i <= d; ++i)
    if (vals[i] > vals[best]) best = i;
  x0 = pts[best];
  return vals[best];
}

struct PointTables {
  int n;
  std::vector<std::array<double, 3>> angles;
  std::vector<Mat4> g;        // g at (x, V(angle))
  std::vector<Vec4> dirs;
  // T[v][y] = g_{V_v}(Y_y, Y_y)
  std::vector<std::vector<double>> T;
};

PointTables build_tables(const MetricSpec& m, const Vec4& x, int base) {
  const int n = m.dimension();
  PointTables pt;
  pt.n = n;
  pt.angles = angle_grid(n, base);
  const std::size_t M = pt.angles.size();
  pt.g.resize(M);
  pt.dirs.resize(M);
  parallel_for(M, [&](std::size_t i) {
    Vec4 d = dir_from_angles(n, pt.angles[i].data());
    pt.dirs[i] = d;
    pt.g[i] = detail::fundamental_form(m, n, x, d);
  });
  pt.T.assign(M, std::vector<double>(M, 0.0));
  parallel_for(M, [&](std::size_t v) {
    for (std::size_t y = 0; y < M; ++y)
      pt.T[v][y] = quadratic_form(n, pt.g[v], pt.dirs[y], pt.dirs[y]);
  });
  return pt;
}

double ratio_objective(const MetricSpec& m, const Vec4& x, int n,
                       const std::vector<double>& a) {
  // a = angles of (V, W, Y)
  int na = angle_count(n);
  Vec4 V = dir_from_angles(n, a.data());
  Vec4 W = dir_from_angles(n, a.data() + na);
  Vec4 Y = dir_from_angles(n, a.data() + 2 * na);
  Mat4 gv = detail::fundamental_form(m, n, x, V);
  Mat4 gw = detail::fundamental_form(m, n, x, W);
  return std::log(quadratic_form(n, gv, Y, Y)) - std::log(quadratic_form(n, gw, Y, Y));
}

}  // namespace

double misalignment_bruteforce(const MetricSpec& m, const Vec4& x, int base) {
  auto pt = build_tables(m, x, base);
  const std::size_t M = pt.angles.size();
  double best = 1.0;
  for (std::size_t y = 0; y < M; ++y) {
    double hi = pt.T[0][y], lo = pt.T[0][y];
    for (std::size_t v = 1; v < M; ++v) {
      hi = std::max(hi, pt.T[v][y]);
      lo = std::min(lo, pt.T[v][y]);
    }
    best = std::max(best, hi / lo);
  }
  return best;
}

MisalignmentReport misalignment_local(const MetricSpec& m, const Vec4& x, double tol) {
  if (tol < 1e-8 || tol > 1e-2) throw ConfigError("misalignment tolerance out of [1e-8, 1e-2]");
  const int n = m.dimension();
  m.require_domain(std::span<const double>(x.data(), static_cast<std::size_t>(n)));

  const int base = n == 2 ? 64 : (n == 3 ? 24 : 12);
  auto pt = build_tables(m, x, base);
  const std::size_t M = pt.angles.size();

  MisalignmentReport rep;

  // grid stage: alpha factorizes through per-Y max/min over the tables
  double best = 1.0, worst = 1.0;
  std::size_t by = 0, bv = 0, bw = 0, wy = 0, wv = 0, ww = 0;
  for (std::size_t y = 0; y < M; ++y) {
    std::size_t hi = 0, lo = 0;
    for (std::size_t v = 1; v < M; ++v) {
      if (pt.T[v][y] > pt.T[hi][y]) hi = v;
      if (pt.T[v][y] < pt.T[lo][y]) lo = v;
    }
    double r = pt.T[hi][y] / pt.T[lo][y];
    if (r > best) { best = r; by = y; bv = hi; bw = lo; }
    double rm = pt.T[lo][y] / pt.T[hi][y];
    if (rm < worst) { worst = rm; wy = y; wv = lo; ww = hi; }
  }

  // kappa = sup g_V(Y,Y)/F^2(Y) and kappa* = inf, with F^2(Y) = T[y][y]
  double kap = 1.0, kaps = 1.0;
  for (std::size_t y = 0; y < M; ++y)
    for (std::size_t v = 0; v < M; ++v) {
      double r = pt.T[v][y] / pt.T[y][y];
      kap = std::max(kap, r);
      kaps = std::min(kaps, r);
    }
  // rho = sup F(V)/F(-V); antipodal direction from the grid diagonal
  double rho = 1.0;
  for (std::size_t y = 0; y < M; ++y) {
    Vec4 nd{};
    for (int i = 0; i < n; ++i) nd[static_cast<std::size_t>(i)] = -pt.dirs[y][static_cast<std::size_t>(i)];
    double fwd = std::sqrt(pt.T[y][y]);
    double bwd = m.norm(x, nd);
    rho = std::max(rho, fwd / bwd);
  }

  if (best - 1.0 < 1e-9) {
    // riemannian plateau: no refinement below the tie threshold
    rep.alpha_M = 1.0;
    rep.alpha_m = 1.0;
    rep.alpha = 1.0;
    rep.kappa = kap;
    rep.kappa_star = kaps;
    rep.rho = rho;
    rep.degenerate = true;
    rep.tol_achieved = best - 1.0;
    return rep;
  }

  const int na = angle_count(n);
  auto pack = [&](std::size_t v, std::size_t w, std::size_t y) {
    std::vector<double> a(static_cast<std::size_t>(3 * na));
    for (int k = 0; k < na; ++k) {
      a[static_cast<std::size_t>(k)] = pt.angles[v][static_cast<std::size_t>(k)];
      a[static_cast<std::size_t>(na + k)] = pt.angles[w][static_cast<std::size_t>(k)];
      a[static_cast<std::size_t>(2 * na + k)] = pt.angles[y][static_cast<std::size_t>(k)];
    }
    return a;
  };

  double step = 2.0 * M_PI / base;
  auto obj = [&](const std::vector<double>& a) { return ratio_objective(m, x, n, a); };

  std::vector<double> amax = pack(bv, bw, by);
  double lrmax = nelder_mead(obj, amax, 0.7 * step, 400, tol * 0.05);
  std::vector<double> amin = pack(wv, ww, wy);
  auto neg = [&](const std::vector<double>& a) { return -ratio_objective(m, x, n, a); };
  double lrmin = nelder_mead(neg, amin, 0.7 * step, 400, tol * 0.05);

  rep.alpha_M = std::exp(std::max(lrmax, std::log(best)));
  rep.alpha_m = std::exp(-std::max(lrmin, -std::log(worst)));
  rep.alpha = rep.alpha_M;
  rep.kappa = kap;
  rep.kappa_star = kaps;
  rep.rho = rho;
  rep.witness_max.V = dir_from_angles(n, amax.data());
  rep.witness_max.W = dir_from_angles(n, amax.data() + na);
  rep.witness_max.Y = dir_from_angles(n, amax.data() + 2 * na);
  rep.witness_min.V = dir_from_angles(n, amin.data());
  rep.witness_min.W = dir_from_angles(n, amin.data() + na);
  rep.witness_min.Y = dir_from_angles(n, amin.data() + 2 * na);
  rep.tol_achieved = tol;

  // refine kappa and kappa_star the same way
  {
    auto kobj = [&](const std::vector<double>& a) {
      Vec4 V = dir_from_angles(n, a.data());
      Vec4 Y = dir_from_angles(n, a.data() + na);
      Mat4 gv = detail::fundamental_form(m, n, x, V);
      return std::log(quadratic_form(n, gv, Y, Y)) - std::log(m.fsq(x, Y));
    };
    std::size_t kv = 0, ky = 0, sv = 0, sy = 0;
    double kb = -1e300, ks = 1e300;
    for (std::size_t y = 0; y < M; ++y)
      for (std::size_t v = 0; v < M; ++v) {
        double r = pt.T[v][y] / pt.T[y][y];
        if (r > kb) { kb = r; kv = v; ky = y; }
        if (r < ks) { ks = r; sv = v; sy = y; }
      }
    std::vector<double> ka(static_cast<std::size_t>(2 * na));
    for (int k = 0; k < na; ++k) {
      ka[static_cast<std::size_t>(k)] = pt.angles[kv][static_cast<std::size_t>(k)];
      ka[static_cast<std::size_t>(na + k)] = pt.angles[ky][static_cast<std::size_t>(k)];
    }
    rep.kappa = std::exp(std::max(nelder_mead(kobj, ka, 0.7 * step, 300, tol * 0.05), std::log(kb)));
    auto nkobj = [&](const std::vector<double>& a) { return -kobj(a); };
    std::vector<double> sa(static_cast<std::size_t>(2 * na));
    for (int k = 0; k < na; ++k) {
      sa[static_cast<std::size_t>(k)] = pt.angles[sv][static_cast<std::size_t>(k)];
      sa[static_cast<std::size_t>(na + k)] = pt.angles[sy][static_cast<std::size_t>(k)];
    }
    rep.kappa_star = std::exp(-std::max(nelder_mead(nkobj, sa, 0.7 * step, 300, tol * 0.05), -std::log(ks)));
  }
  // refine rho over the single direction angle
  {
    auto robj = [&](const std::vector<double>& a) {
      Vec4 V = dir_from_angles(n, a.data());
      Vec4 nd{};
      for (int i = 0; i < n; ++i) nd[static_cast<std::size_t>(i)] = -V[static_cast<std::size_t>(i)];
      return std::log(m.norm(x, V)) - std::log(m.norm(x, nd));
    };
    std::size_t rb = 0;
    double rv = -1e300;
    for (std::size_t y = 0; y < M; ++y) {
      std::vector<double> a(pt.angles[y].begin(), pt.angles[y].begin() + na);
      double v = robj(a);
      if (v > rv) { rv = v; rb = y; }
    }
    std::vector<double> ra(pt.angles[rb].begin(), pt.angles[rb].begin() + na);
    rep.rho = std::exp(std::max(nelder_mead(robj, ra, 0.7 * step, 200, tol * 0.05), rv));
  }
  return rep;
}

double misalignment_region(const MetricSpec& m, const Region& region, double tol) {
  const int n = m.dimension();
  double pitch = region.kind == RegionKind::kBall
                     ? std::max(region.radius / 6.0, 1e-3)
                     : std::max((region.hi[0] - region.lo[0]) / 8.0, 1e-3);
  auto pts = region.lattice(pitch);
  if (pts.empty()) throw DomainError("misalignment_region: empty region");

  // coarse pass over the lattice, fine pass at the top candidates
  std::vector<double> coarse(pts.size(), 1.0);
  parallel_for(pts.size(), [&](std::size_t i) {
    if (!m.in_domain(std::span<const double>(pts[i].data(), static_cast<std::size_t>(n)))) return;
    coarse[i] = misalignment_bruteforce(m, pts[i], n == 2 ? 32 : 12);
  });
  std::vector<std::size_t> order(pts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return coarse[a] > coarse[b]; });

  double best = 1.0;
  std::size_t top = std::min<std::size_t>(3, order.size());
  for (std::size_t k = 0; k < top; ++k) {
    auto rep = misalignment_local(m, pts[order[k]], tol);
    best = std::max(best, rep.alpha);
  }
  return best;
}

UniformConstants uniform_constants(const MetricSpec& m, const Region& region, double tol) {
  const int n = m.dimension();
  double pitch = region.kind == RegionKind::kBall
                     ? std::max(region.radius / 5.0, 1e-3)
                     : std::max((region.hi[0] - region.lo[0]) / 6.0, 1e-3);
  auto pts = region.lattice(pitch);
  if (pts.empty()) throw DomainError("uniform_constants: empty region");
  std::vector<UniformConstants> per(pts.size());
  std::vector<char> valid(pts.size(), 0);
  parallel_for(pts.size(), [&](std::size_t i) {
    if (!m.in_domain(std::span<const double>(pts[i].data(), static_cast<std::size_t>(n)))) return;
    auto rep = misalignment_local(m, pts[i], tol);
    per[i] = UniformConstants{rep.kappa, rep.kappa_star, rep.rho};
    valid[i] = 1;
  });
  UniformConstants out;
  out.kappa = 1.0;
  out.kappa_star = 1.0;
  out.rho = 1.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!valid[i]) continue;
    out.kappa = std::max(out.kappa, per[i].kappa);
    out.kappa_star = std::min(out.kappa_star, per[i].kappa_star);
    out.rho = std::max(out.rho, per[i].rho);
  }
  return out;
}

}  // namespace finslab
