#include "finslab/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "finslab/errors.hpp"
#include "finslab/fundamental.hpp"
#include "finslab/geodesic.hpp"
#include "finslab/parallel.hpp"

namespace finslab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// F-length of the straight segment a->b by 8-interval Simpson in the metric
double segment_length(const MetricSpec& m, const Vec4& a, const Vec4& b) {
  Vec4 d = vec2(b[0] - a[0], b[1] - a[1]);
  if (norm2(2, d) < 1e-300) return 0.0;
  auto f = [&](double s) {
    Vec4 x = vec2(a[0] + s * d[0], a[1] + s * d[1]);
    return m.norm(x, d);
  };
  const int k = 8;
  double acc = f(0.0) + f(1.0);
  for (int i = 1; i < k; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(i / static_cast<double>(k));
  return acc / (3.0 * k);
}

struct Ray {
  std::vector<Vec4> x, y;  // states at t_j = j*dt
};

}  // namespace

DistanceField distance_field_shooting(const MetricSpec& m, const Vec4& p, const GridSpec2& grid,
                                      const ShootingParams& params) {
  if (m.dimension() != 2) throw ConfigError("distance fields are 2-D");
  m.require_domain(std::span<const double>(p.data(), 2));

  DistanceField out;
  out.grid = grid;
  out.p = p;
  out.method = DistanceMethod::kShooting;
  const int cells = grid.cells();
  out.r.assign(cells, kInf);
  out.drx.assign(cells, 0.0);
  out.dry.assign(cells, 0.0);
  out.gx.assign(cells, 0.0);
  out.gy.assign(cells, 0.0);
  out.smooth.assign(cells, 0);
  out.reached.assign(cells, 0);

  // travel-time budget: straight-segment lengths upper-bound the distance;
  // probe every in-domain cell on the grid boundary plus interior strides
  double t_max = params.t_max;
  if (t_max <= 0.0) {
    double far = 0.0;
    auto probe = [&](int i, int j) {
      Vec4 x = grid.center(i, j);
      if (!m.in_domain(std::span<const double>(x.data(), 2))) return;
      if (params.coverage_radius > 0.0 &&
          std::hypot(x[0] - p[0], x[1] - p[1]) > params.coverage_radius)
        return;
      far = std::max(far, segment_length(m, p, x));
    };
    for (int i = 0; i < grid.nx; ++i) {
      probe(i, 0);
      probe(i, grid.ny - 1);
    }
    for (int j = 0; j < grid.ny; ++j) {
      probe(0, j);
      probe(grid.nx - 1, j);
    }
    int stride = std::max(1, grid.nx / 16);
    for (int j = 0; j < grid.ny; j += stride)
      for (int i = 0; i < grid.nx; i += stride) probe(i, j);
    t_max = 1.25 * far + 10.0 * grid.h;
  }

  const int K = params.rays;
  const double dt = params.dt;
  const int steps = static_cast<int>(std::ceil(t_max / dt));
  const double dtheta = 2.0 * M_PI / K;

  std::vector<Ray> rays(static_cast<std::size_t>(K));
  parallel_for(static_cast<std::size_t>(K), [&](std::size_t k) {
    double th = dtheta * static_cast<double>(k);
    Vec4 dir = vec2(std::cos(th), std::sin(th));
    double f = m.norm(p, dir);
    Vec4 y0 = vec2(dir[0] / f, dir[1] / f);
    auto path = geodesic(m, p, y0, dt * steps, steps);
    rays[k].x = std::move(path.x);
    rays[k].y = std::move(path.y);
  });

  // candidate registration: best and an angularly-separated runner-up
  struct Cand {
    double r = kInf;
    int ray = -1, j = -1;
    double r2 = kInf;  // best with direction separation > 0.3 rad
    double dir2 = 0.0;
    double dir1 = 0.0;
  };
  std::vector<Cand> cand(static_cast<std::size_t>(cells));

  for (int k = 0; k < K; ++k) {
    const auto& ray = rays[static_cast<std::size_t>(k)];
    for (std::size_t j = 0; j < ray.x.size(); ++j) {
      const Vec4& xs = ray.x[j];
      // adaptive reach: half a cell plus the local sample spacing
      double spacing = 0.0;
      if (j + 1 < ray.x.size())
        spacing = std::hypot(ray.x[j + 1][0] - xs[0], ray.x[j + 1][1] - xs[1]);
      else if (j > 0)
        spacing = std::hypot(ray.x[j - 1][0] - xs[0], ray.x[j - 1][1] - xs[1]);
      const double reach = 0.8 * grid.h + 0.6 * spacing;
      int ci = static_cast<int>(std::floor((xs[0] - grid.ox) / grid.h + 0.5));
      int cj = static_cast<int>(std::floor((xs[1] - grid.oy) / grid.h + 0.5));
      int b = std::max(1, static_cast<int>(std::ceil(reach / grid.h)));
      for (int dj = -b; dj <= b; ++dj) {
        for (int di = -b; di <= b; ++di) {
          int ii = ci + di, jj = cj + dj;
          if (!grid.valid(ii, jj)) continue;
          Vec4 xc = grid.center(ii, jj);
          Vec4 dd = vec2(xc[0] - xs[0], xc[1] - xs[1]);
          double dn = norm2(2, dd);
          if (dn > reach) continue;
          double est = dt * static_cast<double>(j) + (dn < 1e-14 ? 0.0 : m.norm(xs, dd));
          double ang = std::atan2(ray.y[j][1], ray.y[j][0]);
          Cand& c = cand[static_cast<std::size_t>(grid.idx(ii, jj))];
          if (est < c.r) {
            double sep = std::abs(ang - c.dir1);
            if (sep > M_PI) sep = 2 * M_PI - sep;
            if (c.ray >= 0 && sep > 0.3 && c.r < c.r2) {
              c.r2 = c.r;
              c.dir2 = c.dir1;
            }
            c.r = est;
            c.ray = k;
            c.j = static_cast<int>(j);
            c.dir1 = ang;
          } else {
            double sep = std::abs(ang - c.dir1);
            if (sep > M_PI) sep = 2 * M_PI - sep;
            if (sep > 0.3 && est < c.r2) {
              c.r2 = est;
              c.dir2 = ang;
            }
          }
        }
      }
    }
  }

  // second-order two-point refinement against neighbor rays
  parallel_for(static_cast<std::size_t>(cells), [&](std::size_t idx) {
    Cand& c = cand[idx];
    if (c.ray < 0) return;
    out.reached[idx] = 1;
    int i = static_cast<int>(idx) % grid.nx;
    int j = static_cast<int>(idx) / grid.nx;
    Vec4 xc = grid.center(i, j);

    const auto& rk = rays[static_cast<std::size_t>(c.ray)];
    const auto& rp = rays[static_cast<std::size_t>((c.ray + 1) % K)];
    const auto& rm = rays[static_cast<std::size_t>((c.ray + K - 1) % K)];
    std::size_t sj = static_cast<std::size_t>(c.j);

    double rbest = c.r;
    Vec4 vel = rk.y[std::min(sj, rk.y.size() - 1)];

    if (sj < rk.x.size() && sj < rp.x.size() && sj < rm.x.size()) {
      const Vec4& xs = rk.x[sj];
      const Vec4& ys = rk.y[sj];
      Vec4 G = spray_fast(m, xs, ys);
      Vec4 acc = vec2(-2.0 * G[0], -2.0 * G[1]);  // gamma''
      Vec4 xth = vec2((rp.x[sj][0] - rm.x[sj][0]) / (2 * dtheta),
                      (rp.x[sj][1] - rm.x[sj][1]) / (2 * dtheta));
      Vec4 yth = vec2((rp.y[sj][0] - rm.y[sj][0]) / (2 * dtheta),
                      (rp.y[sj][1] - rm.y[sj][1]) / (2 * dtheta));
      Vec4 xthth = vec2((rp.x[sj][0] - 2 * xs[0] + rm.x[sj][0]) / (dtheta * dtheta),
                        (rp.x[sj][1] - 2 * xs[1] + rm.x[sj][1]) / (dtheta * dtheta));
      // solve xs + y dt + xth dth + 1/2 acc dt^2 + yth dt dth + 1/2 xthth dth^2 = xc
      double a = 0.0, b = 0.0;  // (dt, dth)
      bool good = true;
      for (int it = 0; it < 4; ++it) {
        Vec4 res = vec2(xs[0] + ys[0] * a + xth[0] * b + 0.5 * acc[0] * a * a + yth[0] * a * b +
                            0.5 * xthth[0] * b * b - xc[0],
                        xs[1] + ys[1] * a + xth[1] * b + 0.5 * acc[1] * a * a + yth[1] * a * b +
                            0.5 * xthth[1] * b * b - xc[1]);
        Mat4 Jm{};
        Jm[0][0] = ys[0] + acc[0] * a + yth[0] * b;
        Jm[0][1] = xth[0] + yth[0] * a + xthth[0] * b;
        Jm[1][0] = ys[1] + acc[1] * a + yth[1] * b;
        Jm[1][1] = xth[1] + yth[1] * a + xthth[1] * b;
        double det = Jm[0][0] * Jm[1][1] - Jm[0][1] * Jm[1][0];
        if (std::abs(det) < 1e-14) { good = false; break; }
        double da = (res[0] * Jm[1][1] - res[1] * Jm[0][1]) / det;
        double db = (Jm[0][0] * res[1] - Jm[1][0] * res[0]) / det;
        a -= da;
        b -= db;
      }
      if (good && std::abs(b) <= 1.6 * dtheta && std::abs(a) <= 8.0 * dt) {
        rbest = dt * static_cast<double>(sj) + a;
        vel = vec2(ys[0] + acc[0] * a + yth[0] * b, ys[1] + acc[1] * a + yth[1] * b);
      }
    }

    out.r[idx] = rbest;
    double f = m.norm(xc, vel);
    Vec4 unit = vec2(vel[0] / f, vel[1] / f);
    out.gx[idx] = unit[0];
    out.gy[idx] = unit[1];
    auto lt = legendre_to_cotangent(m, xc, unit);
    out.drx[idx] = lt.v[0];
    out.dry[idx] = lt.v[1];

    bool cut = (c.r2 < kInf && std::abs(c.r2 - rbest) < 2.0 * grid.h);
    double de = std::hypot(xc[0] - p[0], xc[1] - p[1]);
    out.smooth[idx] = (!cut && de > 3.0 * grid.h) ? 1 : 0;
  });

  return out;
}

DistanceField distance_field_eikonal(const MetricSpec& m, const Vec4& p, const GridSpec2& grid,
                                     const EikonalParams& params) {
  if (m.dimension() != 2) throw ConfigError("distance fields are 2-D");
  DistanceField out;
  out.grid = grid;
  out.p = p;
  out.method = DistanceMethod::kEikonal;
  const int cells = grid.cells();
  out.r.assign(cells, kInf);
  out.smooth.assign(cells, 0);
  out.reached.assign(cells, 0);
  out.drx.assign(cells, 0.0);
  out.dry.assign(cells, 0.0);
  out.gx.assign(cells, 0.0);
  out.gy.assign(cells, 0.0);

  std::vector<std::uint8_t> inside(static_cast<std::size_t>(cells), 0);
  std::vector<std::uint8_t> frozen(static_cast<std::size_t>(cells), 0);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      Vec4 xc = grid.center(i, j);
      inside[static_cast<std::size_t>(grid.idx(i, j))] =
          m.in_domain(std::span<const double>(xc.data(), 2)) ? 1 : 0;
    }

  // factored source: exact short-segment distances near p
  const double srad = params.source_radius_cells * grid.h;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      int id = grid.idx(i, j);
      if (!inside[static_cast<std::size_t>(id)]) continue;
      Vec4 xc = grid.center(i, j);
      double de = std::hypot(xc[0] - p[0], xc[1] - p[1]);
      if (de <= srad) {
        out.r[static_cast<std::size_t>(id)] = segment_length(m, p, xc);
        frozen[static_cast<std::size_t>(id)] = 1;
      }
    }

  // ring of 8 neighbors; consecutive pairs form the upwind simplexes
  const int ringi[8] = {1, 1, 0, -1, -1, -1, 0, 1};
  const int ringj[8] = {0, 1, 1, 1, 0, -1, -1, -1};

  auto update_cell = [&](int i, int j) -> double {
    int id = grid.idx(i, j);
    if (!inside[static_cast<std::size_t>(id)] || frozen[static_cast<std::size_t>(id)]) return 0.0;
    Vec4 xc = grid.center(i, j);
    double best = out.r[static_cast<std::size_t>(id)];
    for (int s = 0; s < 8; ++s) {
      int s2 = (s + 1) % 8;
      int i1 = i + ringi[s], j1 = j + ringj[s];
      int i2 = i + ringi[s2], j2 = j + ringj[s2];
      if (!grid.valid(i1, j1) || !grid.valid(i2, j2)) continue;
      double r1 = out.r[static_cast<std::size_t>(grid.idx(i1, j1))];
      double r2 = out.r[static_cast<std::size_t>(grid.idx(i2, j2))];
      if (r1 == kInf && r2 == kInf) continue;
      Vec4 q1 = grid.center(i1, j1), q2 = grid.center(i2, j2);
      auto value = [&](double lam) {
        double rq = (1 - lam) * r1 + lam * r2;
        if (rq == kInf) return kInf;
        Vec4 q = vec2((1 - lam) * q1[0] + lam * q2[0], (1 - lam) * q1[1] + lam * q2[1]);
        Vec4 d = vec2(xc[0] - q[0], xc[1] - q[1]);
        Vec4 mid = vec2(0.5 * (xc[0] + q[0]), 0.5 * (xc[1] + q[1]));
        if (!m.in_domain(std::span<const double>(mid.data(), 2))) return kInf;
        return rq + m.norm(mid, d);
      };
      // coarse scan then golden refinement
      double lo = 0.0, hi = 1.0, bl = 0.0, bv = kInf;
      for (int t = 0; t <= 4; ++t) {
        double lam = t / 4.0;
        double v = value(lam);
        if (v < bv) { bv = v; bl = lam; }
      }
      lo = std::max(0.0, bl - 0.25);
      hi = std::min(1.0, bl + 0.25);
      const double gr = 0.6180339887498949;
      double a = lo, b2 = hi;
      double c1 = b2 - gr * (b2 - a), c2 = a + gr * (b2 - a);
      double f1 = value(c1), f2 = value(c2);
      for (int t = 0; t < 14; ++t) {
        if (f1 < f2) { b2 = c2; c2 = c1; f2 = f1; c1 = b2 - gr * (b2 - a); f1 = value(c1); }
        else { a = c1; c1 = c2; f1 = f2; c2 = a + gr * (b2 - a); f2 = value(c2); }
      }
      bv = std::min(bv, std::min(f1, f2));
      best = std::min(best, bv);
    }
    double old = out.r[static_cast<std::size_t>(id)];
    if (best < old) {
      out.r[static_cast<std::size_t>(id)] = best;
      return old == kInf ? 1.0 : old - best;
    }
    return 0.0;
  };

  for (int round = 0; round < params.max_rounds; ++round) {
    double change = 0.0;
    // four sweep orderings
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) change = std::max(change, update_cell(i, j));
    for (int j = 0; j < grid.ny; ++j)
      for (int i = grid.nx - 1; i >= 0; --i) change = std::max(change, update_cell(i, j));
    for (int j = grid.ny - 1; j >= 0; --j)
      for (int i = 0; i < grid.nx; ++i) change = std::max(change, update_cell(i, j));
    for (int j = grid.ny - 1; j >= 0; --j)
      for (int i = grid.nx - 1; i >= 0; --i) change = std::max(change, update_cell(i, j));
    if (change < params.tol) break;
  }

  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      std::size_t id = static_cast<std::size_t>(grid.idx(i, j));
      if (out.r[id] == kInf) continue;
      out.reached[id] = 1;
      Vec4 xc = grid.center(i, j);
      double de = std::hypot(xc[0] - p[0], xc[1] - p[1]);
      bool interior = i > 0 && j > 0 && i < grid.nx - 1 && j < grid.ny - 1;
      out.smooth[id] = (de > 3.0 * grid.h && interior) ? 1 : 0;
      if (interior) {
        std::size_t ie = static_cast<std::size_t>(grid.idx(i + 1, j));
        std::size_t iw = static_cast<std::size_t>(grid.idx(i - 1, j));
        std::size_t in2 = static_cast<std::size_t>(grid.idx(i, j + 1));
        std::size_t is = static_cast<std::size_t>(grid.idx(i, j - 1));
        if (out.r[ie] != kInf && out.r[iw] != kInf && out.r[in2] != kInf && out.r[is] != kInf) {
          out.drx[id] = (out.r[ie] - out.r[iw]) / (2 * grid.h);
          out.dry[id] = (out.r[in2] - out.r[is]) / (2 * grid.h);
        }
      }
    }
  return out;
}

DistanceField distance_field(const MetricSpec& m, const Vec4& p, const GridSpec2& grid,
                             DistanceMethod method) {
  return method == DistanceMethod::kShooting ? distance_field_shooting(m, p, grid)
                                             : distance_field_eikonal(m, p, grid);
}

double distance_field_disagreement(const DistanceField& a, const DistanceField& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.r.size(); ++i) {
    if (!a.smooth[i] || i >= b.smooth.size() || !b.smooth[i]) continue;
    if (a.r[i] == kInf || b.r[i] == kInf) continue;
    worst = std::max(worst, std::abs(a.r[i] - b.r[i]));
  }
  return worst;
}

double eikonal_residual(const MetricSpec& m, const DistanceField& f) {
  const auto& g = f.grid;
  double worst = 0.0;
  for (int j = 1; j < g.ny - 1; ++j)
    for (int i = 1; i < g.nx - 1; ++i) {
      std::size_t id = static_cast<std::size_t>(g.idx(i, j));
      if (!f.smooth[id]) continue;
      bool ok = true;
      for (int s = 0; s < 4; ++s) {
        int ii = i + (s == 0) - (s == 1), jj = j + (s == 2) - (s == 3);
        std::size_t nid = static_cast<std::size_t>(g.idx(ii, jj));
        if (!f.reached[nid] || !f.smooth[nid]) ok = false;
      }
      if (!ok) continue;
      Vec4 dr = vec2((f.r[static_cast<std::size_t>(g.idx(i + 1, j))] -
                      f.r[static_cast<std::size_t>(g.idx(i - 1, j))]) /
                         (2 * g.h),
                     (f.r[static_cast<std::size_t>(g.idx(i, j + 1))] -
                      f.r[static_cast<std::size_t>(g.idx(i, j - 1))]) /
                         (2 * g.h));
      Vec4 xc = g.center(i, j);
      if (!m.in_domain(std::span<const double>(xc.data(), 2))) continue;
      try {
        double fs = legendre_to_tangent(m, xc, dr).fstar;
        worst = std::max(worst, std::abs(fs - 1.0));
      } catch (const Error&) {
        // skip cells where the fd differential is too rough to invert
      }
    }
  return worst;
}

}  // namespace finslab
