#include "finslab/nonriemann.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "finslab/detail/assembly.hpp"
#include "finslab/errors.hpp"
#include "finslab/fundamental.hpp"
#include "finslab/geodesic.hpp"
#include "finslab/parallel.hpp"
#include "finslab/rng.hpp"

namespace finslab {

double distortion(const MetricSpec& m, const MeasureSpec& mu, const Vec4& x, const Vec4& y) {
  const int n = m.dimension();
  require_nonzero(n, y, "distortion");
  return detail::distortion_value<double>(m, mu, n, x, y);
}

DistortionData distortion_s(const MetricSpec& m, const MeasureSpec& mu, const Vec4& x,
                            const Vec4& y) {
  const int n = m.dimension();
  require_nonzero(n, y, "distortion_s");
  DistortionData out;
  out.tau = detail::distortion_value<double>(m, mu, n, x, y);

  const double f = m.norm(x, y);
  const double h = 1e-3 / std::max(f, 1e-8);

  // tau along the geodesic at t = -2h,-h,+h,+2h
  double v[5] = {0.0, 0.0, out.tau, 0.0, 0.0};
  const double offs[4] = {-2.0 * h, -h, h, 2.0 * h};
  const int slot[4] = {0, 1, 3, 4};
  for (int k = 0; k < 4; ++k) {
    auto s = geodesic_advance(m, x, y, offs[k], h / 4.0);
    if (!s.ok)
      throw DomainError("geodesic left the metric domain within the distortion stencil");
    v[slot[k]] = detail::distortion_value<double>(m, mu, n, s.x, s.y);
  }
  out.S = (v[0] - 8.0 * v[1] + 8.0 * v[3] - v[4]) / (12.0 * h);
  out.Sdot = (-v[0] + 16.0 * v[1] - 30.0 * v[2] + 16.0 * v[3] - v[4]) / (12.0 * h * h);
  return out;
}

namespace {

// delta tau/delta x^i at (x,V): dtau/dx^i - N^j_i(x,V) dtau/dy^j
Vec4 horizontal_dtau(const MetricSpec& m, const MeasureSpec& mu, int n, const Vec4& x,
                     const Vec4& V) {
  auto xx = detail::promote(n, x, true);
  auto yx = detail::promote(n, V, false);
  J1 tx = detail::distortion_value<J1>(m, mu, n, xx, yx);

  auto xy = detail::promote(n, x, false);
  auto yy = detail::promote(n, V, true);
  J1 ty = detail::distortion_value<J1>(m, mu, n, xy, yy);

  MatT<double> N = detail::nonlinear_connection(m, n, x, V);
  Vec4 out{};
  for (int i = 0; i < n; ++i) {
    double acc = tx.d[i];
    for (int j = 0; j < n; ++j) acc -= N[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] * ty.d[j];
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

}  // namespace

Vec4 t_difference(const MetricSpec& m, const MeasureSpec& mu, const Vec4& x, const Vec4& V,
                  const Vec4& W) {
  const int n = m.dimension();
  require_nonzero(n, V, "t_difference");
  require_nonzero(n, W, "t_difference");
  Vec4 a = horizontal_dtau(m, mu, n, x, V);
  Vec4 b = horizontal_dtau(m, mu, n, x, W);
  Vec4 out{};
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)];
  return out;
}

Vec4 u_tensor(const MetricSpec& m, const Vec4& x, const Vec4& V, const Vec4& W) {
  const int n = m.dimension();
  require_nonzero(n, V, "u_tensor");
  require_nonzero(n, W, "u_tensor");
  auto pv = detail::connection_parts<double>(m, n, x, V);
  auto pw = detail::connection_parts<double>(m, n, x, W);
  Vec4 out{};
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        acc += pv.g_inv[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] *
               (pw.chern[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] -
                pv.chern[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)][static_cast<std::size_t>(l)]);
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

Vec4 div_cartan(const MetricSpec& m, const Vec4& x, const Vec4& V) {
  const int n = m.dimension();
  require_nonzero(n, V, "div_cartan");

  auto base = detail::connection_parts<double>(m, n, x, V);
  Ten3 craised{};
  {
    auto c = detail::raised_cartan<double>(m, n, x, V);
    craised = c;
  }
  // dC^{ip}_k/dx^q and /dy^q via promoted passes
  auto cx = detail::raised_cartan<J1>(m, n, detail::promote(n, x, true), detail::promote(n, V, false));
  auto cy = detail::raised_cartan<J1>(m, n, detail::promote(n, x, false), detail::promote(n, V, true));

  Vec4 out{};
  for (int p = 0; p < n; ++p) {
    double acc = 0.0;
    for (int q = 0; q < n; ++q) {  // contraction index i = q
      for (int k = 0; k < n; ++k) {
        // delta C^{qp}_k / delta x^q
        double d = cx[static_cast<std::size_t>(q)][static_cast<std::size_t>(p)][static_cast<std::size_t>(k)].d[q];
        for (int mm = 0; mm < n; ++mm)
          d -= base.nonlinear[static_cast<std::size_t>(mm)][static_cast<std::size_t>(q)] *
               cy[static_cast<std::size_t>(q)][static_cast<std::size_t>(p)][static_cast<std::size_t>(k)].d[mm];
        // connection corrections for (2,1) valence
        for (int a = 0; a < n; ++a) {
          d += base.chern[static_cast<std::size_t>(q)][static_cast<std::size_t>(q)][static_cast<std::size_t>(a)] *
               craised[static_cast<std::size_t>(a)][static_cast<std::size_t>(p)][static_cast<std::size_t>(k)];
          d += base.chern[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)][static_cast<std::size_t>(a)] *
               craised[static_cast<std::size_t>(q)][static_cast<std::size_t>(a)][static_cast<std::size_t>(k)];
          d -= base.chern[static_cast<std::size_t>(a)][static_cast<std::size_t>(q)][static_cast<std::size_t>(k)] *
               craised[static_cast<std::size_t>(q)][static_cast<std::size_t>(p)][static_cast<std::size_t>(a)];
        }
        acc += d * V[static_cast<std::size_t>(k)];
      }
    }
    out[static_cast<std::size_t>(p)] = acc;
  }
  return out;
}

NonRiemannData non_riemannian(const MetricSpec& m, const MeasureSpec& mu, const Vec4& x,
                              const Vec4& V, const Vec4& W) {
  const int n = m.dimension();
  NonRiemannData out;
  auto ds = distortion_s(m, mu, x, V);
  out.tau = ds.tau;
  out.S = ds.S;
  out.Sdot = ds.Sdot;
  out.t_diff = t_difference(m, mu, x, V, W);
  out.u_vec = u_tensor(m, x, V, W);
  out.div_c = div_cartan(m, x, V);

  double fu = norm2(n, out.u_vec) < kZeroDirectionTol ? 0.0 : m.norm(x, out.u_vec);
  double fdc = norm2(n, out.div_c) < kZeroDirectionTol ? 0.0 : m.norm(x, out.div_c);
  double ft = 0.0;
  if (norm2(n, out.t_diff) >= kZeroDirectionTol)
    ft = legendre_to_tangent(m, x, out.t_diff).fstar;
  out.k0_value = fu + ft + fdc;
  return out;
}

double k0_bound(const MetricSpec& m, const MeasureSpec& mu, const Region& region, int samples,
                std::uint64_t seed) {
  const int n = m.dimension();
  auto rng = task_rng(seed, "k0-bound");
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);

  struct Sample {
    Vec4 x, V, W;
  };
  std::vector<Sample> set;
  set.reserve(static_cast<std::size_t>(samples));
  while (static_cast<int>(set.size()) < samples) {
    Sample s{};
    if (region.kind == RegionKind::kBall) {
      Vec4 p{};
      double r2 = 0.0;
      for (int i = 0; i < n; ++i) {
        p[static_cast<std::size_t>(i)] = unif(rng) * region.radius;
        r2 += p[static_cast<std::size_t>(i)] * p[static_cast<std::size_t>(i)];
      }
      if (r2 > region.radius * region.radius) continue;
      for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] += region.center[static_cast<std::size_t>(i)];
      s.x = p;
    } else {
      for (int i = 0; i < n; ++i)
        s.x[static_cast<std::size_t>(i)] =
            region.lo[static_cast<std::size_t>(i)] +
            0.5 * (unif(rng) + 1.0) * (region.hi[static_cast<std::size_t>(i)] - region.lo[static_cast<std::size_t>(i)]);
    }
    if (n == 2) {
      double av = angle(rng), aw = angle(rng);
      s.V = vec2(std::cos(av), std::sin(av));
      s.W = vec2(std::cos(aw), std::sin(aw));
    } else {
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (int i = 0; i < n; ++i) {
        s.V[static_cast<std::size_t>(i)] = gauss(rng);
        s.W[static_cast<std::size_t>(i)] = gauss(rng);
      }
    }
    if (!m.in_domain(std::span<const double>(s.x.data(), static_cast<std::size_t>(n)))) continue;
    set.push_back(s);
  }
  if (set.empty()) throw DomainError("k0_bound: empty region");

  std::vector<double> vals(set.size(), 0.0);
  parallel_for(set.size(), [&](std::size_t i) {
    const auto& s = set[i];
    // normalize to the indicatrix: the definitions take unit fields
    Vec4 V = s.V, W = s.W;
    double fv = m.norm(s.x, V), fw = m.norm(s.x, W);
    for (int k = 0; k < n; ++k) {
      V[static_cast<std::size_t>(k)] /= fv;
      W[static_cast<std::size_t>(k)] /= fw;
    }
    Vec4 uvec = u_tensor(m, s.x, V, W);
    Vec4 tdiff = t_difference(m, mu, s.x, V, W);
    Vec4 dc = div_cartan(m, s.x, V);
    double fu = norm2(n, uvec) < kZeroDirectionTol ? 0.0 : m.norm(s.x, uvec);
    double fdc = norm2(n, dc) < kZeroDirectionTol ? 0.0 : m.norm(s.x, dc);
    double ft = 0.0;
    if (norm2(n, tdiff) >= kZeroDirectionTol) ft = legendre_to_tangent(m, s.x, tdiff).fstar;
    vals[i] = fu + ft + fdc;
  });
  double best = 0.0;
  for (double v : vals) best = std::max(best, v);
  return best;
}

}  // namespace finslab
