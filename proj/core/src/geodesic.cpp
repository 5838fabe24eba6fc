#include "finslab/geodesic.hpp"

#include <cmath>

#include "finslab/detail/assembly.hpp"
#include "finslab/errors.hpp"

namespace finslab {

namespace {

struct State {
  Vec4 x{}, y{};
};

State deriv(const MetricSpec& m, int n, const State& s) {
  State d;
  d.x = s.y;
  Vec4 G = spray_fast(m, s.x, s.y);
  for (int i = 0; i < n; ++i) d.y[static_cast<std::size_t>(i)] = -2.0 * G[static_cast<std::size_t>(i)];
  return d;
}

State add_scaled(int n, const State& a, double h, const State& b) {
  State r;
  for (int i = 0; i < n; ++i) {
    r.x[static_cast<std::size_t>(i)] = a.x[static_cast<std::size_t>(i)] + h * b.x[static_cast<std::size_t>(i)];
    r.y[static_cast<std::size_t>(i)] = a.y[static_cast<std::size_t>(i)] + h * b.y[static_cast<std::size_t>(i)];
  }
  return r;
}

bool state_ok(const MetricSpec& m, int n, const State& s) {
  for (int i = 0; i < n; ++i) {
    double xv = s.x[static_cast<std::size_t>(i)], yv = s.y[static_cast<std::size_t>(i)];
    if (!std::isfinite(xv) || !std::isfinite(yv)) return false;
    if (std::abs(yv) > 1e8) return false;
  }
  return m.in_domain(std::span<const double>(s.x.data(), static_cast<std::size_t>(n)));
}

State rk4_step(const MetricSpec& m, int n, const State& s, double h) {
  State k1 = deriv(m, n, s);
  State k2 = deriv(m, n, add_scaled(n, s, 0.5 * h, k1));
  State k3 = deriv(m, n, add_scaled(n, s, 0.5 * h, k2));
  State k4 = deriv(m, n, add_scaled(n, s, h, k3));
  State r = s;
  for (int i = 0; i < n; ++i) {
    r.x[static_cast<std::size_t>(i)] += h / 6.0 *
        (k1.x[static_cast<std::size_t>(i)] + 2.0 * k2.x[static_cast<std::size_t>(i)] +
         2.0 * k3.x[static_cast<std::size_t>(i)] + k4.x[static_cast<std::size_t>(i)]);
    r.y[static_cast<std::size_t>(i)] += h / 6.0 *
        (k1.y[static_cast<std::size_t>(i)] + 2.0 * k2.y[static_cast<std::size_t>(i)] +
         2.0 * k3.y[static_cast<std::size_t>(i)] + k4.y[static_cast<std::size_t>(i)]);
  }
  return r;
}

}  // namespace

Vec4 spray_coefficients(const MetricSpec& m, const Vec4& x, const Vec4& y) {
  return detail::spray(m, m.dimension(), x, y);
}

Vec4 spray_fast(const MetricSpec& m, const Vec4& x, const Vec4& y) {
  const int n = m.dimension();
  if (m.x_independent()) return Vec4{};  // minkowski family: straight lines
  if (m.kind() == MetricKind::kFunkDisk) {
    // projectively flat with projective factor F/2: G^i = (F/2) y^i... the
    // funk spray is G^i = 1/2 F y^i (checked against the generic assembly)
    double f = m.norm(x, y);
    Vec4 g{};
    for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = 0.5 * f * y[static_cast<std::size_t>(i)];
    return g;
  }
  if (m.quadratic()) {
    // riemannian: G^i = 1/2 Gamma^i_jk(x) y^j y^k from x-jets of g alone;
    // coefficient families skip the deep jet evaluation entirely
    using detail::promote;
    auto xj = promote(n, x, true);
    MatT<J1> gj;
    if (!m.coeff_jets(detail::spn(xj, n), &gj)) {
      auto yj = promote(n, y, false);
      gj = detail::fundamental_form(m, n, xj, yj);
    }
    Mat4 g{};
    Ten3 dg{};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = gj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].f;
        for (int k = 0; k < n; ++k)
          dg[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
              gj[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].d[k];
      }
    Mat4 gi = inverse(n, g);
    Vec4 out{};
    for (int l = 0; l < n; ++l) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        double t = 0.0;
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            t += (dg[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] +
                  dg[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] -
                  dg[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)]) *
                 y[static_cast<std::size_t>(j)] * y[static_cast<std::size_t>(k)];
        acc += gi[static_cast<std::size_t>(l)][static_cast<std::size_t>(i)] * t;
      }
      out[static_cast<std::size_t>(l)] = 0.25 * acc;
    }
    return out;
  }
  return detail::spray(m, n, x, y);
}

GeodesicPath geodesic(const MetricSpec& m, const Vec4& x0, const Vec4& y0, double T, int steps) {
  const int n = m.dimension();
  require_nonzero(n, y0, "geodesic");
  m.require_domain(std::span<const double>(x0.data(), static_cast<std::size_t>(n)));

  GeodesicPath path;
  path.t.reserve(static_cast<std::size_t>(steps) + 1);
  State s{x0, y0};
  path.t.push_back(0.0);
  path.x.push_back(s.x);
  path.y.push_back(s.y);
  const double h = T / steps;
  for (int k = 0; k < steps; ++k) {
    State next = rk4_step(m, n, s, h);
    if (!state_ok(m, n, next)) {
      path.exited_domain = true;
      return path;
    }
    s = next;
    path.t.push_back(h * (k + 1));
    path.x.push_back(s.x);
    path.y.push_back(s.y);
  }
  return path;
}

GeodesicState geodesic_advance(const MetricSpec& m, const Vec4& x0, const Vec4& y0, double t,
                               double dt_hint) {
  const int n = m.dimension();
  GeodesicState out{x0, y0, true};
  if (t == 0.0) return out;
  int steps = std::max(1, static_cast<int>(std::ceil(std::abs(t) / dt_hint)));
  double h = t / steps;
  State s{x0, y0};
  for (int k = 0; k < steps; ++k) {
    State next = rk4_step(m, n, s, h);
    if (!state_ok(m, n, next)) {
      out.ok = false;
      out.x = s.x;
      out.y = s.y;
      return out;
    }
    s = next;
  }
  out.x = s.x;
  out.y = s.y;
  return out;
}

}  // namespace finslab
