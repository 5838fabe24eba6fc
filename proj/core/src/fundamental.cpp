#include "finslab/fundamental.hpp"

#include <cmath>

#include "finslab/detail/assembly.hpp"
#include "finslab/errors.hpp"

namespace finslab {

FundamentalData fundamental(const MetricSpec& m, const Vec4& x, const Vec4& y) {
  const int n = m.dimension();
  require_nonzero(n, y, "fundamental");
  m.require_domain(std::span<const double>(x.data(), static_cast<std::size_t>(n)));

  auto jets = detail::fsq_y_jets(m, n, x, y);
  FundamentalData out;
  out.n = n;
  out.F2 = jets.f2;
  out.F = std::sqrt(std::max(0.0, jets.f2));
  out.l = jets.l;
  out.g = jets.g;
  out.cartan = jets.cartan;
  if (!(min_eigenvalue(n, out.g) > 0.0))
    throw MetricError("fundamental form not positive definite at evaluation point");
  out.g_inv = inverse(n, out.g);
  out.det_g = determinant(n, out.g);
  for (int k = 0; k < n; ++k) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        acc += out.g_inv[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] *
               out.cartan[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
    out.mean_cartan[static_cast<std::size_t>(k)] = acc;
  }
  return out;
}

LegendreResult legendre_to_cotangent(const MetricSpec& m, const Vec4& x, const Vec4& y) {
  const int n = m.dimension();
  require_nonzero(n, y, "legendre");
  auto jets = detail::fsq_y_jets(m, n, x, y);
  LegendreResult r;
  r.v = jets.l;
  r.fstar = std::sqrt(std::max(0.0, jets.f2));
  return r;
}

namespace {

// l and g at (x,y) from one depth-2 pass
void l_and_g(const MetricSpec& m, int n, const Vec4& x, const Vec4& y, Vec4* l, Mat4* g) {
  VecT<J2> xj{}, yj{};
  for (int i = 0; i < n; ++i) {
    xj[static_cast<std::size_t>(i)] = J2(x[static_cast<std::size_t>(i)]);
    J2 v(y[static_cast<std::size_t>(i)]);
    v.d[i] = J1(1.0);
    v.f.d[i] = 1.0;
    yj[static_cast<std::size_t>(i)] = v;
  }
  J2 r = m.fsq_jets(detail::spn(xj, n), detail::spn(yj, n));
  for (int i = 0; i < n; ++i) {
    (*l)[static_cast<std::size_t>(i)] = 0.5 * r.d[i].f;
    for (int j = 0; j < n; ++j)
      (*g)[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 0.5 * r.d[i].d[j];
  }
}

}  // namespace

LegendreResult legendre_to_tangent(const MetricSpec& m, const Vec4& x, const Vec4& xi,
                                   const std::optional<Vec4>& hint) {
  const int n = m.dimension();
  require_nonzero(n, xi, "legendre");

  // initial guess: raise xi with g evaluated at the hint, or at xi read as a
  // vector when no hint is available
  Vec4 y0{};
  {
    Vec4 dir = hint.value_or(xi);
    if (norm2(n, dir) < kZeroDirectionTol) dir = xi;
    Vec4 l{};
    Mat4 g{};
    l_and_g(m, n, x, dir, &l, &g);
    y0 = solve(n, g, xi);
  }

  const double xi_norm = norm2(n, xi);
  Vec4 y = y0;
  Vec4 l{};
  Mat4 g{};
  double resid = 0.0;
  for (int it = 0; it < 100; ++it) {
    if (norm2(n, y) < kZeroDirectionTol) y = xi;  // restart away from the zero section
    l_and_g(m, n, x, y, &l, &g);
    Vec4 rvec{};
    resid = 0.0;
    for (int i = 0; i < n; ++i) {
      rvec[static_cast<std::size_t>(i)] = l[static_cast<std::size_t>(i)] - xi[static_cast<std::size_t>(i)];
      resid += rvec[static_cast<std::size_t>(i)] * rvec[static_cast<std::size_t>(i)];
    }
    resid = std::sqrt(resid);
    if (resid <= 1e-12 * xi_norm) {
      LegendreResult out;
      out.v = y;
      out.fstar = m.norm(x, y);
      out.iterations = it;
      return out;
    }
    // Newton step: the Jacobian of l is exactly g
    Vec4 step = solve(n, g, rvec);
    double t = 1.0;
    for (int halving = 0; halving < 30; ++halving) {
      Vec4 cand{};
      for (int i = 0; i < n; ++i)
        cand[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] - t * step[static_cast<std::size_t>(i)];
      if (norm2(n, cand) >= kZeroDirectionTol) {
        Vec4 lc{};
        Mat4 gc{};
        try {
          l_and_g(m, n, x, cand, &lc, &gc);
          double rc = 0.0;
          for (int i = 0; i < n; ++i) {
            double e = lc[static_cast<std::size_t>(i)] - xi[static_cast<std::size_t>(i)];
            rc += e * e;
          }
          rc = std::sqrt(rc);
          if (rc < resid || halving == 29) {
            y = cand;
            break;
          }
        } catch (const Error&) {
          // fall through to a shorter step
        }
      }
      t *= 0.5;
    }
  }
  throw ConvergenceError("legendre inversion did not converge in 100 iterations (residual " +
                         std::to_string(resid) + ")");
}

double fstar(const MetricSpec& m, const Vec4& x, const Vec4& xi) {
  return legendre_to_tangent(m, x, xi).fstar;
}

double angular_metric(const MetricSpec& m, const Vec4& x, const Vec4& y, const Vec4& u,
                      const Vec4& v) {
  const int n = m.dimension();
  require_nonzero(n, y, "angular_metric");
  Vec4 l{};
  Mat4 g{};
  l_and_g(m, n, x, y, &l, &g);
  double f2 = dot(n, l, y);  // g_y(y,y) = F^2
  double guv = quadratic_form(n, g, u, v);
  double gyu = dot(n, l, u);
  double gyv = dot(n, l, v);
  return guv - gyu * gyv / f2;
}

double mixed_angular_metric(const MetricSpec& m, const Vec4& x, const Vec4& V, const Vec4& W,
                            const Vec4& u, const Vec4& v) {
  const int n = m.dimension();
  require_nonzero(n, V, "mixed_angular_metric");
  require_nonzero(n, W, "mixed_angular_metric");
  Vec4 l{};
  Mat4 g{};
  l_and_g(m, n, x, V, &l, &g);
  double gww = quadratic_form(n, g, W, W);
  double guv = quadratic_form(n, g, u, v);
  double guw = quadratic_form(n, g, u, W);
  double gvw = quadratic_form(n, g, v, W);
  return guv - guw * gvw / gww;
}

}  // namespace finslab
