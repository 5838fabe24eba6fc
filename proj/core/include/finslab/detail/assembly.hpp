#pragma once

// Templated tensor assemblies. Every routine is generic in the scalar T so a
// whole assembly can itself be differentiated by promoting T one jet level;
// nesting depth therefore tracks the derivative order automatically.

#include <span>

#include "finslab/jet.hpp"
#include "finslab/linalg.hpp"
#include "finslab/measure.hpp"
#include "finslab/metric.hpp"

namespace finslab::detail {

template <class T>
std::span<const T> spn(const VecT<T>& v, int n) {
  return std::span<const T>(v.data(), static_cast<std::size_t>(n));
}

// promote a vector of T one jet level, optionally with unit seeds per entry
template <class T>
VecT<Jet<T>> promote(int n, const VecT<T>& v, bool seed) {
  VecT<Jet<T>> out{};
  for (int i = 0; i < n; ++i) {
    Jet<T> j(v[static_cast<std::size_t>(i)]);
    if (seed) j.d[i] = T(1.0);
    out[static_cast<std::size_t>(i)] = j;
  }
  return out;
}

// g_ij(x,y) = 1/2 d^2 F^2 / dy_i dy_j via a (y,y)-seeded nest
template <class T>
MatT<T> fundamental_form(const MetricSpec& m, int n, const VecT<T>& x, const VecT<T>& y) {
  using T2 = Jet<Jet<T>>;
  VecT<T2> xj{}, yj{};
  for (int i = 0; i < n; ++i) {
    xj[static_cast<std::size_t>(i)] = T2(Jet<T>(x[static_cast<std::size_t>(i)]));
    T2 v(Jet<T>(y[static_cast<std::size_t>(i)]));
    v.d[i] = Jet<T>(T(1.0));
    v.f.d[i] = T(1.0);
    yj[static_cast<std::size_t>(i)] = v;
  }
  T2 r = m.fsq_jets(spn(xj, n), spn(yj, n));
  MatT<T> g = zero_mat<T>();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 0.5 * r.d[i].d[j];
  return g;
}

struct FsqYJets {
  // value, l_i = 1/2 dF^2/dy_i, g_ij, C_ijk at a point (doubles)
  double f2;
  Vec4 l;
  Mat4 g;
  Ten3 cartan;
};

// one (y,y,y)-seeded pass: F^2, l, g and the Cartan tensor
inline FsqYJets fsq_y_jets(const MetricSpec& m, int n, const Vec4& x, const Vec4& y) {
  VecT<J3> xj{}, yj{};
  for (int i = 0; i < n; ++i) {
    xj[static_cast<std::size_t>(i)] = J3(x[static_cast<std::size_t>(i)]);
    J3 v(y[static_cast<std::size_t>(i)]);
    v.d[i] = J2(1.0);
    v.f.d[i] = J1(1.0);
    v.f.f.d[i] = 1.0;
    yj[static_cast<std::size_t>(i)] = v;
  }
  J3 r = m.fsq_jets(spn(xj, n), spn(yj, n));
  FsqYJets out{};
  out.f2 = r.f.f.f;
  for (int i = 0; i < n; ++i) {
    out.l[static_cast<std::size_t>(i)] = 0.5 * r.d[i].f.f;
    for (int j = 0; j < n; ++j) {
      out.g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 0.5 * r.d[i].d[j].f;
      for (int k = 0; k < n; ++k)
        out.cartan[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] =
            0.25 * r.d[i].d[j].d[k];
    }
  }
  return out;
}

// C_ijk = 1/4 d^3 F^2/dy^3, generic scalar
template <class T>
Ten3T<T> cartan_tensor(const MetricSpec& m, int n, const VecT<T>& x, const VecT<T>& y) {
  using T3 = Jet<Jet<Jet<T>>>;
  VecT<T3> xj{}, yj{};
  for (int i = 0; i < n; ++i) {
    xj[static_cast<std::size_t>(i)] = T3(Jet<Jet<T>>(Jet<T>(x[static_cast<std::size_t>(i)])));
    T3 v(Jet<Jet<T>>(Jet<T>(y[static_cast<std::size_t>(i)])));
    v.d[i] = Jet<Jet<T>>(Jet<T>(T(1.0)));
    v.f.d[i] = Jet<T>(T(1.0));
    v.f.f.d[i] = T(1.0);
    yj[static_cast<std::size_t>(i)] = v;
  }
  T3 r = m.fsq_jets(spn(xj, n), spn(yj, n));
  Ten3T<T> c{};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] =
            0.25 * r.d[i].d[j].d[k];
  return c;
}

// spray coefficients G^i = 1/4 g^{il} ( d2F^2/dx^k dy^l y^k - dF^2/dx^l )
template <class T>
VecT<T> spray(const MetricSpec& m, int n, const VecT<T>& x, const VecT<T>& y) {
  using T2 = Jet<Jet<T>>;
  // pass 1: (x,y) seeds for dF^2/dx and d2F^2/dxdy
  VecT<T2> xj{}, yj{};
  for (int i = 0; i < n; ++i) {
    T2 xv(Jet<T>(x[static_cast<std::size_t>(i)]));
    xv.d[i] = Jet<T>(T(1.0));
    xj[static_cast<std::size_t>(i)] = xv;
    T2 yv(Jet<T>(y[static_cast<std::size_t>(i)]));
    yv.f.d[i] = T(1.0);
    yj[static_cast<std::size_t>(i)] = yv;
  }
  T2 r = m.fsq_jets(spn(xj, n), spn(yj, n));
  MatT<T> g = fundamental_form(m, n, x, y);
  MatT<T> ginv = inverse(n, g);
  VecT<T> rhs = zero_vec<T>();
  for (int l = 0; l < n; ++l) {
    T acc = T(0.0);
    for (int k = 0; k < n; ++k) acc = acc + r.d[k].d[l] * y[static_cast<std::size_t>(k)];
    rhs[static_cast<std::size_t>(l)] = acc - r.d[l].f;
  }
  VecT<T> G = zero_vec<T>();
  for (int i = 0; i < n; ++i) {
    T acc = T(0.0);
    for (int l = 0; l < n; ++l)
      acc = acc + ginv[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)] * rhs[static_cast<std::size_t>(l)];
    G[static_cast<std::size_t>(i)] = 0.25 * acc;
  }
  return G;
}

// nonlinear connection N^i_j = dG^i/dy^j
template <class T>
MatT<T> nonlinear_connection(const MetricSpec& m, int n, const VecT<T>& x, const VecT<T>& y) {
  VecT<Jet<T>> xj = promote(n, x, false);
  VecT<Jet<T>> yj = promote(n, y, true);
  VecT<Jet<T>> G = spray(m, n, xj, yj);
  MatT<T> N = zero_mat<T>();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      N[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = G[static_cast<std::size_t>(i)].d[j];
  return N;
}

template <class T>
struct ConnectionParts {
  MatT<T> g, g_inv;
  VecT<T> spray;
  MatT<T> nonlinear;   // N^i_j
  Ten3T<T> chern;      // Gamma^i_{jk}, symmetric in (j,k)
  Ten3T<T> dg_dx;      // dg_ij/dx^k stored [k][i][j]
  Ten3T<T> dg_dy;      // dg_ij/dy^m stored [m][i][j]
  Ten3T<T> delta_g;    // delta g_ij / delta x^k stored [k][i][j]
};

// Chern connection from g-jets and the nonlinear connection:
//   Gamma^l_{jk} = 1/2 g^{li} ( dg_ij/dx^k - dg_jk/dx^i + dg_ki/dx^j )
// with every x-derivative taken horizontally, d/dx -> delta/delta x.
template <class T>
ConnectionParts<T> connection_parts(const MetricSpec& m, int n, const VecT<T>& x, const VecT<T>& y) {
  using T3 = Jet<Jet<Jet<T>>>;
  ConnectionParts<T> out;

  // pass (x,y,y): g, dg/dx
  {
    VecT<T3> xj{}, yj{};
    for (int i = 0; i < n; ++i) {
      T3 xv(Jet<Jet<T>>(Jet<T>(x[static_cast<std::size_t>(i)])));
      xv.d[i] = Jet<Jet<T>>(Jet<T>(T(1.0)));
      xj[static_cast<std::size_t>(i)] = xv;
      T3 yv(Jet<Jet<T>>(Jet<T>(y[static_cast<std::size_t>(i)])));
      yv.f.d[i] = Jet<T>(T(1.0));
      yv.f.f.d[i] = T(1.0);
      yj[static_cast<std::size_t>(i)] = yv;
    }
    T3 r = m.fsq_jets(spn(xj, n), spn(yj, n));
    out.g = zero_mat<T>();
    out.dg_dx = Ten3T<T>{};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        out.g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 0.5 * r.f.d[i].d[j];
        for (int k = 0; k < n; ++k)
          out.dg_dx[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
              0.5 * r.d[k].d[i].d[j];
      }
  }
  // pass (y,y,y): dg/dy (= 2 C_ijm)
  {
    Ten3T<T> c = cartan_tensor(m, n, x, y);
    out.dg_dy = Ten3T<T>{};
    for (int mm = 0; mm < n; ++mm)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          out.dg_dy[static_cast<std::size_t>(mm)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
              2.0 * c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(mm)];
  }

  out.g_inv = inverse(n, out.g);
  out.spray = spray(m, n, x, y);
  out.nonlinear = nonlinear_connection(m, n, x, y);

  // delta g_ij/delta x^k = dg_ij/dx^k - N^m_k dg_ij/dy^m
  out.delta_g = Ten3T<T>{};
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        T acc = out.dg_dx[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        for (int mm = 0; mm < n; ++mm)
          acc = acc - out.nonlinear[static_cast<std::size_t>(mm)][static_cast<std::size_t>(k)] *
                          out.dg_dy[static_cast<std::size_t>(mm)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        out.delta_g[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = acc;
      }

  out.chern = Ten3T<T>{};
  for (int l = 0; l < n; ++l)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        T acc = T(0.0);
        for (int i = 0; i < n; ++i) {
          T term = out.delta_g[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                 - out.delta_g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)]
                 + out.delta_g[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
          acc = acc + out.g_inv[static_cast<std::size_t>(l)][static_cast<std::size_t>(i)] * term;
        }
        out.chern[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] = 0.5 * acc;
      }
  return out;
}

// distortion tau(x,y) = 1/2 log det g(x,y) - Phi(x), generic scalar
template <class T>
T distortion_value(const MetricSpec& m, const MeasureSpec& mu, int n, const VecT<T>& x,
                   const VecT<T>& y) {
  MatT<T> g = fundamental_form(m, n, x, y);
  T det = determinant(n, g);
  return 0.5 * log(det) - mu.phi_jets(spn(x, n));
}

// raised Cartan C^{ip}_k = g^{ia} g^{pb} C_{abk}, generic scalar
template <class T>
Ten3T<T> raised_cartan(const MetricSpec& m, int n, const VecT<T>& x, const VecT<T>& y) {
  Ten3T<T> c = cartan_tensor(m, n, x, y);
  MatT<T> g = fundamental_form(m, n, x, y);
  MatT<T> gi = inverse(n, g);
  Ten3T<T> out{};
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < n; ++p)
      for (int k = 0; k < n; ++k) {
        T acc = T(0.0);
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b)
            acc = acc + gi[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] *
                            gi[static_cast<std::size_t>(p)][static_cast<std::size_t>(b)] *
                            c[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)][static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)][static_cast<std::size_t>(k)] = acc;
      }
  return out;
}

}  // namespace finslab::detail
