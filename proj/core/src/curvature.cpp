#include "finslab/curvature.hpp"

#include <cmath>

#include "finslab/detail/assembly.hpp"
#include "finslab/errors.hpp"

namespace finslab {

namespace {

struct HHAssembly {
  Ten4 hh;
  Mat4 g, g_inv;
  double F2;
  Vec4 l;
};

HHAssembly assemble_hh(const MetricSpec& m, const Vec4& x, const Vec4& y) {
  const int n = m.dimension();

  // base connection plus two promoted passes for dGamma/dx and dGamma/dy
  auto base = detail::connection_parts<double>(m, n, x, y);
  auto xpass = detail::connection_parts<J1>(m, n, detail::promote(n, x, true),
                                            detail::promote(n, y, false));
  auto ypass = detail::connection_parts<J1>(m, n, detail::promote(n, x, false),
                                            detail::promote(n, y, true));

  // delta Gamma^i_{jk} / delta x^q = dGamma/dx^q - N^m_q dGamma/dy^m
  Ten4 dG{};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int q = 0; q < n; ++q) {
          double acc = xpass.chern[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)].d[q];
          for (int mm = 0; mm < n; ++mm)
            acc -= base.nonlinear[static_cast<std::size_t>(mm)][static_cast<std::size_t>(q)] *
                   ypass.chern[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)].d[mm];
          dG[static_cast<std::size_t>(q)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] = acc;
        }

  HHAssembly out{};
  out.g = base.g;
  out.g_inv = base.g_inv;
  auto jets = detail::fsq_y_jets(m, n, x, y);
  out.F2 = jets.f2;
  out.l = jets.l;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double acc = dG[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(l)] -
                       dG[static_cast<std::size_t>(l)][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
          for (int mm = 0; mm < n; ++mm)
            acc += base.chern[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)][static_cast<std::size_t>(mm)] *
                       base.chern[static_cast<std::size_t>(mm)][static_cast<std::size_t>(j)][static_cast<std::size_t>(l)] -
                   base.chern[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)][static_cast<std::size_t>(mm)] *
                       base.chern[static_cast<std::size_t>(mm)][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
          out.hh[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] = acc;
        }
  return out;
}

Mat4 flag_form_from_hh(int n, const HHAssembly& a, const Vec4& y) {
  // Phi_{jl} = g_{im} R^m_{jkl} y^i y^k ; flag K(y,u) = Phi(u,u)/(F^2 h_y(u,u))
  Mat4 phi{};
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        for (int mm = 0; mm < n; ++mm)
          for (int k = 0; k < n; ++k)
            acc += a.g[static_cast<std::size_t>(i)][static_cast<std::size_t>(mm)] *
                   a.hh[static_cast<std::size_t>(mm)][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] *
                   y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(k)];
      phi[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)] = acc;
    }
  return phi;
}

double flag_from_form(int n, const Mat4& phi, const Mat4& g, const Vec4& l, double F2,
                      const Vec4& u) {
  double num = quadratic_form(n, phi, u, u);
  double guu = quadratic_form(n, g, u, u);
  double gyu = dot(n, l, u);
  double den = F2 * guu - gyu * gyu;
  if (std::abs(den) < 1e-14 * F2 * std::max(guu, 1e-300))
    throw DomainError("flag curvature undefined: u parallel to y");
  return num / den;
}

double ricci_from_form(int n, const Mat4& phi, const Mat4& g_inv) {
  // equals F^2 sum K(y,e_i) over a g_y-orthonormal complement of y/F, since
  // the flag form annihilates y by the (k,l) antisymmetry of R
  double acc = 0.0;
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l)
      acc += g_inv[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)] * phi[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)];
  return acc;
}

}  // namespace

CurvatureData curvatures(const MetricSpec& m, const Vec4& x, const Vec4& y, const Vec4& u) {
  const int n = m.dimension();
  require_nonzero(n, y, "curvatures");
  auto a = assemble_hh(m, x, y);
  CurvatureData out;
  out.n = n;
  out.hh = a.hh;
  out.flag_form = flag_form_from_hh(n, a, y);
  out.flag = flag_from_form(n, out.flag_form, a.g, a.l, a.F2, u);
  out.ricci = ricci_from_form(n, out.flag_form, a.g_inv);
  return out;
}

double flag_curvature(const MetricSpec& m, const Vec4& x, const Vec4& y, const Vec4& u) {
  const int n = m.dimension();
  require_nonzero(n, y, "flag_curvature");
  auto a = assemble_hh(m, x, y);
  Mat4 phi = flag_form_from_hh(n, a, y);
  return flag_from_form(n, phi, a.g, a.l, a.F2, u);
}

RicciData ricci_scalar(const MetricSpec& m, const Vec4& x, const Vec4& y) {
  const int n = m.dimension();
  require_nonzero(n, y, "ricci_scalar");
  auto a = assemble_hh(m, x, y);
  RicciData out;
  out.flag_form = flag_form_from_hh(n, a, y);
  out.g = a.g;
  out.g_inv = a.g_inv;
  out.F2 = a.F2;
  out.ricci = ricci_from_form(n, out.flag_form, a.g_inv);
  return out;
}

}  // namespace finslab
