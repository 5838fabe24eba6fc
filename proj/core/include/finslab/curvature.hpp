#pragma once

#include "finslab/metric.hpp"

namespace finslab {

// hh-curvature of the Chern connection at (x,y), assembled from
//   R^i_{jkl} = dGamma^i_{jl}/dx^k - dGamma^i_{jk}/dx^l
//             + Gamma^i_{km} Gamma^m_{jl} - Gamma^i_{lm} Gamma^m_{jk}
// with horizontal derivatives delta/delta x, antisymmetric in (k,l).
struct CurvatureData {
  int n = 0;
  Ten4 hh{};            // R^i_{jkl}
  Mat4 flag_form{};     // Phi_{jl} = g_{im} R^m_{jkl} y^i y^k
  double flag = 0.0;    // K(y,u)
  double ricci = 0.0;   // F^2(y) sum_i K(y,e_i) over a g_y-orthonormal complement
};

CurvatureData curvatures(const MetricSpec& m, const Vec4& x, const Vec4& y, const Vec4& u);

// flag curvature only (u must be linearly independent from y)
double flag_curvature(const MetricSpec& m, const Vec4& x, const Vec4& y, const Vec4& u);

// flag form and Ricci without picking a flag
struct RicciData {
  Mat4 flag_form{};
  Mat4 g{}, g_inv{};
  double F2 = 0.0;
  double ricci = 0.0;
};
RicciData ricci_scalar(const MetricSpec& m, const Vec4& x, const Vec4& y);

}  // namespace finslab
