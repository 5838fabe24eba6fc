#pragma once

#include <optional>

#include "finslab/measure.hpp"
#include "finslab/metric.hpp"

namespace finslab {

// Pointwise metric data at (x,y): fundamental form, its inverse, the Cartan
// tensor and its mean trace.
struct FundamentalData {
  int n = 0;
  double F2 = 0.0;
  double F = 0.0;
  Vec4 l{};            // l_i = g_ij y^j = 1/2 dF^2/dy^i
  Mat4 g{};
  Mat4 g_inv{};
  double det_g = 0.0;
  Ten3 cartan{};       // C_ijk
  Vec4 mean_cartan{};  // I_k = g^{ij} C_ijk
};

FundamentalData fundamental(const MetricSpec& m, const Vec4& x, const Vec4& y);

// Legendre transform l(y) = g_y(y,.) and its inverse by damped Newton.
struct LegendreResult {
  Vec4 v{};            // covector (to_cotangent) or vector (to_tangent)
  double fstar = 0.0;  // F*(xi) = F(l^{-1}(xi))
  int iterations = 0;
};

LegendreResult legendre_to_cotangent(const MetricSpec& m, const Vec4& x, const Vec4& y);
LegendreResult legendre_to_tangent(const MetricSpec& m, const Vec4& x, const Vec4& xi,
                                   const std::optional<Vec4>& hint = std::nullopt);

double fstar(const MetricSpec& m, const Vec4& x, const Vec4& xi);

// h_y(u,v) = g_y(u,v) - g_y(y,u) g_y(y,v) / F^2(y)
double angular_metric(const MetricSpec& m, const Vec4& x, const Vec4& y, const Vec4& u,
                      const Vec4& v);

// mixed angular form h_{V,W}(u,v) = g_V(u,v) - g_V(u,W) g_V(v,W) / g_V(W,W)
double mixed_angular_metric(const MetricSpec& m, const Vec4& x, const Vec4& V, const Vec4& W,
                            const Vec4& u, const Vec4& v);

}  // namespace finslab
