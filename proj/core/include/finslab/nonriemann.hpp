#pragma once

#include <cstdint>

#include "finslab/measure.hpp"
#include "finslab/metric.hpp"
#include "finslab/region.hpp"

namespace finslab {

// distortion tau(x,y) = log( sqrt(det g(x,y)) / sigma(x) )
double distortion(const MetricSpec& m, const MeasureSpec& mu, const Vec4& x, const Vec4& y);

// tau together with its first and second derivatives along the geodesic
// through (x,y): S = dtau/dt, Sdot = d2tau/dt2, by a 5-point stencil whose
// step adapts to the local F-scale.
struct DistortionData {
  double tau = 0.0;
  double S = 0.0;
  double Sdot = 0.0;
};
DistortionData distortion_s(const MetricSpec& m, const MeasureSpec& mu, const Vec4& x,
                            const Vec4& y);

// covector T_i(V,W) = delta tau/delta x^i |_(x,V) - delta tau/delta x^i |_(x,W)
Vec4 t_difference(const MetricSpec& m, const MeasureSpec& mu, const Vec4& x, const Vec4& V,
                  const Vec4& W);

// vector U^i(V,W) = g^{kl}(V) ( Gamma^i_kl(x,W) - Gamma^i_kl(x,V) )
Vec4 u_tensor(const MetricSpec& m, const Vec4& x, const Vec4& V, const Vec4& W);

// vector div C(V)^p = C^{ip}_{k|i}(V) V^k (horizontal Chern derivative)
Vec4 div_cartan(const MetricSpec& m, const Vec4& x, const Vec4& V);

struct NonRiemannData {
  double tau = 0.0;
  double S = 0.0;
  double Sdot = 0.0;
  Vec4 t_diff{};   // covector
  Vec4 u_vec{};    // vector
  Vec4 div_c{};    // vector
  double k0_value = 0.0;  // F(U) + F*(T) + F(div C) at this sample
};
NonRiemannData non_riemannian(const MetricSpec& m, const MeasureSpec& mu, const Vec4& x,
                              const Vec4& V, const Vec4& W);

// sup over sampled (x,V,W) of F(U(V,W)) + F*(T(V,W)) + F(div C(V))
double k0_bound(const MetricSpec& m, const MeasureSpec& mu, const Region& region, int samples,
                std::uint64_t seed);

}  // namespace finslab
