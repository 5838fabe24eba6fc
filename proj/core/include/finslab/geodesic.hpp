#pragma once

#include <vector>

#include "finslab/metric.hpp"

namespace finslab {

// Forward geodesic: classical RK4 on (x,y)' = (y, -2G(x,y)).
struct GeodesicPath {
  std::vector<double> t;
  std::vector<Vec4> x;
  std::vector<Vec4> y;
  bool exited_domain = false;  // truncated at the last in-domain state
};

GeodesicPath geodesic(const MetricSpec& m, const Vec4& x0, const Vec4& y0, double T, int steps);

// single state advanced to time t (integrates with |t|/dt_hint steps)
struct GeodesicState {
  Vec4 x{};
  Vec4 y{};
  bool ok = true;
};
GeodesicState geodesic_advance(const MetricSpec& m, const Vec4& x0, const Vec4& y0, double t,
                               double dt_hint = 1e-3);

Vec4 spray_coefficients(const MetricSpec& m, const Vec4& x, const Vec4& y);

// family-specialized spray used inside integrators; agrees with
// spray_coefficients to integrator tolerance (tested) but is much cheaper
// for x-independent, quadratic and funk metrics
Vec4 spray_fast(const MetricSpec& m, const Vec4& x, const Vec4& y);

}  // namespace finslab
