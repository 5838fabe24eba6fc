#pragma once

#include "finslab/metric.hpp"

namespace finslab {

// Spray, nonlinear connection, Chern connection coefficients at (x,y).
struct ConnectionData {
  int n = 0;
  Vec4 spray{};      // G^i
  Mat4 nonlinear{};  // N^i_j = dG^i/dy^j
  Ten3 chern{};      // Gamma^i_{jk} = Gamma^i_{kj}
  Mat4 g{};
  Mat4 g_inv{};
};

ConnectionData connection(const MetricSpec& m, const Vec4& x, const Vec4& y);

}  // namespace finslab
