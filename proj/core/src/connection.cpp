#include "finslab/connection.hpp"

#include "finslab/detail/assembly.hpp"
#include "finslab/errors.hpp"

namespace finslab {

ConnectionData connection(const MetricSpec& m, const Vec4& x, const Vec4& y) {
  const int n = m.dimension();
  require_nonzero(n, y, "connection");
  m.require_domain(std::span<const double>(x.data(), static_cast<std::size_t>(n)));
  auto parts = detail::connection_parts<double>(m, n, x, y);
  ConnectionData out;
  out.n = n;
  out.spray = parts.spray;
  out.nonlinear = parts.nonlinear;
  out.chern = parts.chern;
  out.g = parts.g;
  out.g_inv = parts.g_inv;
  return out;
}

}  // namespace finslab
