#include "finslab/grid.hpp"

#include <cmath>
#include <limits>

#include "finslab/errors.hpp"

namespace finslab {

FieldGrid FieldGrid::torus(int n, double Lx, double Ly) {
  if (n < 4) throw ConfigError("grid too small");
  FieldGrid g;
  g.kind = DomainKind::kTorus;
  g.nx = n;
  g.ny = n;
  g.Lx = Lx;
  g.Ly = Ly;
  g.h = Lx / n;
  if (std::abs(Ly / n - g.h) > 1e-12 * g.h)
    throw ConfigError("torus grid must have square cells (Lx/n == Ly/n)");
  g.x0 = 0.5 * g.h;
  g.y0 = 0.5 * g.h;
  g.v.assign(static_cast<std::size_t>(n) * n, 0.0);
  g.inside.assign(static_cast<std::size_t>(n) * n, 1);
  return g;
}

FieldGrid FieldGrid::ball(int n, const Vec4& center, double radius, BoundaryKind bc,
                          double dirichlet_value) {
  if (n < 4) throw ConfigError("grid too small");
  FieldGrid g;
  g.kind = DomainKind::kBall;
  g.bc = bc;
  g.dirichlet_value = dirichlet_value;
  g.center = center;
  g.radius = radius;
  g.nx = n;
  g.ny = n;
  g.h = 2.0 * radius / n;
  g.x0 = center[0] - radius + 0.5 * g.h;
  g.y0 = center[1] - radius + 0.5 * g.h;
  g.v.assign(static_cast<std::size_t>(n) * n, 0.0);
  g.inside.assign(static_cast<std::size_t>(n) * n, 0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      Vec4 x = g.cell(i, j);
      double d = std::hypot(x[0] - center[0], x[1] - center[1]);
      if (d <= radius) g.inside[static_cast<std::size_t>(g.idx(i, j))] = 1;
    }
  return g;
}

void FieldGrid::fill(const Expr& e) {
  std::array<double, kMaxDim> yz{};
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      Vec4 x = cell(i, j);
      v[static_cast<std::size_t>(idx(i, j))] =
          e.eval(std::span<const double>(x.data(), 2), std::span<const double>(yz.data(), 2));
    }
}

void FieldGrid::fill_constant(double c) {
  for (auto& e : v) e = c;
}

double FieldGrid::min_inside() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (inside[i]) m = std::min(m, v[i]);
  return m;
}

double FieldGrid::max_inside() const {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (inside[i]) m = std::max(m, v[i]);
  return m;
}

bool FieldGrid::finite() const {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (inside[i] && !std::isfinite(v[i])) return false;
  return true;
}

}  // namespace finslab
