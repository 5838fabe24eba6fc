#pragma once

#include <cstdint>
#include <vector>

#include "finslab/expr.hpp"
#include "finslab/linalg.hpp"

namespace finslab {

enum class DomainKind { kTorus, kBall };
enum class BoundaryKind { kNeumann, kDirichlet };

// Scalar field on a uniform 2-D grid of cell centers; periodic torus
// [0,Lx)x[0,Ly) or a ball with Neumann/Dirichlet far boundary.
struct FieldGrid {
  DomainKind kind = DomainKind::kTorus;
  BoundaryKind bc = BoundaryKind::kNeumann;
  double dirichlet_value = 0.0;

  double Lx = 2.0 * M_PI, Ly = 2.0 * M_PI;  // torus periods
  Vec4 center{};                            // ball center
  double radius = 1.0;

  int nx = 0, ny = 0;
  double h = 0.0;
  double x0 = 0.0, y0 = 0.0;  // first cell center
  double t = 0.0;

  std::vector<double> v;
  std::vector<std::uint8_t> inside;  // all ones on the torus

  int idx(int i, int j) const { return j * nx + i; }
  int wrap_i(int i) const { return (i % nx + nx) % nx; }
  int wrap_j(int j) const { return (j % ny + ny) % ny; }
  Vec4 cell(int i, int j) const { return Vec4{x0 + h * i, y0 + h * j, 0.0, 0.0}; }
  bool is_inside(int i, int j) const {
    if (kind == DomainKind::kTorus) return true;
    if (i < 0 || j < 0 || i >= nx || j >= ny) return false;
    return inside[static_cast<std::size_t>(idx(i, j))] != 0;
  }

  static FieldGrid torus(int n, double Lx, double Ly);
  static FieldGrid ball(int n, const Vec4& center, double radius, BoundaryKind bc,
                        double dirichlet_value = 0.0);

  void fill(const Expr& e);  // evaluate e(x) at cell centers
  void fill_constant(double c);

  double min_inside() const;
  double max_inside() const;
  bool finite() const;
};

}  // namespace finslab
