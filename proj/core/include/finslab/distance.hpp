#pragma once

#include <cstdint>
#include <vector>

#include "finslab/metric.hpp"

namespace finslab {

// Uniform 2-D lattice of cell centers x_ij = origin + (i*h, j*h).
struct GridSpec2 {
  double ox = 0.0, oy = 0.0;
  double h = 0.01;
  int nx = 0, ny = 0;

  Vec4 center(int i, int j) const { return Vec4{ox + h * i, oy + h * j, 0.0, 0.0}; }
  int idx(int i, int j) const { return j * nx + i; }
  bool valid(int i, int j) const { return i >= 0 && j >= 0 && i < nx && j < ny; }
  int cells() const { return nx * ny; }

  static GridSpec2 covering(const Vec4& center, double radius, int n_cells) {
    GridSpec2 g;
    g.h = 2.0 * radius / n_cells;
    g.ox = center[0] - radius + 0.5 * g.h;
    g.oy = center[1] - radius + 0.5 * g.h;
    g.nx = n_cells;
    g.ny = n_cells;
    return g;
  }
};

enum class DistanceMethod { kShooting, kEikonal };

// Forward distance field r(x) = d(p, x) with its differential and a
// smoothness mask (false at the base point, at cut-locus candidates and
// where no geodesic arrived).
struct DistanceField {
  GridSpec2 grid;
  Vec4 p{};
  DistanceMethod method = DistanceMethod::kShooting;
  std::vector<double> r;
  std::vector<double> drx, dry;    // dr covector (exact along rays for shooting)
  std::vector<double> gx, gy;      // gradient vector (unit F-speed arrival direction)
  std::vector<std::uint8_t> smooth;
  std::vector<std::uint8_t> reached;
  bool disagreement_warning = false;
};

struct ShootingParams {
  int rays = 1024;
  double dt = 4e-3;
  double t_max = 0.0;           // 0: choose from the grid extent
  double coverage_radius = 0.0; // 0: budget travel time for the whole grid;
                                // else only for cells within this euclidean
                                // radius of the base point
};

struct EikonalParams {
  int max_rounds = 24;
  double tol = 1e-10;
  double source_radius_cells = 4.0;
};

DistanceField distance_field_shooting(const MetricSpec& m, const Vec4& p, const GridSpec2& grid,
                                      const ShootingParams& params = {});
DistanceField distance_field_eikonal(const MetricSpec& m, const Vec4& p, const GridSpec2& grid,
                                     const EikonalParams& params = {});
DistanceField distance_field(const MetricSpec& m, const Vec4& p, const GridSpec2& grid,
                             DistanceMethod method);

// max |r_a - r_b| over the joint smooth mask
double distance_field_disagreement(const DistanceField& a, const DistanceField& b);

// max |F*(x, dr_fd) - 1| over smooth interior cells, dr_fd by central
// differences of r (an eikonal-property residual; works for both methods)
double eikonal_residual(const MetricSpec& m, const DistanceField& f);

}  // namespace finslab
