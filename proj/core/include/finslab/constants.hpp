#pragma once

#include "finslab/metric.hpp"
#include "finslab/region.hpp"

namespace finslab {

struct WitnessTriple {
  Vec4 V{}, W{}, Y{};
};

// Misalignment and uniform constants at a point or over a region.
// alpha_M = sup g_V(Y,Y)/g_W(Y,Y) over indicatrix triples, alpha_m the inf,
// kappa/kappa_star the uniform smoothness/convexity constants, rho the
// reversibility sup F(V)/F(-V).
struct MisalignmentReport {
  double alpha_M = 1.0;
  double alpha_m = 1.0;
  double alpha = 1.0;  // = alpha_M
  double kappa = 1.0;
  double kappa_star = 1.0;
  double rho = 1.0;
  WitnessTriple witness_max{};
  WitnessTriple witness_min{};
  bool degenerate = false;  // riemannian plateau: all triples tie
  double tol_achieved = 0.0;
};

MisalignmentReport misalignment_local(const MetricSpec& m, const Vec4& x, double tol);

// sup over the region of the local misalignment (lattice + refinement near
// the maximizer); monotone under region inclusion for nested lattices
double misalignment_region(const MetricSpec& m, const Region& region, double tol);

struct UniformConstants {
  double kappa = 1.0;
  double kappa_star = 1.0;
  double rho = 1.0;
};
UniformConstants uniform_constants(const MetricSpec& m, const Region& region, double tol);

// Dense-grid evaluation of alpha_M(x) at a given angular resolution with no
// refinement. Identical to the full grid^3 triple scan: the ratio factors
// through max_V / min_W at fixed Y, which this exploits.
double misalignment_bruteforce(const MetricSpec& m, const Vec4& x, int grid);

}  // namespace finslab
