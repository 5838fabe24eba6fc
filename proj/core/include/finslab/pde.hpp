#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "finslab/grid.hpp"
#include "finslab/measure.hpp"
#include "finslab/metric.hpp"
#include "finslab/region.hpp"

namespace finslab {

// Potential q(x) with sampled bounds gamma = sup F(grad q), theta = sup
// Delta^V q over a region (V swept over a direction fan).
struct PotentialSpec {
  Expr q;           // empty: q = 0
  bool zero = true;

  static PotentialSpec none();
  static PotentialSpec expression(int n, const std::string& text);
  static PotentialSpec constant(double c);

  double eval(const Vec4& x) const;
};

struct PotentialBounds {
  double gamma = 0.0;  // sup F(grad q)
  double theta = 0.0;  // sup Delta^V q over the V-fan
  double q_min = 0.0;
  double q_max = 0.0;
};
PotentialBounds potential_bounds(const MetricSpec& m, const MeasureSpec& mu,
                                 const PotentialSpec& q, const Region& region, int fan = 8);

enum class Scheme { kExplicitRk2, kSemiImplicit };

struct SolverConfig {
  double dt = 0.0;  // 0: from the CFL bound
  double t_end = 1.0;
  double eps_deg = 1e-8;       // degeneracy threshold as a fraction of mean |du|
  double newton_tol = 1e-12;   // legendre inversion tolerance
  Scheme scheme = Scheme::kExplicitRk2;
  double cfl_safety = 0.4;
  std::vector<double> snapshot_times;  // always includes t_end
};

// Quasilinear operator Delta^{grad u} u = div_mu(grad u) on a FieldGrid,
// with conservative face fluxes and Legendre inversion per face. Face
// inversions are warm-started from the previous application.
class FinslerLaplacian {
 public:
  FinslerLaplacian(const MetricSpec& m, const MeasureSpec& mu, const FieldGrid& proto,
                   double eps_deg = 1e-8);
  ~FinslerLaplacian();
  FinslerLaplacian(FinslerLaplacian&&) noexcept;

  // out = Delta^{grad u} u; returns the number of failed face inversions
  int apply(const std::vector<double>& u, std::vector<double>* out);

  // linearized apply with face coefficients frozen at the given state
  void freeze(const std::vector<double>& u);
  void apply_frozen(const std::vector<double>& u, std::vector<double>* out) const;

  double suggest_dt(double cfl_safety) const;
  double mass(const std::vector<double>& u) const;  // integral of u dmu
  const std::vector<double>& sigma() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct Snapshot {
  double t = 0.0;
  std::vector<double> u;
  std::vector<double> ut;  // centered in time; empty on the last snapshot
};

struct SolveResult {
  FieldGrid geometry;  // grid metadata (v holds the final state)
  std::vector<Snapshot> snapshots;
  long steps = 0;
  double dt = 0.0;
  bool aborted = false;
  std::string abort_reason;
};

SolveResult solve_schrodinger(const MetricSpec& m, const MeasureSpec& mu, const FieldGrid& u0,
                              const PotentialSpec& q, const SolverConfig& cfg);

// one application of the operator on a free-standing field (test/CLI entry)
std::vector<double> nonlinear_laplacian_u(const MetricSpec& m, const MeasureSpec& mu,
                                          const FieldGrid& u, double eps_deg = 1e-8);

}  // namespace finslab
