#pragma once

#include <array>
#include <string>
#include <vector>

#include "finslab/comparison.hpp"
#include "finslab/pde.hpp"

namespace finslab {

struct EstimateParams {
  double N = 3.0;
  double beta = 2.0;
  double eps = 0.0;  // 0: the proof's choice 2(beta-1)/beta^2
  // measured geometry (auto-filled by the checks when < 0)
  double K = -1.0;
  double Kprime = -1.0;
  double K0 = -1.0;
  double alpha = -1.0;
  double gamma = -1.0;
  double theta = -1.0;
  double L = -1.0;   // sup u over the window
  double R = 1.0;    // ball radius (noncompact)
  double T = 1.0;    // time window length
  double t_lo = 0.0, t_hi = 1e300;  // assertion window
  int curvature_samples = 96;
  double near_constant_tol = 1e-3;  // degenerate-regime check (thm with vanishing rhs)

  double epsilon() const { return eps > 0.0 ? eps : 2.0 * (beta - 1.0) / (beta * beta); }
};

// H = t (F^2(grad f) - beta f_t - beta q) with f = log u, plus the
// reverse-orientation branch built from F(-grad u).
struct LiYauFrame {
  double t = 0.0;
  std::vector<double> F2;     // F^2(grad f)
  std::vector<double> F2rev;  // F^2(-grad f)
  std::vector<double> ft;     // d log u / dt
  std::vector<double> H;
  std::vector<double> Hrev;
  std::vector<std::uint8_t> mask;
};
std::vector<LiYauFrame> li_yau_H(const MetricSpec& m, const MeasureSpec& mu,
                                 const SolveResult& run, const PotentialSpec& q, double beta);

struct VerificationReport {
  std::string name;
  long points = 0;
  long violations = 0;
  double min_margin = 0.0;
  double empirical_constant = 0.0;
  bool empirical_set = false;
  bool degenerate_regime = false;
  double K = 0.0, Kprime = 0.0, gamma = 0.0, theta = 0.0, L = 0.0;
  std::string notes;
  std::vector<std::array<double, 3>> rows;  // (t, sup lhs, rhs)
};

// weighted Ricci lower-bound magnitude over a region: max(0, -inf Ric^k)
struct MeasuredCurvature {
  double K = 0.0;
  double tol = 0.0;
  double S_max = 0.0;  // sup |S|
};
MeasuredCurvature measure_weighted_ricci(const MetricSpec& m, const MeasureSpec& mu,
                                         const Region& region, double k, int samples,
                                         bool mixed = false);

// Thm-style compact check with Ric^N >= -K: sup H/t <= N beta^2/(2t) + bracket^{1/2}
VerificationReport check_compact_N(const MetricSpec& m, const MeasureSpec& mu,
                                   const SolveResult& run, const PotentialSpec& q,
                                   EstimateParams params);

// compact check with Ric^inf >= -K:
//   F(grad f)/(1-f) <= sqrt(2) (K^1/2 + (q^-)^1/2 + gamma^1/3), f = log(u/L)
VerificationReport check_compact_inf(const MetricSpec& m, const MeasureSpec& mu,
                                     const SolveResult& run, const PotentialSpec& q,
                                     EstimateParams params);

enum class NoncompactVariant { kN, kInf };

// ball-domain check; computes the smallest constant C3 (resp. C) making the
// estimate hold on B(p,R) x window and reports it as empirical_constant
VerificationReport check_noncompact(const MetricSpec& m, const MeasureSpec& mu,
                                    const SolveResult& run, const PotentialSpec& q,
                                    EstimateParams params, NoncompactVariant variant);

struct HarnackPair {
  Vec4 x1{}, x2{};
  double t1 = 0.0, t2 = 0.0;
};

struct HarnackReport {
  double P = 0.0;
  double CN_implied = 0.0;
  long pairs = 0;
  long violations = 0;
  long unreachable = 0;
  double min_log_margin = 0.0;
  std::vector<std::array<double, 4>> rows;  // (Q, lhs, rhs, log margin)
  std::string notes;
};

// compact variant: C3 < 0; noncompact: pass the calibrated C3 and R
HarnackReport harnack_check(const MetricSpec& m, const MeasureSpec& mu, const SolveResult& run,
                            const PotentialSpec& q, const EstimateParams& params,
                            const std::vector<HarnackPair>& pairs, double C3 = -1.0);

// path-action infimum Q_{beta,R} for one pair by grid dijkstra + smoothing
double harnack_Q(const MetricSpec& m, const FieldGrid& geo, const PotentialSpec& q,
                 const HarnackPair& pair, double beta);

}  // namespace finslab
