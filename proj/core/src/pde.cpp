#include "finslab/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "finslab/detail/assembly.hpp"
#include "finslab/errors.hpp"
#include "finslab/fundamental.hpp"
#include "finslab/parallel.hpp"

namespace finslab {

PotentialSpec PotentialSpec::none() { return PotentialSpec{}; }

PotentialSpec PotentialSpec::expression(int n, const std::string& text) {
  PotentialSpec p;
  p.q = Expr::parse(text, n);
  if (p.q.uses_y()) throw ConfigError("potential must not depend on y");
  p.zero = false;
  return p;
}

PotentialSpec PotentialSpec::constant(double c) {
  PotentialSpec p;
  p.q = Expr::constant(c);
  p.zero = c == 0.0;
  return p;
}

double PotentialSpec::eval(const Vec4& x) const {
  if (zero && q.empty()) return 0.0;
  std::array<double, kMaxDim> yz{};
  return q.eval(std::span<const double>(x.data(), 2), std::span<const double>(yz.data(), 2));
}

PotentialBounds potential_bounds(const MetricSpec& m, const MeasureSpec& mu,
                                 const PotentialSpec& q, const Region& region, int fan) {
  PotentialBounds out;
  if (q.zero && q.q.empty()) return out;
  const int n = m.dimension();
  double pitch = region.kind == RegionKind::kBall ? region.radius / 8.0
                                                  : (region.hi[0] - region.lo[0]) / 12.0;
  auto pts = region.lattice(std::max(pitch, 1e-3));
  out.q_min = std::numeric_limits<double>::infinity();
  out.q_max = -std::numeric_limits<double>::infinity();

  std::array<double, kMaxDim> yz{};
  for (const auto& x : pts) {
    if (!m.in_domain(std::span<const double>(x.data(), static_cast<std::size_t>(n)))) continue;
    double qv = q.eval(x);
    out.q_min = std::min(out.q_min, qv);
    out.q_max = std::max(out.q_max, qv);

    // dq and d2q from a twice x-promoted evaluation
    VecT<J2> xj{};
    for (int i = 0; i < n; ++i) {
      J2 v(x[static_cast<std::size_t>(i)]);
      v.d[i] = J1(1.0);
      v.f.d[i] = 1.0;
      xj[static_cast<std::size_t>(i)] = v;
    }
    std::array<J2, kMaxDim> yj{};
    J2 r = q.q.eval(std::span<const J2>(xj.data(), static_cast<std::size_t>(n)),
                    std::span<const J2>(yj.data(), static_cast<std::size_t>(n)));
    Vec4 dq{};
    for (int i = 0; i < n; ++i) dq[static_cast<std::size_t>(i)] = r.f.d[i];

    if (norm2(n, dq) > 1e-13) {
      out.gamma = std::max(out.gamma, legendre_to_tangent(m, x, dq).fstar);
    }

    // Delta^V q = e^{-Phi} d_i ( e^{Phi} g^{ij}(x,V) d_j q ) with V constant
    for (int a = 0; a < fan; ++a) {
      double th = 2.0 * M_PI * (a + 0.35) / fan;
      Vec4 V = vec2(std::cos(th), std::sin(th));
      auto xp = detail::promote(n, x, true);
      auto vp = detail::promote(n, V, false);
      MatT<J1> g1 = detail::fundamental_form(m, n, xp, vp);
      MatT<J1> gi1 = inverse(n, g1);
      J1 phi1 = mu.phi_jets(detail::spn(xp, n));
      double lap = 0.0;
      for (int i = 0; i < n; ++i) {
        // f^i = e^Phi g^{ij} d_j q as a J1 function of x
        J1 fi(0.0);
        for (int j = 0; j < n; ++j) {
          J1 dqj(r.f.d[j]);
          for (int k2 = 0; k2 < n; ++k2) dqj.d[k2] = r.d[k2].d[j];
          fi = fi + gi1[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * dqj;
        }
        fi = exp(phi1) * fi;
        lap += fi.d[i];
      }
      lap *= std::exp(-mu.log_density(x, n));
      out.theta = std::max(out.theta, lap);
    }
  }
  if (!std::isfinite(out.q_min)) { out.q_min = 0.0; out.q_max = 0.0; }
  return out;
}

// ---------------------------------------------------------------------------

struct FinslerLaplacian::Impl {
  MetricSpec m;
  MeasureSpec mu;
  FieldGrid geo;
  double eps_deg;
  int nx, ny;
  double h;
  bool fast5 = false;      // euclidean + lebesgue + torus
  bool quadratic = false;  // g independent of direction

  std::vector<double> sig;       // e^Phi at cells
  std::vector<double> inv_sig;   // e^-Phi at cells

  // face tables; east face of cell (i,j) index idx(i,j), north likewise.
  // valid: 0 skip, 1 interior, 2 dirichlet ghost right/top, 3 ghost left/bottom
  std::vector<std::uint8_t> valid_h, valid_v;
  std::vector<double> sig_h, sig_v;
  std::vector<double> A_h, A_v;  // quadratic: 4 entries per face (g^{ij})
  std::vector<Vec4> hint_h, hint_v;

  // frozen linear coefficients (semi-implicit)
  std::vector<double> F_h, F_v;

  int east_i(int i) const { return geo.kind == DomainKind::kTorus ? (i + 1) % nx : i + 1; }
  int north_j(int j) const { return geo.kind == DomainKind::kTorus ? (j + 1) % ny : j + 1; }

  Vec4 face_center_h(int i, int j) const {
    Vec4 x = geo.cell(i, j);
    return vec2(x[0] + 0.5 * h, x[1]);
  }
  Vec4 face_center_v(int i, int j) const {
    Vec4 x = geo.cell(i, j);
    return vec2(x[0], x[1] + 0.5 * h);
  }

  Impl(const MetricSpec& mm, const MeasureSpec& mmu, const FieldGrid& proto, double eps)
      : m(mm), mu(mmu), geo(proto), eps_deg(eps) {
    nx = geo.nx;
    ny = geo.ny;
    h = geo.h;
    const std::size_t cells = static_cast<std::size_t>(nx) * ny;
    sig.resize(cells);
    inv_sig.resize(cells);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        double phi = mu.log_density(geo.cell(i, j), 2);
        sig[static_cast<std::size_t>(geo.idx(i, j))] = std::exp(phi);
        inv_sig[static_cast<std::size_t>(geo.idx(i, j))] = std::exp(-phi);
      }
    quadratic = m.quadratic();
    fast5 = quadratic && m.kind() == MetricKind::kEuclidean &&
            mu.kind() == MeasureKind::kLebesgue && geo.kind == DomainKind::kTorus;

    valid_h.assign(cells, 0);
    valid_v.assign(cells, 0);
    sig_h.assign(cells, 1.0);
    sig_v.assign(cells, 1.0);
    if (quadratic && !fast5) {
      A_h.assign(cells * 4, 0.0);
      A_v.assign(cells * 4, 0.0);
    }
    hint_h.assign(cells, Vec4{});
    hint_v.assign(cells, Vec4{});

    auto setup_face = [&](int i, int j, bool horizontal) {
      int i2 = horizontal ? east_i(i) : i;
      int j2 = horizontal ? j : north_j(j);
      std::size_t id = static_cast<std::size_t>(geo.idx(i, j));
      bool a_in = geo.is_inside(i, j);
      bool b_in = geo.kind == DomainKind::kTorus ? true : geo.is_inside(i2, j2);
      if (geo.kind == DomainKind::kBall && (i2 >= nx || j2 >= ny)) b_in = false;
      std::uint8_t v = 0;
      if (a_in && b_in) v = 1;
      else if (geo.kind == DomainKind::kBall && geo.bc == BoundaryKind::kDirichlet) {
        if (a_in && !b_in) v = 2;
        else if (!a_in && b_in) v = 3;
      }
      auto& valid = horizontal ? valid_h : valid_v;
      valid[id] = v;
      if (!v) return;
      Vec4 xf = horizontal ? face_center_h(i, j) : face_center_v(i, j);
      double phi = mu.log_density(xf, 2);
      (horizontal ? sig_h : sig_v)[id] = std::exp(phi);
      if (quadratic && !fast5) {
        Mat4 g = detail::fundamental_form(m, 2, xf, vec2(1.0, 0.0));
        Mat4 gi = inverse(2, g);
        auto& A = horizontal ? A_h : A_v;
        A[id * 4 + 0] = gi[0][0];
        A[id * 4 + 1] = gi[0][1];
        A[id * 4 + 2] = gi[1][0];
        A[id * 4 + 3] = gi[1][1];
      }
    };
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        setup_face(i, j, true);
        setup_face(i, j, false);
      }
  }

  // differential at a face; returns false when unavailable
  bool face_xi(const std::vector<double>& u, int i, int j, bool horizontal, Vec4* xi) const {
    std::size_t id = static_cast<std::size_t>(geo.idx(i, j));
    std::uint8_t v = (horizontal ? valid_h : valid_v)[id];
    if (!v) return false;
    int i2 = horizontal ? east_i(i) : i;
    int j2 = horizontal ? j : north_j(j);
    auto val = [&](int ii, int jj, double* out) {
      if (geo.kind == DomainKind::kTorus) {
        *out = u[static_cast<std::size_t>(geo.idx(geo.wrap_i(ii), geo.wrap_j(jj)))];
        return true;
      }
      if (!geo.is_inside(ii, jj)) return false;
      *out = u[static_cast<std::size_t>(geo.idx(ii, jj))];
      return true;
    };
    double ua = 0.0, ub = 0.0;
    if (v == 1) {
      val(i, j, &ua);
      val(i2, j2, &ub);
    } else if (v == 2) {  // ghost on the far side
      val(i, j, &ua);
      ub = 2.0 * geo.dirichlet_value - ua;
    } else {
      val(i2, j2, &ub);
      ua = 2.0 * geo.dirichlet_value - ub;
    }
    double normal = (ub - ua) / h;
    // tangential component: average of available centered differences
    double acc = 0.0;
    int cnt = 0;
    auto add_tan = [&](int ii, int jj) {
      double p = 0.0, q2 = 0.0;
      bool okp, okq;
      if (horizontal) {
        okp = val(ii, jj + 1, &p);
        okq = val(ii, jj - 1, &q2);
      } else {
        okp = val(ii + 1, jj, &p);
        okq = val(ii - 1, jj, &q2);
      }
      if (okp && okq) {
        acc += (p - q2) / (2.0 * h);
        ++cnt;
      }
    };
    if (v == 1) {
      add_tan(i, j);
      add_tan(i2, j2);
    } else if (v == 2) {
      add_tan(i, j);
    } else {
      add_tan(i2, j2);
    }
    double tang = cnt ? acc / cnt : 0.0;
    *xi = horizontal ? vec2(normal, tang) : vec2(tang, normal);
    return true;
  }

  int flux_pass(const std::vector<double>& u, std::vector<double>* fx, std::vector<double>* fy) {
    const std::size_t cells = static_cast<std::size_t>(nx) * ny;
    fx->assign(cells, 0.0);
    fy->assign(cells, 0.0);

    if (fast5) {  // euclidean torus with lebesgue measure: plain differences
      parallel_for(static_cast<std::size_t>(ny), [&](std::size_t jj) {
        int j = static_cast<int>(jj);
        int jn = (j + 1) % ny;
        for (int i = 0; i < nx; ++i) {
          int ie = (i + 1) % nx;
          std::size_t id = static_cast<std::size_t>(geo.idx(i, j));
          (*fx)[id] = (u[static_cast<std::size_t>(geo.idx(ie, j))] - u[id]) / h;
          (*fy)[id] = (u[static_cast<std::size_t>(geo.idx(i, jn))] - u[id]) / h;
        }
      });
      return 0;
    }

    // mean gradient magnitude for the degeneracy threshold (general path)
    double mean_xi = 0.0;
    long cnt = 0;
    if (!quadratic) {
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          Vec4 xi;
          if (face_xi(u, i, j, true, &xi)) { mean_xi += norm2(2, xi); ++cnt; }
        }
      mean_xi = cnt ? mean_xi / cnt : 0.0;
    }
    const double thresh = eps_deg * mean_xi;

    std::vector<int> fails(static_cast<std::size_t>(ny), 0);
    auto do_row = [&](std::size_t jj) {
      int j = static_cast<int>(jj);
      for (int i = 0; i < nx; ++i) {
        for (int hor = 0; hor < 2; ++hor) {
          bool horizontal = hor == 0;
          std::size_t id = static_cast<std::size_t>(geo.idx(i, j));
          Vec4 xi;
          if (!face_xi(u, i, j, horizontal, &xi)) continue;
          double s = (horizontal ? sig_h : sig_v)[id];
          double f0, f1;
          if (quadratic) {
            const auto& A = horizontal ? A_h : A_v;
            f0 = A[id * 4 + 0] * xi[0] + A[id * 4 + 1] * xi[1];
            f1 = A[id * 4 + 2] * xi[0] + A[id * 4 + 3] * xi[1];
          } else {
            double nrm = norm2(2, xi);
            Vec4 xf = horizontal ? face_center_h(i, j) : face_center_v(i, j);
            if (nrm < thresh || nrm < 1e-300) {
              // degenerate cell: linear fallback at a fixed direction keeps
              // the operator continuous and vanishing with |du|
              Mat4 g = detail::fundamental_form(m, 2, xf, m.degenerate_direction());
              Mat4 gi = inverse(2, g);
              f0 = gi[0][0] * xi[0] + gi[0][1] * xi[1];
              f1 = gi[1][0] * xi[0] + gi[1][1] * xi[1];
            } else {
              auto& hint = (horizontal ? hint_h : hint_v)[id];
              std::optional<Vec4> h0;
              if (norm2(2, hint) > 1e-13) h0 = hint;
              try {
                auto lt = legendre_to_tangent(m, xf, xi, h0);
                hint = lt.v;
                f0 = lt.v[0];
                f1 = lt.v[1];
              } catch (const Error&) {
                ++fails[jj];
                continue;
              }
            }
          }
          if (horizontal) (*fx)[id] = s * f0;
          else (*fy)[id] = s * f1;
        }
      }
    };
    parallel_for(static_cast<std::size_t>(ny), do_row);
    int total = 0;
    for (int f : fails) total += f;
    return total;
  }

  int apply(const std::vector<double>& u, std::vector<double>* out) {
    const std::size_t cells = static_cast<std::size_t>(nx) * ny;
    std::vector<double> fx, fy;
    int fails = flux_pass(u, &fx, &fy);
    out->assign(cells, 0.0);
    parallel_for(static_cast<std::size_t>(ny), [&](std::size_t jj) {
      int j = static_cast<int>(jj);
      for (int i = 0; i < nx; ++i) {
        std::size_t id = static_cast<std::size_t>(geo.idx(i, j));
        if (!geo.is_inside(i, j)) continue;
        int iw = geo.kind == DomainKind::kTorus ? (i + nx - 1) % nx : i - 1;
        int js = geo.kind == DomainKind::kTorus ? (j + ny - 1) % ny : j - 1;
        double e = fx[id];
        double w = iw >= 0 ? fx[static_cast<std::size_t>(geo.idx(iw, j))] : 0.0;
        double nn = fy[id];
        double s = js >= 0 ? fy[static_cast<std::size_t>(geo.idx(i, js))] : 0.0;
        (*out)[id] = inv_sig[id] * ((e - w) + (nn - s)) / h;
      }
    });
    return fails;
  }

  void freeze(const std::vector<double>& u) {
    const std::size_t cells = static_cast<std::size_t>(nx) * ny;
    F_h.assign(cells * 4, 0.0);
    F_v.assign(cells * 4, 0.0);
    double mean_xi = 0.0;
    long cnt = 0;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        Vec4 xi;
        if (face_xi(u, i, j, true, &xi)) { mean_xi += norm2(2, xi); ++cnt; }
      }
    mean_xi = cnt ? mean_xi / cnt : 0.0;
    const double thresh = eps_deg * mean_xi;

    parallel_for(static_cast<std::size_t>(ny), [&](std::size_t jj) {
      int j = static_cast<int>(jj);
      for (int i = 0; i < nx; ++i) {
        for (int hor = 0; hor < 2; ++hor) {
          bool horizontal = hor == 0;
          std::size_t id = static_cast<std::size_t>(geo.idx(i, j));
          if (!(horizontal ? valid_h : valid_v)[id]) continue;
          Vec4 xi;
          if (!face_xi(u, i, j, horizontal, &xi)) continue;
          Vec4 xf = horizontal ? face_center_h(i, j) : face_center_v(i, j);
          Vec4 dir = m.degenerate_direction();
          if (!quadratic && norm2(2, xi) >= std::max(thresh, 1e-300)) {
            try {
              dir = legendre_to_tangent(m, xf, xi).v;
            } catch (const Error&) {
              dir = m.degenerate_direction();
            }
          }
          Mat4 g = detail::fundamental_form(m, 2, xf, dir);
          Mat4 gi = inverse(2, g);
          auto& F = horizontal ? F_h : F_v;
          double s = (horizontal ? sig_h : sig_v)[id];
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) F[id * 4 + 2 * a + b] = s * gi[a][b];
        }
      }
    });
  }

  void apply_frozen(const std::vector<double>& u, std::vector<double>* out) const {
    const std::size_t cells = static_cast<std::size_t>(nx) * ny;
    std::vector<double> fx(cells, 0.0), fy(cells, 0.0);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        for (int hor = 0; hor < 2; ++hor) {
          bool horizontal = hor == 0;
          std::size_t id = static_cast<std::size_t>(geo.idx(i, j));
          if (!(horizontal ? valid_h : valid_v)[id]) continue;
          Vec4 xi;
          if (!face_xi(u, i, j, horizontal, &xi)) continue;
          const auto& F = horizontal ? F_h : F_v;
          double f0 = F[id * 4 + 0] * xi[0] + F[id * 4 + 1] * xi[1];
          double f1 = F[id * 4 + 2] * xi[0] + F[id * 4 + 3] * xi[1];
          if (horizontal) fx[id] = f0;
          else fy[id] = f1;
        }
      }
    out->assign(cells, 0.0);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        std::size_t id = static_cast<std::size_t>(geo.idx(i, j));
        if (!geo.is_inside(i, j)) continue;
        int iw = geo.kind == DomainKind::kTorus ? (i + nx - 1) % nx : i - 1;
        int js = geo.kind == DomainKind::kTorus ? (j + ny - 1) % ny : j - 1;
        double e = fx[id];
        double w = iw >= 0 ? fx[static_cast<std::size_t>(geo.idx(iw, j))] : 0.0;
        double nn = fy[id];
        double s = js >= 0 ? fy[static_cast<std::size_t>(geo.idx(i, js))] : 0.0;
        (*out)[id] = inv_sig[id] * ((e - w) + (nn - s)) / h;
      }
  }

  double suggest_dt(double cfl) const {
    double dmax = 1.0;
    if (!fast5) {
      for (int s = 0; s < 64; ++s) {
        int i = (s * 37) % nx;
        int j = (s * 53) % ny;
        if (!geo.is_inside(i, j)) continue;
        Vec4 x = geo.cell(i, j);
        for (int a = 0; a < 8; ++a) {
          double th = 2.0 * M_PI * a / 8.0;
          try {
            Mat4 g = detail::fundamental_form(m, 2, x, vec2(std::cos(th), std::sin(th)));
            Mat4 gi = inverse(2, g);
            Mat4 sym{};
            for (int p = 0; p < 2; ++p)
              for (int q = 0; q < 2; ++q) sym[p][q] = 0.5 * (gi[p][q] + gi[q][p]);
            auto ev = symmetric_eigenvalues(2, sym);
            dmax = std::max(dmax, ev[1]);
          } catch (const Error&) {
          }
        }
      }
    }
    return cfl * h * h / (4.0 * dmax);
  }

  double mass(const std::vector<double>& u) const {
    double acc = 0.0;
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        std::size_t id = static_cast<std::size_t>(geo.idx(i, j));
        if (!geo.is_inside(i, j)) continue;
        acc += u[id] * sig[id];
      }
    return acc * h * h;
  }
};

FinslerLaplacian::FinslerLaplacian(const MetricSpec& m, const MeasureSpec& mu,
                                   const FieldGrid& proto, double eps_deg)
    : impl_(std::make_unique<Impl>(m, mu, proto, eps_deg)) {}
FinslerLaplacian::~FinslerLaplacian() = default;
FinslerLaplacian::FinslerLaplacian(FinslerLaplacian&&) noexcept = default;

int FinslerLaplacian::apply(const std::vector<double>& u, std::vector<double>* out) {
  return impl_->apply(u, out);
}
void FinslerLaplacian::freeze(const std::vector<double>& u) { impl_->freeze(u); }
void FinslerLaplacian::apply_frozen(const std::vector<double>& u, std::vector<double>* out) const {
  impl_->apply_frozen(u, out);
}
double FinslerLaplacian::suggest_dt(double cfl_safety) const { return impl_->suggest_dt(cfl_safety); }
double FinslerLaplacian::mass(const std::vector<double>& u) const { return impl_->mass(u); }
const std::vector<double>& FinslerLaplacian::sigma() const { return impl_->sig; }

std::vector<double> nonlinear_laplacian_u(const MetricSpec& m, const MeasureSpec& mu,
                                          const FieldGrid& u, double eps_deg) {
  FinslerLaplacian op(m, mu, u, eps_deg);
  std::vector<double> out;
  int fails = op.apply(u.v, &out);
  if (fails > 0 && fails * 1000 > static_cast<int>(u.v.size()))
    throw ConvergenceError("legendre inversion failed on more than 0.1% of faces");
  return out;
}

SolveResult solve_schrodinger(const MetricSpec& m, const MeasureSpec& mu, const FieldGrid& u0,
                              const PotentialSpec& q, const SolverConfig& cfg) {
  if (m.dimension() != 2) throw ConfigError("solver is 2-D");
  if (u0.min_inside() <= 0.0) throw SolverError("initial data must be positive");

  FinslerLaplacian op(m, mu, u0, cfg.eps_deg);
  double dt = cfg.dt > 0.0 ? cfg.dt : op.suggest_dt(cfg.cfl_safety);
  if (cfg.scheme == Scheme::kExplicitRk2 && cfg.dt > 0.0) {
    double lim = op.suggest_dt(cfg.cfl_safety);
    if (cfg.dt > lim * 1.0000001)
      throw SolverError("dt violates the CFL bound " + std::to_string(lim));
  }
  long steps = static_cast<long>(std::ceil(cfg.t_end / dt - 1e-12));
  dt = cfg.t_end / static_cast<double>(steps);

  // map snapshot times to step indices
  std::vector<long> snap_steps;
  {
    std::vector<double> times = cfg.snapshot_times;
    times.push_back(cfg.t_end);
    std::sort(times.begin(), times.end());
    for (double t : times) {
      long k = std::lround(t / dt);
      k = std::max<long>(0, std::min(steps, k));
      if (snap_steps.empty() || snap_steps.back() != k) snap_steps.push_back(k);
    }
  }

  SolveResult res;
  res.geometry = u0;
  res.dt = dt;

  const std::size_t cells = u0.v.size();
  std::vector<double> u = u0.v, u_prev = u0.v, k1(cells), k2(cells), tmp(cells);
  std::vector<double> qv(cells, 0.0);
  if (!q.zero || !q.q.empty())
    for (int j = 0; j < u0.ny; ++j)
      for (int i = 0; i < u0.nx; ++i)
        qv[static_cast<std::size_t>(u0.idx(i, j))] = q.eval(u0.cell(i, j));

  std::size_t next_snap = 0;
  auto record_snapshot = [&](long step, const std::vector<double>& cur,
                             const std::vector<double>& prev, const std::vector<double>* next) {
    Snapshot s;
    s.t = dt * static_cast<double>(step);
    s.u = cur;
    if (next && step > 0) {
      s.ut.resize(cells);
      for (std::size_t c = 0; c < cells; ++c) s.ut[c] = ((*next)[c] - prev[c]) / (2.0 * dt);
    }
    res.snapshots.push_back(std::move(s));
  };

  if (!snap_steps.empty() && snap_steps[0] == 0) {
    record_snapshot(0, u, u_prev, nullptr);
    ++next_snap;
  }

  auto check_state = [&](const std::vector<double>& s) -> const char* {
    for (std::size_t c = 0; c < cells; ++c) {
      if (!u0.inside[c]) continue;
      if (!std::isfinite(s[c])) return "NaN in solution";
      if (s[c] <= 0.0) return "positivity lost";
    }
    return nullptr;
  };

  for (long n = 0; n < steps; ++n) {
    double legendre_fails = 0;
    if (cfg.scheme == Scheme::kExplicitRk2) {
      legendre_fails += op.apply(u, &k1);
      for (std::size_t c = 0; c < cells; ++c) k1[c] -= qv[c] * u[c];
      for (std::size_t c = 0; c < cells; ++c) tmp[c] = u[c] + dt * k1[c];
      legendre_fails += op.apply(tmp, &k2);
      for (std::size_t c = 0; c < cells; ++c) k2[c] -= qv[c] * tmp[c];
      for (std::size_t c = 0; c < cells; ++c) tmp[c] = u[c] + 0.5 * dt * (k1[c] + k2[c]);
    } else {
      // backward Euler with the metric lagged at u^n, solved by CG in the
      // mu-weighted inner product
      op.freeze(u);
      auto A = [&](const std::vector<double>& v, std::vector<double>* out) {
        op.apply_frozen(v, out);
        for (std::size_t c = 0; c < cells; ++c) (*out)[c] = v[c] - dt * ((*out)[c] - qv[c] * v[c]);
      };
      const auto& sg = op.sigma();
      auto dot_mu = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double acc = 0.0;
        for (std::size_t c = 0; c < cells; ++c)
          if (u0.inside[c]) acc += a[c] * b[c] * sg[c];
        return acc;
      };
      std::vector<double> xv = u, rv(cells), pv(cells), Ap(cells);
      A(xv, &Ap);
      for (std::size_t c = 0; c < cells; ++c) rv[c] = u0.inside[c] ? u[c] - Ap[c] : 0.0;
      pv = rv;
      double rr = dot_mu(rv, rv);
      double r0 = std::sqrt(dot_mu(u, u)) + 1e-300;
      for (int it = 0; it < 2000 && std::sqrt(rr) > 1e-10 * r0; ++it) {
        A(pv, &Ap);
        double pap = dot_mu(pv, Ap);
        if (pap == 0.0) break;
        double alpha = rr / pap;
        for (std::size_t c = 0; c < cells; ++c) {
          xv[c] += alpha * pv[c];
          rv[c] -= alpha * (u0.inside[c] ? Ap[c] : 0.0);
        }
        double rr2 = dot_mu(rv, rv);
        double beta = rr2 / rr;
        rr = rr2;
        for (std::size_t c = 0; c < cells; ++c) pv[c] = rv[c] + beta * pv[c];
      }
      tmp = xv;
    }

    if (legendre_fails * 1000 > static_cast<double>(cells)) {
      res.aborted = true;
      res.abort_reason = "legendre inversion failed on more than 0.1% of faces";
      break;
    }
    if (const char* bad = check_state(tmp)) {
      res.aborted = true;
      res.abort_reason = bad;
      break;
    }

    // tmp is u^{n+1}; record a pending snapshot at step n with centered ut
    if (next_snap < snap_steps.size() && snap_steps[next_snap] == n && n > 0) {
      record_snapshot(n, u, u_prev, &tmp);
      ++next_snap;
    }
    u_prev = u;
    u = tmp;
    ++res.steps;
    if (next_snap < snap_steps.size() && snap_steps[next_snap] == n + 1 && n + 1 == steps) {
      record_snapshot(n + 1, u, u_prev, nullptr);
      ++next_snap;
    }
  }
  res.geometry.v = u;
  res.geometry.t = dt * static_cast<double>(res.steps);
  return res;
}

}  // namespace finslab
