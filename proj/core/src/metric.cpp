#include "finslab/metric.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "finslab/rng.hpp"

namespace finslab {

namespace {

template <class T>
T span_dot(int n, std::span<const T> a, std::span<const T> b) {
  T s = T(0.0);
  for (int i = 0; i < n; ++i) s = s + a[i] * b[i];
  return s;
}

struct EuclideanFsq {
  int n;
  template <class T>
  T operator()(std::span<const T> /*x*/, std::span<const T> y) const {
    T s = T(0.0);
    for (int i = 0; i < n; ++i) s = s + y[i] * y[i];
    return s;
  }
};

// F^2 = sum a_ij(x) y^i y^j, coefficients given as x-expressions
struct RiemannFsq {
  int n;
  std::vector<std::vector<Expr>> a;  // full symmetric matrix
  bool coeffs(std::span<const J1> x, MatT<J1>* out) const {
    std::array<J1, kMaxDim> yz{};
    auto ys = std::span<const J1>(yz.data(), x.size());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        (*out)[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].eval(x, ys);
    return true;
  }
  template <class T>
  T operator()(std::span<const T> x, std::span<const T> y) const {
    T s = T(0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        T aij = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].eval(x, y);
        s = s + aij * y[i] * y[j];
      }
    }
    return s;
  }
};

// F = sqrt(sum a_ij y y) + sum b_i(x) y^i
struct RandersFsq {
  int n;
  std::vector<std::vector<Expr>> a;
  std::vector<Expr> b;
  template <class T>
  T operator()(std::span<const T> x, std::span<const T> y) const {
    T q = T(0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        q = q + a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].eval(x, y) * y[i] * y[j];
    T f = sqrt(q);
    for (int i = 0; i < n; ++i) f = f + b[static_cast<std::size_t>(i)].eval(x, y) * y[i];
    return f * f;
  }
};

// F(x,y) = ( sqrt((1-|x|^2)|y|^2 + <x,y>^2) + <x,y> ) / (1-|x|^2), |x| < 1
struct FunkFsq {
  int n;
  template <class T>
  T operator()(std::span<const T> x, std::span<const T> y) const {
    T x2 = span_dot(n, x, x);
    T y2 = span_dot(n, y, y);
    T xy = span_dot(n, x, y);
    T one_minus = 1.0 - x2;
    T f = (sqrt(one_minus * y2 + xy * xy) + xy) / one_minus;
    return f * f;
  }
};

// F given by a parsed expression; F^2 = F*F
struct ExprFsq {
  Expr f;
  template <class T>
  T operator()(std::span<const T> x, std::span<const T> y) const {
    T v = f.eval(x, y);
    return v * v;
  }
};

// F(x,-y) on top of any evaluator
struct ReversedFsq {
  std::shared_ptr<const detail::MetricImpl> inner;
  template <class T>
  T operator()(std::span<const T> x, std::span<const T> y) const {
    std::array<T, kMaxDim> ny{};
    for (int i = 0; i < kMaxDim; ++i) ny[i] = -y[i];
    return inner->fsq(x, std::span<const T>(ny.data(), y.size()));
  }
};

template <class F>
std::shared_ptr<const detail::MetricImpl> make_impl(F f) {
  return std::make_shared<const detail::MetricModel<F>>(std::move(f));
}

std::vector<std::vector<Expr>> parse_matrix(int n, const std::vector<std::vector<std::string>>& a) {
  if (static_cast<int>(a.size()) != n) throw ConfigError("coefficient matrix has wrong row count");
  std::vector<std::vector<Expr>> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(a[static_cast<std::size_t>(i)].size()) != n)
      throw ConfigError("coefficient matrix has wrong column count");
    for (int j = 0; j < n; ++j) {
      Expr e = Expr::parse(a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], n);
      if (e.uses_y()) throw ConfigError("metric coefficient a_ij must not depend on y");
      out[static_cast<std::size_t>(i)].push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace

void require_nonzero(int n, const Vec4& y, const char* what) {
  if (norm2(n, y) < kZeroDirectionTol)
    throw DomainError(std::string(what) + ": zero direction is outside TM\\{0}");
}

bool MetricSpec::in_domain(std::span<const double> x) const {
  if (domain_radius_ <= 0.0) return true;
  double r2 = 0.0;
  for (int i = 0; i < n_; ++i) r2 += x[i] * x[i];
  return r2 <= domain_radius_ * domain_radius_;
}

void MetricSpec::require_domain(std::span<const double> x) const {
  if (!in_domain(x)) throw DomainError("point outside metric domain (" + desc_ + ")");
}

double MetricSpec::fsq(const Vec4& x, const Vec4& y) const {
  return impl_->fsq(std::span<const double>(x.data(), static_cast<std::size_t>(n_)),
                    std::span<const double>(y.data(), static_cast<std::size_t>(n_)));
}

double MetricSpec::norm(const Vec4& x, const Vec4& y) const {
  return std::sqrt(std::max(0.0, fsq(x, y)));
}

MetricSpec MetricSpec::reversed() const {
  MetricSpec r = *this;
  r.impl_ = make_impl(ReversedFsq{impl_});
  r.reversed_ = !reversed_;
  r.desc_ = "reverse(" + desc_ + ")";
  return r;
}

MetricSpec MetricSpec::euclidean(int n) {
  MetricSpec m;
  m.n_ = n;
  m.kind_ = MetricKind::kEuclidean;
  m.quadratic_ = true;
  m.x_independent_ = true;
  m.impl_ = make_impl(EuclideanFsq{n});
  m.desc_ = "euclidean";
  m.validate();
  return m;
}

MetricSpec MetricSpec::riemannian(int n, const std::vector<std::vector<Expr>>& a) {
  MetricSpec m;
  m.n_ = n;
  m.kind_ = MetricKind::kRiemannian;
  m.quadratic_ = true;
  bool uses_x = false;
  for (const auto& row : a)
    for (const auto& e : row) uses_x = uses_x || e.uses_x();
  m.x_independent_ = !uses_x;
  m.impl_ = make_impl(RiemannFsq{n, a});
  m.desc_ = "riemannian";
  m.validate();
  return m;
}

MetricSpec MetricSpec::riemannian(int n, const std::vector<std::vector<std::string>>& a) {
  return riemannian(n, parse_matrix(n, a));
}

MetricSpec MetricSpec::minkowski(const std::string& f_expr, int n) {
  MetricSpec m;
  m.n_ = n;
  m.kind_ = MetricKind::kMinkowski;
  Expr e = Expr::parse(f_expr, n);
  if (e.uses_x()) throw ConfigError("minkowski norm must not depend on x");
  m.x_independent_ = true;
  m.impl_ = make_impl(ExprFsq{std::move(e)});
  m.desc_ = "minkowski(" + f_expr + ")";
  m.validate();
  return m;
}

MetricSpec MetricSpec::randers(int n, const std::vector<std::vector<std::string>>& a,
                               const std::vector<std::string>& b) {
  MetricSpec m;
  m.n_ = n;
  m.kind_ = MetricKind::kRanders;
  auto am = parse_matrix(n, a);
  if (static_cast<int>(b.size()) != n) throw ConfigError("randers drift has wrong size");
  std::vector<Expr> be;
  bool uses_x = false;
  for (const auto& row : am)
    for (const auto& e : row) uses_x = uses_x || e.uses_x();
  for (const auto& s : b) {
    Expr e = Expr::parse(s, n);
    if (e.uses_y()) throw ConfigError("randers drift b_i must not depend on y");
    uses_x = uses_x || e.uses_x();
    be.push_back(std::move(e));
  }
  m.x_independent_ = !uses_x;
  m.impl_ = make_impl(RandersFsq{n, std::move(am), std::move(be)});
  m.desc_ = "randers";
  m.validate();
  return m;
}

MetricSpec MetricSpec::randers_constant(int n, const Vec4& b) {
  std::vector<std::vector<std::string>> a(static_cast<std::size_t>(n),
                                          std::vector<std::string>(static_cast<std::size_t>(n), "0"));
  for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = "1";
  std::vector<std::string> bs;
  for (int i = 0; i < n; ++i) bs.push_back(std::to_string(b[static_cast<std::size_t>(i)]));
  return randers(n, a, bs);
}

MetricSpec MetricSpec::funk_disk(int n) {
  MetricSpec m;
  m.n_ = n;
  m.kind_ = MetricKind::kFunkDisk;
  m.domain_radius_ = 1.0 - 1e-6;
  m.sample_radius_ = 0.85;
  m.impl_ = make_impl(FunkFsq{n});
  m.desc_ = "funk-disk";
  m.validate();
  return m;
}

MetricSpec MetricSpec::poincare_disk() {
  // a_ij = 4 delta_ij / (1-|x|^2)^2, constant curvature -1
  std::vector<std::vector<std::string>> a = {
      {"4/(1-x1^2-x2^2)^2", "0"},
      {"0", "4/(1-x1^2-x2^2)^2"},
  };
  MetricSpec m = riemannian(2, a);
  m.domain_radius_ = 1.0 - 1e-6;
  m.sample_radius_ = 0.85;
  m.desc_ = "poincare-disk";
  return m;
}

MetricSpec MetricSpec::parse(const std::string& f_expr, int n) {
  if (n < 2) throw ConfigError("metric dimension must be at least 2");
  if (n > kMaxDim) throw ConfigError("metric dimension must be at most 4");
  MetricSpec m;
  m.n_ = n;
  m.kind_ = MetricKind::kExpression;
  Expr e = Expr::parse(f_expr, n);
  m.x_independent_ = !e.uses_x();
  m.impl_ = make_impl(ExprFsq{std::move(e)});
  m.desc_ = "expression(" + f_expr + ")";
  m.validate();
  return m;
}

namespace {

// deterministic direction set on the euclidean sphere
std::vector<Vec4> sample_directions(int n, int count, std::mt19937_64& rng) {
  std::vector<Vec4> dirs;
  if (n == 2) {
    for (int k = 0; k < count; ++k) {
      double th = 2.0 * M_PI * (k + 0.3) / count;
      dirs.push_back(vec2(std::cos(th), std::sin(th)));
    }
    return dirs;
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int k = 0; k < count; ++k) {
    Vec4 d{};
    double s = 0.0;
    for (int i = 0; i < n; ++i) { d[static_cast<std::size_t>(i)] = gauss(rng); s += d[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(i)]; }
    s = std::sqrt(s);
    for (int i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] /= s;
    dirs.push_back(d);
  }
  return dirs;
}

}  // namespace

void MetricSpec::validate() {
  auto rng = task_rng(0x5eed, "metric-validity");
  std::vector<Vec4> xs;
  xs.push_back(Vec4{});
  for (int i = 0; i < n_; ++i) {
    Vec4 a{}, b{};
    a[static_cast<std::size_t>(i)] = 0.5 * sample_radius_;
    b[static_cast<std::size_t>(i)] = -0.9 * sample_radius_;
    xs.push_back(a);
    xs.push_back(b);
  }
  std::uniform_real_distribution<double> unif(-sample_radius_, sample_radius_);
  for (int k = 0; k < 8; ++k) {
    Vec4 p{};
    double r2 = 0.0;
    for (int i = 0; i < n_; ++i) { p[static_cast<std::size_t>(i)] = unif(rng); r2 += p[static_cast<std::size_t>(i)] * p[static_cast<std::size_t>(i)]; }
    if (domain_radius_ > 0.0 && r2 > sample_radius_ * sample_radius_) continue;
    xs.push_back(p);
  }
  auto dirs = sample_directions(n_, n_ == 2 ? 16 : 24, rng);

  ValidityCertificate cert;
  cert.min_F = std::numeric_limits<double>::infinity();
  cert.min_g_eigenvalue = std::numeric_limits<double>::infinity();
  const double ks[3] = {0.5, 2.0, 10.0};

  for (const auto& x : xs) {
    for (const auto& d : dirs) {
      ++cert.samples;
      double f2 = fsq(x, d);
      if (!(f2 > 0.0) || !std::isfinite(f2))
        throw MetricError("metric not positive at a validity sample (" + desc_ + ")");
      double f = std::sqrt(f2);
      cert.min_F = std::min(cert.min_F, f);
      for (double k : ks) {
        Vec4 ky{};
        for (int i = 0; i < n_; ++i) ky[static_cast<std::size_t>(i)] = k * d[static_cast<std::size_t>(i)];
        double fk = std::sqrt(fsq(x, ky));
        double resid = std::abs(fk - k * f) / (k * f);
        cert.homogeneity_residual = std::max(cert.homogeneity_residual, resid);
        if (resid > 1e-8)
          throw MetricError("1-homogeneity violated (residual " + std::to_string(resid) +
                            ") for " + desc_);
      }
      // fundamental form at (x,d) via a (y,y)-seeded second-order jet
      std::array<J2, kMaxDim> xj{}, yj{};
      for (int i = 0; i < n_; ++i) {
        xj[static_cast<std::size_t>(i)] = J2(x[static_cast<std::size_t>(i)]);
        J2 v(d[static_cast<std::size_t>(i)]);
        v.d[i] = J1(1.0);
        v.f.d[i] = 1.0;
        yj[static_cast<std::size_t>(i)] = v;
      }
      J2 r = impl_->fsq(std::span<const J2>(xj.data(), static_cast<std::size_t>(n_)),
                        std::span<const J2>(yj.data(), static_cast<std::size_t>(n_)));
      Mat4 g{};
      for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 0.5 * r.d[i].d[j];
      double ev = min_eigenvalue(n_, g);
      cert.min_g_eigenvalue = std::min(cert.min_g_eigenvalue, ev);
      if (!(ev > 0.0))
        throw MetricError("fundamental form not positive definite (min eig " +
                          std::to_string(ev) + ") for " + desc_);
    }
  }
  cert.ok = true;
  cert_ = cert;
}

JetTable fsq_jet_table(const MetricSpec& m, const Vec4& x, const Vec4& y) {
  const int n = m.dimension();
  JetTable table;
  table.value = m.fsq(x, y);

  // two depth-4 passes: levels (x,x,y,y) and (x,y,y,y) jointly cover every
  // multi-index with x-order <= 2, y-order <= 3, total <= 4
  auto run = [&](const std::array<int, 4>& level_is_x) {
    std::array<J4, kMaxDim> xj{}, yj{};
    for (int i = 0; i < n; ++i) {
      xj[static_cast<std::size_t>(i)] = J4(x[static_cast<std::size_t>(i)]);
      yj[static_cast<std::size_t>(i)] = J4(y[static_cast<std::size_t>(i)]);
    }
    // set the unit seed for direction dir at nesting level lv (0 = outermost)
    auto seed = [](J4& j, int lv, int dir) {
      switch (lv) {
        case 0: j.d[dir].f.f.f = 1.0; break;
        case 1: j.f.d[dir].f.f = 1.0; break;
        case 2: j.f.f.d[dir].f = 1.0; break;
        default: j.f.f.f.d[dir] = 1.0; break;
      }
    };
    for (int level = 0; level < 4; ++level)
      for (int i = 0; i < n; ++i) {
        if (level_is_x[static_cast<std::size_t>(level)])
          seed(xj[static_cast<std::size_t>(i)], level, i);
        else
          seed(yj[static_cast<std::size_t>(i)], level, i);
      }

    J4 r = m.fsq_jets(std::span<const J4>(xj.data(), static_cast<std::size_t>(n)),
                      std::span<const J4>(yj.data(), static_cast<std::size_t>(n)));

    // walk all subsets of levels and extract mixed partials
    for (int mask = 1; mask < 16; ++mask) {
      std::array<int, 4> dir{};
      std::function<void(int)> rec = [&](int level) {
        if (level == 4) {
          MultiIndex key{};
          int xo = 0, yo = 0;
          for (int lv = 0; lv < 4; ++lv) {
            if (!(mask & (1 << lv))) continue;
            if (level_is_x[static_cast<std::size_t>(lv)]) {
              ++key[static_cast<std::size_t>(dir[static_cast<std::size_t>(lv)])];
              ++xo;
            } else {
              ++key[static_cast<std::size_t>(kMaxDim + dir[static_cast<std::size_t>(lv)])];
              ++yo;
            }
          }
          if (xo > 2 || yo > 3) return;
          // pick component: level 0 is the outermost jet
          const J4* p4 = &r;
          double v;
          {
            auto comp3 = (mask & 1) ? p4->d[dir[0]] : p4->f;
            auto comp2 = (mask & 2) ? comp3.d[dir[1]] : comp3.f;
            auto comp1 = (mask & 4) ? comp2.d[dir[2]] : comp2.f;
            v = (mask & 8) ? comp1.d[dir[3]] : comp1.f;
          }
          table.partials[key] = v;
          return;
        }
        if (!(mask & (1 << level))) {
          rec(level + 1);
          return;
        }
        for (int i = 0; i < n; ++i) {
          dir[static_cast<std::size_t>(level)] = i;
          rec(level + 1);
        }
      };
      rec(0);
    }
  };

  run({1, 1, 0, 0});  // (x,x,y,y)
  run({1, 0, 0, 0});  // (x,y,y,y)
  return table;
}

}  // namespace finslab
