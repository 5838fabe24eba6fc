#include "finslab/measure.hpp"

#include <cmath>

#include "finslab/errors.hpp"

namespace finslab {

namespace {

struct LebesguePhi {
  template <class T>
  T operator()(std::span<const T> /*x*/) const {
    return T(0.0);
  }
};

struct ExprPhi {
  Expr e;
  template <class T>
  T operator()(std::span<const T> x) const {
    std::array<T, kMaxDim> y{};
    return e.eval(x, std::span<const T>(y.data(), x.size()));
  }
};

struct RiemannVolumePhi {
  int n;
  std::vector<std::vector<Expr>> a;
  template <class T>
  T operator()(std::span<const T> x) const {
    std::array<T, kMaxDim> dummy{};
    auto yspan = std::span<const T>(dummy.data(), x.size());
    MatT<T> m = zero_mat<T>();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].eval(x, yspan);
    return 0.5 * log(determinant(n, m));
  }
};

template <class F>
struct MeasureModel final : detail::MeasureImpl {
  explicit MeasureModel(F f) : fn(std::move(f)) {}
  F fn;
  J0 phi(std::span<const J0> x) const override { return fn(x); }
  J1 phi(std::span<const J1> x) const override { return fn(x); }
  J2 phi(std::span<const J2> x) const override { return fn(x); }
  J3 phi(std::span<const J3> x) const override { return fn(x); }
};

template <class F>
std::shared_ptr<const detail::MeasureImpl> make_impl(F f) {
  return std::make_shared<const MeasureModel<F>>(std::move(f));
}

}  // namespace

double MeasureSpec::log_density(const Vec4& x, int n) const {
  return impl_->phi(std::span<const double>(x.data(), static_cast<std::size_t>(n)));
}

double MeasureSpec::sigma(const Vec4& x, int n) const { return std::exp(log_density(x, n)); }

MeasureSpec MeasureSpec::lebesgue() {
  MeasureSpec m;
  m.kind_ = MeasureKind::kLebesgue;
  m.impl_ = make_impl(LebesguePhi{});
  m.desc_ = "lebesgue";
  return m;
}

MeasureSpec MeasureSpec::riemannian_volume(int n, const std::vector<std::vector<std::string>>& a) {
  MeasureSpec m;
  m.kind_ = MeasureKind::kRiemannianVolume;
  if (static_cast<int>(a.size()) != n) throw ConfigError("volume coefficient matrix has wrong size");
  std::vector<std::vector<Expr>> am(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(a[static_cast<std::size_t>(i)].size()) != n)
      throw ConfigError("volume coefficient matrix has wrong size");
    for (int j = 0; j < n; ++j) {
      Expr e = Expr::parse(a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], n);
      if (e.uses_y()) throw ConfigError("volume coefficient a_ij must not depend on y");
      am[static_cast<std::size_t>(i)].push_back(std::move(e));
    }
  }
  m.impl_ = make_impl(RiemannVolumePhi{n, std::move(am)});
  m.desc_ = "riemannian-volume";
  return m;
}

MeasureSpec MeasureSpec::expression(int n, const std::string& phi) {
  MeasureSpec m;
  m.kind_ = MeasureKind::kExpression;
  Expr e = Expr::parse(phi, n);
  if (e.uses_y()) throw ConfigError("measure density must not depend on y");
  m.impl_ = make_impl(ExprPhi{std::move(e)});
  m.desc_ = "expression(" + phi + ")";
  return m;
}

}  // namespace finslab
