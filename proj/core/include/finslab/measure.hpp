#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "finslab/expr.hpp"
#include "finslab/jet.hpp"
#include "finslab/linalg.hpp"

namespace finslab {

enum class MeasureKind { kLebesgue, kRiemannianVolume, kExpression };

namespace detail {
struct MeasureImpl {
  virtual ~MeasureImpl() = default;
  virtual J0 phi(std::span<const J0> x) const = 0;
  virtual J1 phi(std::span<const J1> x) const = 0;
  virtual J2 phi(std::span<const J2> x) const = 0;
  virtual J3 phi(std::span<const J3> x) const = 0;
};
}  // namespace detail

// The measure dmu = e^{Phi(x)} dx^1...dx^n via its log-density Phi.
class MeasureSpec {
 public:
  static MeasureSpec lebesgue();
  // volume form of a reference Riemannian metric: Phi = log sqrt(det a(x))
  static MeasureSpec riemannian_volume(int n, const std::vector<std::vector<std::string>>& a);
  static MeasureSpec expression(int n, const std::string& phi);

  MeasureKind kind() const { return kind_; }
  const std::string& description() const { return desc_; }

  double log_density(const Vec4& x, int n) const;
  double sigma(const Vec4& x, int n) const;

  template <class T>
  T phi_jets(std::span<const T> x) const {
    return impl_->phi(x);
  }

 private:
  MeasureSpec() = default;
  std::shared_ptr<const detail::MeasureImpl> impl_;
  MeasureKind kind_ = MeasureKind::kLebesgue;
  std::string desc_;
};

}  // namespace finslab
