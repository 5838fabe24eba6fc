#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "finslab/errors.hpp"
#include "finslab/expr.hpp"
#include "finslab/jet.hpp"
#include "finslab/linalg.hpp"

namespace finslab {

enum class MetricKind {
  kEuclidean,
  kRiemannian,
  kMinkowski,
  kRanders,
  kFunkDisk,
  kExpression,
};

// Sampled validity evidence recorded at construction time.
struct ValidityCertificate {
  double homogeneity_residual = 0.0;  // max relative |F(x,ky)-kF(x,y)|/(kF)
  double min_g_eigenvalue = 0.0;      // over all samples
  double min_F = 0.0;                 // over all nonzero sample directions
  int samples = 0;
  bool ok = false;
};

namespace detail {

// Type-erased F^2 evaluation at every jet depth the tensor assemblies use.
struct MetricImpl {
  virtual ~MetricImpl() = default;
  // quadratic families may expose their coefficient matrix a_ij(x) with
  // first x-derivatives; integrators use it to skip deep jet evaluations
  virtual bool coeffs(std::span<const J1> /*x*/, MatT<J1>* /*a*/) const { return false; }
  virtual J0 fsq(std::span<const J0> x, std::span<const J0> y) const = 0;
  virtual J1 fsq(std::span<const J1> x, std::span<const J1> y) const = 0;
  virtual J2 fsq(std::span<const J2> x, std::span<const J2> y) const = 0;
  virtual J3 fsq(std::span<const J3> x, std::span<const J3> y) const = 0;
  virtual J4 fsq(std::span<const J4> x, std::span<const J4> y) const = 0;
};

template <class F>
struct MetricModel final : MetricImpl {
  explicit MetricModel(F f) : fn(std::move(f)) {}
  F fn;
  bool coeffs(std::span<const J1> x, MatT<J1>* a) const override {
    if constexpr (requires(const F& f) { f.coeffs(x, a); })
      return fn.coeffs(x, a);
    else
      return false;
  }
  J0 fsq(std::span<const J0> x, std::span<const J0> y) const override { return fn(x, y); }
  J1 fsq(std::span<const J1> x, std::span<const J1> y) const override { return fn(x, y); }
  J2 fsq(std::span<const J2> x, std::span<const J2> y) const override { return fn(x, y); }
  J3 fsq(std::span<const J3> x, std::span<const J3> y) const override { return fn(x, y); }
  J4 fsq(std::span<const J4> x, std::span<const J4> y) const override { return fn(x, y); }
};

}  // namespace detail

// A Finsler structure F(x,y) on R^n (n <= 4), built-in family or parsed
// expression. Immutable and cheap to copy; all evaluation is const.
class MetricSpec {
 public:
  static MetricSpec euclidean(int n);
  static MetricSpec riemannian(int n, const std::vector<std::vector<Expr>>& a);
  static MetricSpec riemannian(int n, const std::vector<std::vector<std::string>>& a);
  static MetricSpec minkowski(const std::string& f_expr, int n);
  static MetricSpec randers(int n, const std::vector<std::vector<std::string>>& a,
                            const std::vector<std::string>& b);
  // Constant-coefficient Randers |y|_a + <b,y> with a = identity.
  static MetricSpec randers_constant(int n, const Vec4& b);
  static MetricSpec funk_disk(int n = 2);
  static MetricSpec poincare_disk();
  static MetricSpec parse(const std::string& f_expr, int n);

  int dimension() const { return n_; }
  MetricKind kind() const { return kind_; }
  const ValidityCertificate& validity() const { return cert_; }
  const std::string& description() const { return desc_; }

  // g_ij(x,y) independent of y (Riemannian family)
  bool quadratic() const { return quadratic_; }
  // no x-dependence (Minkowski family); geodesics are straight lines
  bool x_independent() const { return x_independent_; }

  bool in_domain(std::span<const double> x) const;
  void require_domain(std::span<const double> x) const;

  double fsq(const Vec4& x, const Vec4& y) const;
  double norm(const Vec4& x, const Vec4& y) const;  // F(x,y)

  // F(x,-y); shares the underlying evaluator
  MetricSpec reversed() const;

  // fixed fallback direction for degenerate-gradient cells; tied to the
  // metric's orientation so reverse-metric identities hold exactly
  Vec4 degenerate_direction() const {
    Vec4 d{};
    d[0] = reversed_ ? -1.0 : 1.0;
    return d;
  }

  template <class T>
  T fsq_jets(std::span<const T> x, std::span<const T> y) const {
    return impl_->fsq(x, y);
  }

  bool coeff_jets(std::span<const J1> x, MatT<J1>* a) const { return impl_->coeffs(x, a); }

 private:
  MetricSpec() = default;
  void validate();

  std::shared_ptr<const detail::MetricImpl> impl_;
  int n_ = 0;
  MetricKind kind_ = MetricKind::kEuclidean;
  bool quadratic_ = false;
  bool x_independent_ = false;
  bool reversed_ = false;
  double domain_radius_ = 0.0;  // >0: require |x| <= domain_radius_
  double sample_radius_ = 1.0;  // x-box used for validity sampling
  ValidityCertificate cert_;
  std::string desc_;
};

// Truncated Taylor table of F^2 at (x,y): multi-index -> partial derivative,
// orders <= 2 in x, <= 3 in y, total <= 4. Key layout: kMaxDim x-orders then
// kMaxDim y-orders.
using MultiIndex = std::array<int, 2 * kMaxDim>;
struct JetTable {
  double value = 0.0;
  std::map<MultiIndex, double> partials;
};
JetTable fsq_jet_table(const MetricSpec& m, const Vec4& x, const Vec4& y);

// Minimum euclidean norm below which a direction counts as the zero section.
inline constexpr double kZeroDirectionTol = 1e-12;

void require_nonzero(int n, const Vec4& y, const char* what);

}  // namespace finslab
