#pragma once

#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>

namespace finslab {

// Manifold dimension cap. All tangent-space containers are fixed-capacity;
// unused lanes are kept at zero so arithmetic can always run full width.
inline constexpr int kMaxDim = 4;

// First-order forward jet carrying up to kMaxDim seed directions.
// Nesting (Jet<Jet<double>>, ...) yields higher and mixed derivatives:
// each nesting level owns one differentiation pass, so a depth-d value
// holds every partial with at most one order per level.
template <class T>
struct Jet {
  T f{};
  std::array<T, kMaxDim> d{};

  constexpr Jet() = default;
  constexpr Jet(const T& value) : f(value) {}
  template <class S>
    requires(!std::same_as<S, T> && std::constructible_from<T, S>)
  constexpr Jet(const S& value) : f(value) {}
};

using J0 = double;
using J1 = Jet<J0>;
using J2 = Jet<J1>;
using J3 = Jet<J2>;
using J4 = Jet<J3>;
using J5 = Jet<J4>;

constexpr double scalar_value(double x) { return x; }
template <class T>
constexpr double scalar_value(const Jet<T>& x) { return scalar_value(x.f); }

template <class T>
constexpr Jet<T> operator+(const Jet<T>& a, const Jet<T>& b) {
  Jet<T> r;
  r.f = a.f + b.f;
  for (int i = 0; i < kMaxDim; ++i) r.d[i] = a.d[i] + b.d[i];
  return r;
}

template <class T>
constexpr Jet<T> operator-(const Jet<T>& a, const Jet<T>& b) {
  Jet<T> r;
  r.f = a.f - b.f;
  for (int i = 0; i < kMaxDim; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}

template <class T>
constexpr Jet<T> operator-(const Jet<T>& a) {
  Jet<T> r;
  r.f = -a.f;
  for (int i = 0; i < kMaxDim; ++i) r.d[i] = -a.d[i];
  return r;
}

template <class T>
constexpr Jet<T> operator*(const Jet<T>& a, const Jet<T>& b) {
  Jet<T> r;
  r.f = a.f * b.f;
  for (int i = 0; i < kMaxDim; ++i) r.d[i] = a.d[i] * b.f + a.f * b.d[i];
  return r;
}

template <class T>
constexpr Jet<T> operator/(const Jet<T>& a, const Jet<T>& b) {
  Jet<T> r;
  r.f = a.f / b.f;
  for (int i = 0; i < kMaxDim; ++i) r.d[i] = (a.d[i] - r.f * b.d[i]) / b.f;
  return r;
}

// scalar (double) mixed forms; cheaper than promoting the scalar
template <class T> constexpr Jet<T> operator+(const Jet<T>& a, double s) { Jet<T> r = a; r.f = a.f + s; return r; }
template <class T> constexpr Jet<T> operator+(double s, const Jet<T>& a) { return a + s; }
template <class T> constexpr Jet<T> operator-(const Jet<T>& a, double s) { Jet<T> r = a; r.f = a.f - s; return r; }
template <class T> constexpr Jet<T> operator-(double s, const Jet<T>& a) { return -(a - s); }
template <class T>
constexpr Jet<T> operator*(const Jet<T>& a, double s) {
  Jet<T> r;
  r.f = a.f * s;
  for (int i = 0; i < kMaxDim; ++i) r.d[i] = a.d[i] * s;
  return r;
}
template <class T> constexpr Jet<T> operator*(double s, const Jet<T>& a) { return a * s; }
template <class T>
constexpr Jet<T> operator/(const Jet<T>& a, double s) {
  Jet<T> r;
  r.f = a.f / s;
  for (int i = 0; i < kMaxDim; ++i) r.d[i] = a.d[i] / s;
  return r;
}
template <class T>
constexpr Jet<T> operator/(double s, const Jet<T>& a) {
  return Jet<T>(T(s)) / a;
}

template <class T> constexpr Jet<T>& operator+=(Jet<T>& a, const Jet<T>& b) { a = a + b; return a; }
template <class T> constexpr Jet<T>& operator-=(Jet<T>& a, const Jet<T>& b) { a = a - b; return a; }
template <class T> constexpr Jet<T>& operator*=(Jet<T>& a, const Jet<T>& b) { a = a * b; return a; }
template <class T> constexpr Jet<T>& operator/=(Jet<T>& a, const Jet<T>& b) { a = a / b; return a; }
template <class T> constexpr Jet<T>& operator+=(Jet<T>& a, double s) { a.f = a.f + s; return a; }
template <class T> constexpr Jet<T>& operator-=(Jet<T>& a, double s) { a.f = a.f - s; return a; }
template <class T> constexpr Jet<T>& operator*=(Jet<T>& a, double s) { a = a * s; return a; }
template <class T> constexpr Jet<T>& operator/=(Jet<T>& a, double s) { a = a / s; return a; }

// unary chain rule helper: g(f).d = g'(f.f) * f.d
template <class T, class FV, class FD>
constexpr Jet<T> jet_chain(const Jet<T>& a, FV&& value, FD&& slope) {
  Jet<T> r;
  r.f = value(a.f);
  T s = slope(a.f);
  for (int i = 0; i < kMaxDim; ++i) r.d[i] = s * a.d[i];
  return r;
}

using std::cos;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sqrt;
using std::tan;
using std::atan;

template <class T>
Jet<T> sqrt(const Jet<T>& a) {
  Jet<T> r;
  r.f = sqrt(a.f);
  T inv = 0.5 / r.f;
  for (int i = 0; i < kMaxDim; ++i) r.d[i] = inv * a.d[i];
  return r;
}

template <class T>
Jet<T> exp(const Jet<T>& a) {
  Jet<T> r;
  r.f = exp(a.f);
  for (int i = 0; i < kMaxDim; ++i) r.d[i] = r.f * a.d[i];
  return r;
}

template <class T>
Jet<T> log(const Jet<T>& a) {
  Jet<T> r;
  r.f = log(a.f);
  for (int i = 0; i < kMaxDim; ++i) r.d[i] = a.d[i] / a.f;
  return r;
}

template <class T>
Jet<T> sin(const Jet<T>& a) {
  Jet<T> r;
  r.f = sin(a.f);
  T c = cos(a.f);
  for (int i = 0; i < kMaxDim; ++i) r.d[i] = c * a.d[i];
  return r;
}

template <class T>
Jet<T> cos(const Jet<T>& a) {
  Jet<T> r;
  r.f = cos(a.f);
  T s = -sin(a.f);
  for (int i = 0; i < kMaxDim; ++i) r.d[i] = s * a.d[i];
  return r;
}

template <class T>
Jet<T> tan(const Jet<T>& a) {
  Jet<T> r;
  r.f = tan(a.f);
  T c = cos(a.f);
  T s = 1.0 / (c * c);
  for (int i = 0; i < kMaxDim; ++i) r.d[i] = s * a.d[i];
  return r;
}

template <class T>
Jet<T> atan(const Jet<T>& a) {
  Jet<T> r;
  r.f = atan(a.f);
  T s = 1.0 / (1.0 + a.f * a.f);
  for (int i = 0; i < kMaxDim; ++i) r.d[i] = s * a.d[i];
  return r;
}

// integer power by repeated multiplication; valid for negative bases
template <class T>
T powi(const T& a, int n) {
  if (n == 0) return T(1.0);
  if (n < 0) return 1.0 / powi(a, -n);
  T r = a;
  int k = n - 1;
  T base = a;
  while (k > 0) {
    if (k & 1) r = r * base;
    base = base * base;
    k >>= 1;
  }
  return r;
}
inline double powi(double a, int n) { return std::pow(a, n); }

// real exponent; requires positive base (like std::pow on the value path)
template <class T>
Jet<T> pow(const Jet<T>& a, double c) {
  Jet<T> r;
  r.f = pow(a.f, c);
  T s = c * pow(a.f, c - 1.0);
  for (int i = 0; i < kMaxDim; ++i) r.d[i] = s * a.d[i];
  return r;
}

template <class T>
Jet<T> pow(const Jet<T>& a, const Jet<T>& b) {
  return exp(b * log(a));
}

}  // namespace finslab
