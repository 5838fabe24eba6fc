#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "finslab/jet.hpp"

namespace finslab {

// Fixed-capacity containers for tangent-space data, n <= kMaxDim at runtime.
template <class T> using VecT = std::array<T, kMaxDim>;
template <class T> using MatT = std::array<std::array<T, kMaxDim>, kMaxDim>;
template <class T> using Ten3T = std::array<MatT<T>, kMaxDim>;
template <class T> using Ten4T = std::array<Ten3T<T>, kMaxDim>;

using Vec4 = VecT<double>;
using Mat4 = MatT<double>;
using Ten3 = Ten3T<double>;
using Ten4 = Ten4T<double>;

template <class T>
VecT<T> zero_vec() {
  VecT<T> v{};
  for (auto& e : v) e = T(0.0);
  return v;
}

template <class T>
MatT<T> zero_mat() {
  MatT<T> m{};
  for (auto& row : m)
    for (auto& e : row) e = T(0.0);
  return m;
}

inline Vec4 vec2(double a, double b) { return Vec4{a, b, 0.0, 0.0}; }
inline Vec4 vec3(double a, double b, double c) { return Vec4{a, b, c, 0.0}; }

template <class T>
T dot(int n, const VecT<T>& a, const VecT<T>& b) {
  T s = T(0.0);
  for (int i = 0; i < n; ++i) s = s + a[i] * b[i];
  return s;
}

inline double norm2(int n, const Vec4& a) { return std::sqrt(dot(n, a, a)); }

template <class T>
VecT<T> axpy(int n, double a, const VecT<T>& x, const VecT<T>& y) {
  VecT<T> r = zero_vec<T>();
  for (int i = 0; i < n; ++i) r[i] = a * x[i] + y[i];
  return r;
}

template <class T>
T quadratic_form(int n, const MatT<T>& m, const VecT<T>& u, const VecT<T>& v) {
  T s = T(0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s = s + m[i][j] * u[i] * v[j];
  return s;
}

template <class T>
VecT<T> mat_vec(int n, const MatT<T>& m, const VecT<T>& v) {
  VecT<T> r = zero_vec<T>();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r[i] = r[i] + m[i][j] * v[j];
  return r;
}

struct SingularMatrixError : std::runtime_error {
  SingularMatrixError() : std::runtime_error("singular matrix") {}
};

// LU determinant with partial pivoting on the scalar part.
template <class T>
T determinant(int n, MatT<T> m) {
  T det = T(1.0);
  for (int c = 0; c < n; ++c) {
    int piv = c;
    double best = std::abs(scalar_value(m[c][c]));
    for (int r = c + 1; r < n; ++r) {
      double v = std::abs(scalar_value(m[r][c]));
      if (v > best) { best = v; piv = r; }
    }
    if (best == 0.0) return T(0.0);
    if (piv != c) { std::swap(m[piv], m[c]); det = -det; }
    det = det * m[c][c];
    for (int r = c + 1; r < n; ++r) {
      T f = m[r][c] / m[c][c];
      for (int k = c; k < n; ++k) m[r][k] = m[r][k] - f * m[c][k];
    }
  }
  return det;
}

// Gauss-Jordan inverse, pivoting on the scalar part so jet arguments take
// the same elimination path as their value.
template <class T>
MatT<T> inverse(int n, MatT<T> m) {
  MatT<T> inv = zero_mat<T>();
  for (int i = 0; i < n; ++i) inv[i][i] = T(1.0);
  for (int c = 0; c < n; ++c) {
    int piv = c;
    double best = std::abs(scalar_value(m[c][c]));
    for (int r = c + 1; r < n; ++r) {
      double v = std::abs(scalar_value(m[r][c]));
      if (v > best) { best = v; piv = r; }
    }
    if (best == 0.0) throw SingularMatrixError{};
    if (piv != c) { std::swap(m[piv], m[c]); std::swap(inv[piv], inv[c]); }
    T p = m[c][c];
    for (int k = 0; k < n; ++k) { m[c][k] = m[c][k] / p; inv[c][k] = inv[c][k] / p; }
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      T f = m[r][c];
      if (scalar_value(f) == 0.0) continue;
      for (int k = 0; k < n; ++k) {
        m[r][k] = m[r][k] - f * m[c][k];
        inv[r][k] = inv[r][k] - f * inv[c][k];
      }
    }
  }
  return inv;
}

template <class T>
VecT<T> solve(int n, const MatT<T>& m, const VecT<T>& rhs) {
  return mat_vec(n, inverse(n, m), rhs);
}

// Cyclic Jacobi eigenvalues of a symmetric matrix (doubles only).
inline Vec4 symmetric_eigenvalues(int n, Mat4 m) {
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += m[p][q] * m[p][q];
    if (off < 1e-26) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(m[p][q]) < 1e-300) continue;
        double theta = 0.5 * std::atan2(2.0 * m[p][q], m[q][q] - m[p][p]);
        double c = std::cos(theta), s = std::sin(theta);
        for (int k = 0; k < n; ++k) {
          double mp = m[p][k], mq = m[q][k];
          m[p][k] = c * mp - s * mq;
          m[q][k] = s * mp + c * mq;
        }
        for (int k = 0; k < n; ++k) {
          double mp = m[k][p], mq = m[k][q];
          m[k][p] = c * mp - s * mq;
          m[k][q] = s * mp + c * mq;
        }
      }
    }
  }
  Vec4 ev{};
  for (int i = 0; i < n; ++i) ev[i] = m[i][i];
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (ev[j] < ev[i]) std::swap(ev[i], ev[j]);
  return ev;
}

inline double min_eigenvalue(int n, const Mat4& m) {
  return symmetric_eigenvalues(n, m)[0];
}

}  // namespace finslab
