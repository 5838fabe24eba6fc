#pragma once

#include <cstdint>
#include <vector>

#include "finslab/linalg.hpp"

namespace finslab {

enum class RegionKind { kBall, kBox };

// Compact sampling region in coordinate space: euclidean ball or axis box
// (the box doubles as a torus fundamental domain).
struct Region {
  RegionKind kind = RegionKind::kBall;
  int n = 2;
  Vec4 center{};
  double radius = 1.0;  // kBall
  Vec4 lo{}, hi{};      // kBox

  static Region ball(int n, const Vec4& center, double radius) {
    Region r;
    r.kind = RegionKind::kBall;
    r.n = n;
    r.center = center;
    r.radius = radius;
    return r;
  }
  static Region box(int n, const Vec4& lo, const Vec4& hi) {
    Region r;
    r.kind = RegionKind::kBox;
    r.n = n;
    r.lo = lo;
    r.hi = hi;
    return r;
  }

  bool contains(const Vec4& x) const {
    if (kind == RegionKind::kBall) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        double d = x[static_cast<std::size_t>(i)] - center[static_cast<std::size_t>(i)];
        s += d * d;
      }
      return s <= radius * radius;
    }
    for (int i = 0; i < n; ++i)
      if (x[static_cast<std::size_t>(i)] < lo[static_cast<std::size_t>(i)] ||
          x[static_cast<std::size_t>(i)] > hi[static_cast<std::size_t>(i)])
        return false;
    return true;
  }

  // Deterministic lattice sample: points of a fixed global grid of pitch
  // `pitch` that fall inside the region. Nested regions yield nested sets,
  // which keeps region-sup estimates monotone under inclusion.
  std::vector<Vec4> lattice(double pitch) const {
    std::vector<Vec4> pts;
    Vec4 a{}, b{};
    for (int i = 0; i < n; ++i) {
      double c = kind == RegionKind::kBall ? center[static_cast<std::size_t>(i)] : 0.0;
      a[static_cast<std::size_t>(i)] = kind == RegionKind::kBall ? c - radius : lo[static_cast<std::size_t>(i)];
      b[static_cast<std::size_t>(i)] = kind == RegionKind::kBall ? c + radius : hi[static_cast<std::size_t>(i)];
    }
    std::array<long, kMaxDim> i0{}, i1{};
    for (int i = 0; i < n; ++i) {
      i0[static_cast<std::size_t>(i)] = static_cast<long>(std::ceil(a[static_cast<std::size_t>(i)] / pitch));
      i1[static_cast<std::size_t>(i)] = static_cast<long>(std::floor(b[static_cast<std::size_t>(i)] / pitch));
    }
    std::array<long, kMaxDim> idx = i0;
    while (true) {
      Vec4 p{};
      for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = pitch * static_cast<double>(idx[static_cast<std::size_t>(i)]);
      if (contains(p)) pts.push_back(p);
      int c = 0;
      while (c < n) {
        if (++idx[static_cast<std::size_t>(c)] <= i1[static_cast<std::size_t>(c)]) break;
        idx[static_cast<std::size_t>(c)] = i0[static_cast<std::size_t>(c)];
        ++c;
      }
      if (c == n) break;
    }
    return pts;
  }
};

}  // namespace finslab
