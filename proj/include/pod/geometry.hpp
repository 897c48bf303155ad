#pragma once

#include <array>
#include <cmath>

namespace pod {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr bool operator==(const Vec3& o) const = default;

  constexpr double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  constexpr Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  constexpr double norm2() const { return dot(*this); }
  Vec3 normalized() const {
    const double n = norm();
    return n > 0.0 ? *this / n : Vec3{};
  }

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Axis-aligned box with inclusive bounds on every face.
struct Extent {
  Vec3 lo;
  Vec3 hi;

  constexpr bool contains(const Vec3& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z &&
           p.z <= hi.z;
  }
  constexpr bool strictly_outside(const Vec3& p) const { return !contains(p); }
  constexpr Vec3 size() const { return hi - lo; }
  double diagonal() const { return size().norm(); }
  constexpr Vec3 center() const { return (lo + hi) * 0.5; }

  /// Smallest distance from an interior point to any face.
  double distance_to_boundary(const Vec3& p) const {
    double d = p.x - lo.x;
    d = std::min(d, hi.x - p.x);
    d = std::min(d, p.y - lo.y);
    d = std::min(d, hi.y - p.y);
    d = std::min(d, p.z - lo.z);
    d = std::min(d, hi.z - p.z);
    return d;
  }
};

/// Spatial bounds of the whole dataset; blocks tile this box exactly.
using GlobalDomain = Extent;

}  // namespace pod
