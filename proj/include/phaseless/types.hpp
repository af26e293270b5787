#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace phaseless {

using real = double;
using complex = std::complex<double>;

inline constexpr real pi = 3.14159265358979323846;

/// Raised on invalid configuration or malformed inputs (CLI exit code 2).
struct config_error : std::runtime_error {
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised when an iterative solver fails to reach its tolerance or a field
/// degenerates (CLI exit code 3).
struct numerical_error : std::runtime_error {
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct Vec3 {
  real x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(real s) const { return {x * s, y * s, z * s}; }
  real dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  real norm2() const { return dot(*this); }
  real norm() const { return std::sqrt(norm2()); }
};

inline Vec3 operator*(real s, const Vec3& v) { return v * s; }

}  // namespace phaseless
