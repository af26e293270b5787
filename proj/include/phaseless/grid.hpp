#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "phaseless/types.hpp"

namespace phaseless {

/// Axis-aligned box; lo[i] < hi[i] on every axis.
struct Box3 {
  Vec3 lo, hi;

  Vec3 extent() const { return hi - lo; }
  bool contains(const Vec3& p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y &&
           p.z >= lo.z && p.z <= hi.z;
  }
};

/// Uniform vertex-centered grid: nodes at lo + j*spacing, endpoints included.
/// Linear index is row-major with x1 fastest, x3 slowest.
struct Grid3D {
  Box3 box;
  std::array<int, 3> n{};   // points per axis
  Vec3 spacing;             // derived: (hi-lo)/(n-1)

  std::size_t size() const {
    return std::size_t(n[0]) * std::size_t(n[1]) * std::size_t(n[2]);
  }
  std::size_t index(int i1, int i2, int i3) const {
    return (std::size_t(i3) * n[1] + i2) * n[0] + i1;
  }
  std::array<int, 3> unindex(std::size_t idx) const {
    const int i1 = int(idx % n[0]);
    const int i2 = int((idx / n[0]) % n[1]);
    const int i3 = int(idx / (std::size_t(n[0]) * n[1]));
    return {i1, i2, i3};
  }
  Vec3 node(int i1, int i2, int i3) const {
    return {box.lo.x + i1 * spacing.x, box.lo.y + i2 * spacing.y,
            box.lo.z + i3 * spacing.z};
  }
  Vec3 node(std::size_t idx) const {
    const auto i = unindex(idx);
    return node(i[0], i[1], i[2]);
  }
  bool on_boundary(int i1, int i2, int i3) const {
    return i1 == 0 || i1 == n[0] - 1 || i2 == 0 || i2 == n[1] - 1 || i3 == 0 ||
           i3 == n[2] - 1;
  }
  real cell_volume() const { return spacing.x * spacing.y * spacing.z; }
};

inline Grid3D make_grid(const Box3& box, std::array<int, 3> n) {
  const real ext[3] = {box.hi.x - box.lo.x, box.hi.y - box.lo.y,
                       box.hi.z - box.lo.z};
  for (int a = 0; a < 3; ++a) {
    if (!(ext[a] > 0))
      throw config_error("make_grid: box must satisfy lo < hi on every axis");
    if (n[a] < 2) throw config_error("make_grid: need at least 2 points per axis");
  }
  Grid3D g;
  g.box = box;
  g.n = n;
  g.spacing = {ext[0] / (n[0] - 1), ext[1] / (n[1] - 1), ext[2] / (n[2] - 1)};
  return g;
}

/// Square {|x1|,|x2| <= half_width} at height x3, sampled n x n with endpoints
/// included (spacing 2*half_width/(n-1)); pixel index row-major, x1 fastest.
struct PlaneSpec {
  real half_width = 0;
  real x3 = 0;
  int n = 0;

  real spacing() const { return 2 * half_width / (n - 1); }
  real coord(int i) const {
    if (i == 0) return -half_width;
    if (i == n - 1) return half_width;
    return -half_width + i * spacing();
  }
  std::size_t size() const { return std::size_t(n) * n; }
  std::size_t index(int i1, int i2) const { return std::size_t(i2) * n + i1; }

  bool same_geometry(const PlaneSpec& o) const {
    return half_width == o.half_width && x3 == o.x3 && n == o.n;
  }
};

inline PlaneSpec make_plane(real half_width, real x3, int n) {
  if (!(half_width > 0)) throw config_error("make_plane: half width must be positive");
  if (n < 2) throw config_error("make_plane: need at least 2 points per axis");
  return PlaneSpec{half_width, x3, n};
}

/// Uniform wavenumber partition with the descending index convention:
/// node(0) = k_hi and node(N) = k_lo, step h = (k_hi - k_lo)/N.
struct WavenumberGrid {
  real k_lo = 0, k_hi = 0;
  int intervals = 0;  // N

  int count() const { return intervals + 1; }
  real step() const { return (k_hi - k_lo) / intervals; }
  real node(int j) const {
    if (j == 0) return k_hi;
    if (j == intervals) return k_lo;
    return k_hi - j * step();
  }
};

inline WavenumberGrid make_wavenumber_grid(real k_lo, real k_hi, int N) {
  if (!(k_lo > 0)) throw config_error("wavenumber grid: k_lo must be positive");
  if (!(k_hi > k_lo)) throw config_error("wavenumber grid: need k_lo < k_hi");
  if (N < 1) throw config_error("wavenumber grid: need at least one interval");
  return WavenumberGrid{k_lo, k_hi, N};
}

}  // namespace phaseless
