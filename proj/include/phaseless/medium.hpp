#pragma once

#include <vector>

#include "phaseless/grid.hpp"
#include "phaseless/types.hpp"

namespace phaseless {

/// Smooth spherical inclusion: c gains amplitude * bump inside B(center, radius).
struct Inclusion {
  Vec3 center;
  real radius = 0;
  real amplitude = 1.0;
};

/// C-infinity bump supported on B(center, r): exp(1 - r^2/(r^2 - |x-c|^2))
/// inside the ball, 0 outside; equals 1 at the center.
inline real bump(const Vec3& x, const Vec3& center, real r) {
  const real d2 = (x - center).norm2();
  const real r2 = r * r;
  if (d2 >= r2) return 0.0;
  return std::exp(1.0 - r2 / (r2 - d2));
}

/// Coefficient field c(x) >= 1 sampled on a grid; c = 1 on the boundary and
/// outside the inclusion supports.
struct Medium {
  Grid3D grid;
  std::vector<real> values;

  real max_value() const {
    real m = 1.0;
    for (real v : values) m = std::max(m, v);
    return m;
  }
};

inline Medium build_medium(const Grid3D& grid, const std::vector<Inclusion>& inclusions) {
  for (const auto& inc : inclusions) {
    if (!(inc.radius > 0)) throw config_error("inclusion radius must be positive");
    if (inc.amplitude < 0) throw config_error("inclusion amplitude must be non-negative");
    const Box3& b = grid.box;
    if (inc.center.x - inc.radius < b.lo.x || inc.center.x + inc.radius > b.hi.x ||
        inc.center.y - inc.radius < b.lo.y || inc.center.y + inc.radius > b.hi.y ||
        inc.center.z - inc.radius < b.lo.z || inc.center.z + inc.radius > b.hi.z)
      throw config_error("inclusion ball exits the computational box");
  }
  Medium m;
  m.grid = grid;
  m.values.assign(grid.size(), 1.0);
  for (int i3 = 0; i3 < grid.n[2]; ++i3)
    for (int i2 = 0; i2 < grid.n[1]; ++i2)
      for (int i1 = 0; i1 < grid.n[0]; ++i1) {
        const Vec3 x = grid.node(i1, i2, i3);
        real c = 1.0;
        for (const auto& inc : inclusions)
          c += inc.amplitude * bump(x, inc.center, inc.radius);
        m.values[grid.index(i1, i2, i3)] = c;
      }
  return m;
}

}  // namespace phaseless
