// Back-propagates the field of a point source between two planes and compares
// against the analytic spherical wave.

#include <cmath>
#include <cstdio>

#include "phaseless/propagation.hpp"

using namespace phaseless;

int main() {
  const real k = 21.0;
  const PlaneSpec plane = make_plane(5.0, 2.5, 100);

  auto spherical = [&](real x, real y, real z) {
    const real r = std::sqrt(x * x + y * y + z * z);
    return std::polar(1.0 / (4.0 * pi * r), k * r);
  };

  PlaneField f;
  f.plane = plane;
  f.k = k;
  f.values.resize(plane.size());
  for (int i2 = 0; i2 < plane.n; ++i2)
    for (int i1 = 0; i1 < plane.n; ++i1)
      f.values[plane.index(i1, i2)] = spherical(plane.coord(i1), plane.coord(i2), 2.5);

  const PlaneField g = angular_spectrum_propagate(f, 1.0);

  real num = 0, den = 0;
  for (int i2 = 0; i2 < plane.n; ++i2)
    for (int i1 = 0; i1 < plane.n; ++i1) {
      const real x = plane.coord(i1), y = plane.coord(i2);
      if (std::abs(x) > 1.5 || std::abs(y) > 1.5) continue;
      const complex exact = spherical(x, y, 1.0);
      num += std::norm(g.values[plane.index(i1, i2)] - exact);
      den += std::norm(exact);
    }
  std::printf("back-propagated point source, relative L2 error on |x|,|y| <= 1.5: %.3e\n",
              std::sqrt(num / den));

  const PlaneField back = angular_spectrum_propagate(g, 2.5);
  num = den = 0;
  for (int i2 = 0; i2 < plane.n; ++i2)
    for (int i1 = 0; i1 < plane.n; ++i1) {
      const real x = plane.coord(i1), y = plane.coord(i2);
      if (std::abs(x) > 2.5 || std::abs(y) > 2.5) continue;
      num += std::norm(back.values[plane.index(i1, i2)] - f.values[plane.index(i1, i2)]);
      den += std::norm(f.values[plane.index(i1, i2)]);
    }
  std::printf("round trip 2.5 -> 1 -> 2.5, relative L2 error on the central half: %.3e\n",
              std::sqrt(num / den));
  return 0;
}
