#pragma once

#include <cstdint>
#include <vector>

#include "phaseless/forward.hpp"
#include "phaseless/grid.hpp"
#include "phaseless/types.hpp"

namespace phaseless {

/// Phaseless data f(x,k) = |u_sc(x,k)|^2 on the measurement square across the
/// wavenumber grid. Layout: [k-node][pixel], k index descending as usual.
struct IntensityData {
  PlaneSpec plane;
  WavenumberGrid kgrid;
  std::vector<real> values;

  std::size_t pixels() const { return plane.size(); }
  real at(int j, std::size_t pix) const { return values[std::size_t(j) * pixels() + pix]; }
};

inline IntensityData intensity(const std::vector<PlaneField>& fields,
                               const WavenumberGrid& kgrid) {
  if (int(fields.size()) != kgrid.count())
    throw config_error("intensity: need one plane field per wavenumber node");
  IntensityData data;
  data.plane = fields.front().plane;
  data.kgrid = kgrid;
  data.values.resize(std::size_t(kgrid.count()) * data.pixels());
  for (int j = 0; j < kgrid.count(); ++j) {
    const PlaneField& f = fields[j];
    if (!f.plane.same_geometry(data.plane))
      throw config_error("intensity: plane fields disagree on geometry");
    if (std::abs(f.k - kgrid.node(j)) > 1e-9 * kgrid.k_hi)
      throw config_error("intensity: plane field k does not match grid node");
    for (std::size_t p = 0; p < data.pixels(); ++p)
      data.values[std::size_t(j) * data.pixels() + p] = std::norm(f.values[p]);
  }
  return data;
}

// Counter-based generator: a fixed (seed, counter) pair always yields the same
// number on every platform.
inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline real uniform01(std::uint64_t seed, std::uint64_t counter) {
  const std::uint64_t x = splitmix64(seed ^ splitmix64(counter));
  return (real(x >> 11) + 0.5) * 0x1p-53;  // in (0,1)
}

/// Discrete L2 norm over the square x the wavenumber interval: trapezoidal
/// weights in k, uniform cell weights on the plane.
inline real l2_norm(const IntensityData& data) {
  const real cell = data.plane.spacing() * data.plane.spacing();
  const real h = data.kgrid.step();
  real acc = 0;
  for (int j = 0; j < data.kgrid.count(); ++j) {
    const real wk = (j == 0 || j == data.kgrid.intervals) ? 0.5 * h : h;
    real slice = 0;
    const real* f = data.values.data() + std::size_t(j) * data.pixels();
    for (std::size_t p = 0; p < data.pixels(); ++p) slice += f[p] * f[p];
    acc += wk * slice * cell;
  }
  return std::sqrt(acc);
}

/// f_noise = f + level * ||f|| * rand / ||rand||, rand(x,k) i.i.d. uniform on
/// (0,1) from the seeded counter generator. The relative L2 perturbation
/// equals level exactly by construction.
inline IntensityData add_noise(const IntensityData& data, real level, std::uint64_t seed) {
  if (level < 0) throw config_error("add_noise: noise level must be non-negative");
  if (level == 0) return data;

  IntensityData rnd = data;
  for (std::size_t i = 0; i < rnd.values.size(); ++i)
    rnd.values[i] = uniform01(seed, i);
  const real scale = level * l2_norm(data) / l2_norm(rnd);

  IntensityData out = data;
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] += scale * rnd.values[i];
  return out;
}

}  // namespace phaseless
