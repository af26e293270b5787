#pragma once

#include <vector>

#include "phaseless/fft.hpp"
#include "phaseless/forward.hpp"
#include "phaseless/grid.hpp"
#include "phaseless/types.hpp"

namespace phaseless {

/// Angular-spectrum transfer between parallel planes. The input square is
/// extended by zero and padded 2x per axis, decomposed into transverse Fourier
/// modes, each propagating mode (k1^2 + k2^2 < k^2) is multiplied by
/// exp(i k3 (target - source)) with k3 = sqrt(k^2 - k1^2 - k2^2), evanescent
/// modes (including the circle itself) are dropped, and the same square is
/// sampled on the target plane.
inline PlaneField angular_spectrum_propagate(const PlaneField& field, real target_x3) {
  const PlaneSpec& plane = field.plane;
  if (!(target_x3 > 0)) throw config_error("angular_spectrum_propagate: target height must be positive");
  if (!(field.k > 0)) throw config_error("angular_spectrum_propagate: k must be positive");
  if (field.values.size() != plane.size())
    throw config_error("angular_spectrum_propagate: field size mismatch");

  const int n = plane.n;
  const int M = next_fast_size(2 * n);
  const real d = plane.spacing();
  const real dz = target_x3 - plane.x3;
  const real k2 = field.k * field.k;

  Fft2 fft(M, M);
  complex* buf = fft.data();
  std::fill(buf, buf + fft.size(), complex(0));
  for (int i2 = 0; i2 < n; ++i2)
    for (int i1 = 0; i1 < n; ++i1)
      buf[std::size_t(i2) * M + i1] = field.values[plane.index(i1, i2)];
  fft.forward();

  const real dkap = 2.0 * pi / (M * d);
  for (int m2 = 0; m2 < M; ++m2) {
    const real ky = ((m2 <= M / 2) ? m2 : m2 - M) * dkap;
    for (int m1 = 0; m1 < M; ++m1) {
      const real kx = ((m1 <= M / 2) ? m1 : m1 - M) * dkap;
      const real kap2 = kx * kx + ky * ky;
      complex& v = buf[std::size_t(m2) * M + m1];
      if (kap2 >= k2)
        v = complex(0);
      else
        v *= std::polar(1.0, std::sqrt(k2 - kap2) * dz);
    }
  }
  fft.backward();

  PlaneField out;
  out.plane = plane;
  out.plane.x3 = target_x3;
  out.k = field.k;
  out.values.resize(plane.size());
  for (int i2 = 0; i2 < n; ++i2)
    for (int i1 = 0; i1 < n; ++i1)
      out.values[plane.index(i1, i2)] = buf[std::size_t(i2) * M + i1];
  return out;
}

/// Completed Dirichlet data on the boundary of the computational box: on the
/// top-face window Gamma the propagated scattered field plus the incident
/// wave, the incident wave alone elsewhere. g is stored per wavenumber node as
/// a full-grid array whose boundary entries are meaningful.
struct BoundaryData {
  Grid3D grid;
  WavenumberGrid kgrid;
  real gamma_half_width = 0;
  std::vector<std::vector<complex>> g;

  int node_index(real k) const {
    for (int j = 0; j < kgrid.count(); ++j)
      if (std::abs(kgrid.node(j) - k) <= 1e-9 * kgrid.k_hi) return j;
    return -1;
  }
};

namespace detail {

/// Bilinear sample of a plane field at (x, y); the point must lie inside the
/// sampled square.
inline complex bilinear(const PlaneField& f, real x, real y) {
  const PlaneSpec& p = f.plane;
  const real d = p.spacing();
  real s = (x + p.half_width) / d;
  real t = (y + p.half_width) / d;
  if (s < -1e-9 || t < -1e-9 || s > p.n - 1 + 1e-9 || t > p.n - 1 + 1e-9)
    throw config_error("bilinear: sample point outside the plane square");
  s = std::clamp(s, 0.0, real(p.n - 1));
  t = std::clamp(t, 0.0, real(p.n - 1));
  const int i1 = std::min(int(s), p.n - 2);
  const int i2 = std::min(int(t), p.n - 2);
  const real fs = s - i1, ft = t - i2;
  const complex v00 = f.values[p.index(i1, i2)];
  const complex v10 = f.values[p.index(i1 + 1, i2)];
  const complex v01 = f.values[p.index(i1, i2 + 1)];
  const complex v11 = f.values[p.index(i1 + 1, i2 + 1)];
  return v00 * ((1 - fs) * (1 - ft)) + v10 * (fs * (1 - ft)) +
         v01 * ((1 - fs) * ft) + v11 * (fs * ft);
}

}  // namespace detail

inline BoundaryData assemble_boundary_data(const std::vector<PlaneField>& propagated,
                                           const WavenumberGrid& kgrid,
                                           const Grid3D& omega, real gamma_half_width) {
  if (int(propagated.size()) != kgrid.count())
    throw config_error("assemble_boundary_data: need one plane field per wavenumber node");
  const real ztop = omega.box.hi.z;
  const real scale = std::max(std::abs(ztop), real(1));
  BoundaryData bd;
  bd.grid = omega;
  bd.kgrid = kgrid;
  bd.gamma_half_width = gamma_half_width;
  bd.g.resize(kgrid.count());

  for (int j = 0; j < kgrid.count(); ++j) {
    const PlaneField& f = propagated[j];
    if (std::abs(f.plane.x3 - ztop) > 1e-9 * scale)
      throw config_error("assemble_boundary_data: propagated plane is not the top face of the box");
    if (gamma_half_width > f.plane.half_width + 1e-12 ||
        -gamma_half_width < omega.box.lo.x - 1e-12 ||
        gamma_half_width > omega.box.hi.x + 1e-12 ||
        -gamma_half_width < omega.box.lo.y - 1e-12 ||
        gamma_half_width > omega.box.hi.y + 1e-12)
      throw config_error("assemble_boundary_data: Gamma is not contained in the boundary");
    const real k = kgrid.node(j);
    if (std::abs(f.k - k) > 1e-9 * kgrid.k_hi)
      throw config_error("assemble_boundary_data: plane field k does not match grid node");

    std::vector<complex>& g = bd.g[j];
    g.assign(omega.size(), complex(0));
    for (int i3 = 0; i3 < omega.n[2]; ++i3)
      for (int i2 = 0; i2 < omega.n[1]; ++i2)
        for (int i1 = 0; i1 < omega.n[0]; ++i1) {
          if (!omega.on_boundary(i1, i2, i3)) continue;
          const Vec3 x = omega.node(i1, i2, i3);
          complex val = std::polar(1.0, k * x.z);
          if (i3 == omega.n[2] - 1 && std::abs(x.x) <= gamma_half_width + 1e-12 &&
              std::abs(x.y) <= gamma_half_width + 1e-12)
            val += detail::bilinear(f, x.x, x.y);
          g[omega.index(i1, i2, i3)] = val;
        }
  }
  return bd;
}

/// Boundary data of the unscattered incident wave, for tests and baselines.
inline BoundaryData vacuum_boundary_data(const Grid3D& omega, const WavenumberGrid& kgrid,
                                         real gamma_half_width) {
  BoundaryData bd;
  bd.grid = omega;
  bd.kgrid = kgrid;
  bd.gamma_half_width = gamma_half_width;
  bd.g.resize(kgrid.count());
  for (int j = 0; j < kgrid.count(); ++j) {
    const real k = kgrid.node(j);
    bd.g[j].assign(omega.size(), complex(0));
    for (int i3 = 0; i3 < omega.n[2]; ++i3) {
      const complex v = std::polar(1.0, k * (omega.box.lo.z + i3 * omega.spacing.z));
      for (int i2 = 0; i2 < omega.n[1]; ++i2)
        for (int i1 = 0; i1 < omega.n[0]; ++i1)
          if (omega.on_boundary(i1, i2, i3)) bd.g[j][omega.index(i1, i2, i3)] = v;
    }
  }
  return bd;
}

}  // namespace phaseless
