#pragma once

#include <fstream>
#include <iomanip>
#include <string>

#include "phaseless/medium.hpp"
#include "phaseless/retrieval.hpp"
#include "phaseless/types.hpp"

namespace phaseless {

/// CSV of (flat pixel index, Re u_sc, Im u_sc) over an index range, with the
/// field synthesized from the phase map at the requested k. Pixel indices
/// flatten the square row-major, x1 fastest.
inline void export_phasemap_line(const std::string& path, const PhaseMap& map, real k,
                                 std::size_t from, std::size_t to) {
  if (to <= from || to > map.plane.size())
    throw config_error("export: pixel range out of bounds");
  std::ofstream out(path);
  if (!out) throw config_error("cannot open export file: " + path);
  out << "index,re_usc,im_usc,amplitude,tau\n";
  out << std::setprecision(17);
  const complex inc = std::polar(1.0, k * map.plane.x3);
  for (std::size_t p = from; p < to; ++p) {
    const complex usc = std::polar(map.amplitude[p], k * map.tau[p]) - inc;
    out << p << ',' << usc.real() << ',' << usc.imag() << ',' << map.amplitude[p]
        << ',' << map.tau[p] << '\n';
  }
  if (!out) throw config_error("write failed: " + path);
}

/// CSV slice of a medium through the plane axis=value (nearest grid layer).
inline void export_medium_slice(const std::string& path, const Medium& m, int axis,
                                real coord) {
  if (axis < 0 || axis > 2) throw config_error("export: slice axis must be 0, 1 or 2");
  const Grid3D& g = m.grid;
  const real lo = axis == 0 ? g.box.lo.x : axis == 1 ? g.box.lo.y : g.box.lo.z;
  const real h = axis == 0 ? g.spacing.x : axis == 1 ? g.spacing.y : g.spacing.z;
  const int layer = int(std::lround((coord - lo) / h));
  if (layer < 0 || layer >= g.n[axis])
    throw config_error("export: slice coordinate outside the grid box");
  std::ofstream out(path);
  if (!out) throw config_error("cannot open export file: " + path);
  out << std::setprecision(17);
  const int a = (axis + 1) % 3, b = (axis + 2) % 3;
  out << "u,v,c\n";
  for (int jb = 0; jb < g.n[b]; ++jb)
    for (int ja = 0; ja < g.n[a]; ++ja) {
      int ijk[3];
      ijk[axis] = layer;
      ijk[a] = ja;
      ijk[b] = jb;
      const Vec3 x = g.node(ijk[0], ijk[1], ijk[2]);
      const real u = a == 0 ? x.x : a == 1 ? x.y : x.z;
      const real v = b == 0 ? x.x : b == 1 ? x.y : x.z;
      out << u << ',' << v << ',' << m.values[g.index(ijk[0], ijk[1], ijk[2])] << '\n';
    }
  if (!out) throw config_error("write failed: " + path);
}

/// Legacy VTK structured-points volume of a medium, for external viewers.
inline void export_medium_vtk(const std::string& path, const Medium& m) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open export file: " + path);
  const Grid3D& g = m.grid;
  out << "# vtk DataFile Version 3.0\n";
  out << "coefficient field\n";
  out << "ASCII\n";
  out << "DATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << g.n[0] << ' ' << g.n[1] << ' ' << g.n[2] << '\n';
  out << "ORIGIN " << g.box.lo.x << ' ' << g.box.lo.y << ' ' << g.box.lo.z << '\n';
  out << "SPACING " << g.spacing.x << ' ' << g.spacing.y << ' ' << g.spacing.z << '\n';
  out << "POINT_DATA " << g.size() << '\n';
  out << "SCALARS c double 1\n";
  out << "LOOKUP_TABLE default\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < m.values.size(); ++i)
    out << m.values[i] << ((i + 1) % 6 == 0 ? '\n' : ' ');
  out << '\n';
  if (!out) throw config_error("write failed: " + path);
}

}  // namespace phaseless
