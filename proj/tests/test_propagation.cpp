#include <catch2/catch.hpp>
#include <cmath>

#include "phaseless/propagation.hpp"

using namespace phaseless;

namespace {

PlaneField gaussian_beam(const PlaneSpec& plane, real k, real waist) {
  PlaneField f;
  f.plane = plane;
  f.k = k;
  f.values.resize(plane.size());
  for (int i2 = 0; i2 < plane.n; ++i2)
    for (int i1 = 0; i1 < plane.n; ++i1) {
      const real x = plane.coord(i1), y = plane.coord(i2);
      f.values[plane.index(i1, i2)] = std::exp(-(x * x + y * y) / (waist * waist));
    }
  return f;
}

real l2(const std::vector<complex>& v) {
  real s = 0;
  for (const complex& c : v) s += std::norm(c);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("zero field propagates to zero") {
  PlaneField f;
  f.plane = make_plane(5.0, 2.5, 32);
  f.k = 21.0;
  f.values.assign(f.plane.size(), complex(0));
  const PlaneField g = angular_spectrum_propagate(f, 1.0);
  CHECK(g.plane.x3 == 1.0);
  for (const complex& v : g.values) REQUIRE(v == complex(0));
}

TEST_CASE("round trip reproduces a band-limited field on the central half") {
  const PlaneSpec plane = make_plane(5.0, 2.5, 100);
  const real k = 21.0;
  const PlaneField f = gaussian_beam(plane, k, 1.2);
  const PlaneField down = angular_spectrum_propagate(f, 1.0);
  const PlaneField back = angular_spectrum_propagate(down, 2.5);
  real num = 0, den = 0;
  for (int i2 = 0; i2 < plane.n; ++i2)
    for (int i1 = 0; i1 < plane.n; ++i1) {
      if (std::abs(plane.coord(i1)) > 2.5 || std::abs(plane.coord(i2)) > 2.5) continue;
      num += std::norm(back.values[plane.index(i1, i2)] - f.values[plane.index(i1, i2)]);
      den += std::norm(f.values[plane.index(i1, i2)]);
    }
  CHECK(std::sqrt(num / den) < 1e-6);
}

TEST_CASE("propagation conserves the energy of a propagating field") {
  const PlaneSpec plane = make_plane(5.0, 2.5, 100);
  const PlaneField f = gaussian_beam(plane, 21.0, 1.2);
  const PlaneField g = angular_spectrum_propagate(f, 1.0);
  CHECK(l2(g.values) == Approx(l2(f.values)).epsilon(1e-8));
}

TEST_CASE("evanescent modes map to exactly zero") {
  // At k = 0.1 every non-constant mode of the padded square is evanescent;
  // a zero-mean field therefore propagates to exactly zero.
  PlaneField f;
  f.plane = make_plane(1.0, 2.5, 8);
  f.k = 0.1;
  f.values.resize(f.plane.size());
  for (int i2 = 0; i2 < 8; ++i2)
    for (int i1 = 0; i1 < 8; ++i1)
      f.values[f.plane.index(i1, i2)] = ((i1 + i2) % 2 == 0) ? 1.0 : -1.0;
  const PlaneField g = angular_spectrum_propagate(f, 1.0);
  for (const complex& v : g.values) REQUIRE(v == complex(0));
}

TEST_CASE("propagated gaussian matches the analytic beam solution") {
  // A beam this wide and this far inside the square has negligible truncation
  // and a paraxial remainder ~1e-4, so the closed-form paraxial propagation is
  // a tight independent oracle.
  const PlaneSpec plane = make_plane(5.0, 2.5, 100);
  const real k = 21.0, w0 = 1.2;
  const PlaneField f = gaussian_beam(plane, k, w0);
  for (real target : {1.0, 4.0}) {  // both directions
    const PlaneField g = angular_spectrum_propagate(f, target);
    const real dz = target - 2.5;
    const complex denom(w0 * w0, 2.0 * dz / k);
    const complex carrier = std::polar(1.0, k * dz);
    real num = 0, den = 0;
    for (int i2 = 0; i2 < plane.n; ++i2)
      for (int i1 = 0; i1 < plane.n; ++i1) {
        const real x = plane.coord(i1), y = plane.coord(i2);
        if (std::abs(x) > 2.5 || std::abs(y) > 2.5) continue;
        const complex exact =
            carrier * (w0 * w0 / denom) * std::exp(-(x * x + y * y) / denom);
        num += std::norm(g.values[plane.index(i1, i2)] - exact);
        den += std::norm(exact);
      }
    const real err = std::sqrt(num / den);
    INFO("target " << target << ": relative L2 error " << err);
    CHECK(err < 1e-3);
  }
}

TEST_CASE("propagator rejects nonsensical geometry") {
  PlaneField f;
  f.plane = make_plane(5.0, 2.5, 16);
  f.k = 21.0;
  f.values.assign(f.plane.size(), complex(1));
  CHECK_THROWS_AS(angular_spectrum_propagate(f, -1.0), config_error);
  f.k = 0;
  CHECK_THROWS_AS(angular_spectrum_propagate(f, 1.0), config_error);
}

TEST_CASE("assembled boundary data completes with the incident wave") {
  const Grid3D omega = make_grid({{-2.5, -2.5, -4.0}, {2.5, 2.5, 1.0}}, {11, 11, 11});
  const WavenumberGrid kg = make_wavenumber_grid(20.4, 21.0, 2);
  std::vector<PlaneField> zero(kg.count());
  for (int j = 0; j < kg.count(); ++j) {
    zero[j].plane = make_plane(5.0, 1.0, 20);
    zero[j].k = kg.node(j);
    zero[j].values.assign(zero[j].plane.size(), complex(0));
  }
  const BoundaryData bd = assemble_boundary_data(zero, kg, omega, 2.5);
  for (int j = 0; j < kg.count(); ++j) {
    const real k = kg.node(j);
    for (std::size_t i = 0; i < omega.size(); ++i) {
      const auto ijk = omega.unindex(i);
      if (!omega.on_boundary(ijk[0], ijk[1], ijk[2])) continue;
      const complex expected = std::polar(1.0, k * omega.node(i).z);
      REQUIRE(std::abs(bd.g[j][i] - expected) < 1e-14);
      REQUIRE(std::abs(std::abs(bd.g[j][i]) - 1.0) < 1e-14);
    }
  }
}

TEST_CASE("boundary data differs from the incident wave only on Gamma") {
  const Grid3D omega = make_grid({{-2.5, -2.5, -4.0}, {2.5, 2.5, 1.0}}, {11, 11, 11});
  const WavenumberGrid kg = make_wavenumber_grid(20.4, 21.0, 1);
  std::vector<PlaneField> fields(kg.count());
  for (int j = 0; j < kg.count(); ++j) {
    fields[j].plane = make_plane(5.0, 1.0, 20);
    fields[j].k = kg.node(j);
    fields[j].values.assign(fields[j].plane.size(), complex(0.5, -0.25));
  }
  const real gamma = 1.5;
  const BoundaryData bd = assemble_boundary_data(fields, kg, omega, gamma);
  for (std::size_t i = 0; i < omega.size(); ++i) {
    const auto ijk = omega.unindex(i);
    if (!omega.on_boundary(ijk[0], ijk[1], ijk[2])) continue;
    const Vec3 x = omega.node(i);
    const complex inc = std::polar(1.0, kg.node(0) * x.z);
    const bool on_gamma = ijk[2] == omega.n[2] - 1 && std::abs(x.x) <= gamma + 1e-12 &&
                          std::abs(x.y) <= gamma + 1e-12;
    if (on_gamma)
      REQUIRE(std::abs(bd.g[0][i] - inc - complex(0.5, -0.25)) < 1e-12);
    else
      REQUIRE(std::abs(bd.g[0][i] - inc) < 1e-14);
  }
}

TEST_CASE("assembly rejects planes off the top face and oversized Gamma") {
  const Grid3D omega = make_grid({{-2.5, -2.5, -4.0}, {2.5, 2.5, 1.0}}, {9, 9, 9});
  const WavenumberGrid kg = make_wavenumber_grid(20.4, 21.0, 1);
  std::vector<PlaneField> fields(kg.count());
  for (int j = 0; j < kg.count(); ++j) {
    fields[j].plane = make_plane(5.0, 0.5, 12);  // not the top face
    fields[j].k = kg.node(j);
    fields[j].values.assign(fields[j].plane.size(), complex(0));
  }
  CHECK_THROWS_AS(assemble_boundary_data(fields, kg, omega, 2.5), config_error);
  for (auto& f : fields) f.plane.x3 = 1.0;
  CHECK_THROWS_AS(assemble_boundary_data(fields, kg, omega, 3.5), config_error);
  CHECK_NOTHROW(assemble_boundary_data(fields, kg, omega, 2.5));
}
