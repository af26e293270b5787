#include <catch2/catch.hpp>
#include <cmath>

#include "phaseless/sensing.hpp"

using namespace phaseless;

namespace {

IntensityData model_data(real A, real alpha, const PlaneSpec& plane,
                         const WavenumberGrid& kg) {
  IntensityData d;
  d.plane = plane;
  d.kgrid = kg;
  d.values.resize(std::size_t(kg.count()) * plane.size());
  for (int j = 0; j < kg.count(); ++j) {
    const real f = A * A + 1.0 - 2.0 * A * std::cos(kg.node(j) * alpha);
    for (std::size_t p = 0; p < plane.size(); ++p)
      d.values[std::size_t(j) * plane.size() + p] = f;
  }
  return d;
}

}  // namespace

TEST_CASE("intensity is the pointwise squared modulus") {
  const PlaneSpec plane = make_plane(5.0, 2.5, 4);
  const WavenumberGrid kg = make_wavenumber_grid(80, 81, 2);
  std::vector<PlaneField> fields(kg.count());
  for (int j = 0; j < kg.count(); ++j) {
    fields[j].plane = plane;
    fields[j].k = kg.node(j);
    fields[j].values.assign(plane.size(), complex(0));
  }
  fields[1].values[3] = complex(3, 4);
  const IntensityData d = intensity(fields, kg);
  CHECK(d.at(1, 3) == Approx(25.0));
  CHECK(d.at(0, 0) == 0.0);
  CHECK(d.at(2, 3) == 0.0);
}

TEST_CASE("intensity of the two-parameter model matches the closed form") {
  // A = 1.5, tau - x3 = 0.3, k = 80: f = 3.25 - 3 cos(24)
  const real f = 1.5 * 1.5 + 1.0 - 2.0 * 1.5 * std::cos(80.0 * 0.3);
  CHECK(f == Approx(1.9774634).epsilon(1e-6));
  PlaneField pf;
  pf.plane = make_plane(1.0, 2.5, 2);
  pf.k = 80.0;
  pf.values.assign(4, std::polar(1.5, 80.0 * 2.8) - std::polar(1.0, 80.0 * 2.5));
  const WavenumberGrid kg = make_wavenumber_grid(79, 80, 1);
  std::vector<PlaneField> fields(2);
  fields[0] = pf;
  fields[1] = pf;
  fields[1].k = 79.0;
  fields[1].values.assign(4, complex(0));
  const IntensityData d = intensity(fields, kg);
  CHECK(d.at(0, 0) == Approx(f).epsilon(1e-12));
}

TEST_CASE("intensity rejects mismatched inputs") {
  const PlaneSpec plane = make_plane(5.0, 2.5, 4);
  const WavenumberGrid kg = make_wavenumber_grid(80, 81, 2);
  std::vector<PlaneField> fields(2);  // one too few
  for (auto& f : fields) {
    f.plane = plane;
    f.values.assign(plane.size(), complex(0));
  }
  CHECK_THROWS_AS(intensity(fields, kg), config_error);
}

TEST_CASE("noise level zero returns the input identically") {
  const IntensityData d = model_data(1.5, 0.3, make_plane(5, 2.5, 6),
                                     make_wavenumber_grid(80, 85, 20));
  const IntensityData out = add_noise(d, 0.0, 123);
  REQUIRE(out.values == d.values);
}

TEST_CASE("relative L2 perturbation equals the level by construction") {
  const IntensityData d = model_data(1.5, 0.3, make_plane(5, 2.5, 8),
                                     make_wavenumber_grid(80, 85, 25));
  const IntensityData noisy = add_noise(d, 0.05, 424242);
  IntensityData diff = noisy;
  for (std::size_t i = 0; i < diff.values.size(); ++i) diff.values[i] -= d.values[i];
  CHECK(l2_norm(diff) / l2_norm(d) == Approx(0.05).margin(1e-12));
  // noise is additive-positive
  for (std::size_t i = 0; i < diff.values.size(); ++i) REQUIRE(diff.values[i] > 0);
}

TEST_CASE("same seed gives identical noise, different seed differs") {
  const IntensityData d = model_data(2.0, 0.6, make_plane(5, 2.5, 5),
                                     make_wavenumber_grid(80, 85, 10));
  const IntensityData a = add_noise(d, 0.05, 99);
  const IntensityData b = add_noise(d, 0.05, 99);
  const IntensityData c = add_noise(d, 0.05, 100);
  REQUIRE(a.values == b.values);
  REQUIRE(a.values != c.values);
}

TEST_CASE("negative noise level is rejected") {
  const IntensityData d = model_data(1.0, 0.1, make_plane(5, 2.5, 3),
                                     make_wavenumber_grid(80, 85, 5));
  CHECK_THROWS_AS(add_noise(d, -0.01, 1), config_error);
}

TEST_CASE("counter generator is deterministic and in (0,1)") {
  for (std::uint64_t c = 0; c < 1000; ++c) {
    const real v = uniform01(7919, c);
    REQUIRE(v > 0.0);
    REQUIRE(v < 1.0);
    REQUIRE(v == uniform01(7919, c));
  }
  CHECK(uniform01(1, 0) != uniform01(2, 0));
}
