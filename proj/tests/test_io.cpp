#include <catch2/catch.hpp>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>

#include "phaseless/io.hpp"
#include "phaseless/pipeline.hpp"

using namespace phaseless;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("phaseless_test_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::mt19937_64 rng(20240817);

real rnd() {
  return std::uniform_real_distribution<real>(-2, 2)(rng);
}

}  // namespace

TEST_CASE("medium file round trip is bit-exact") {
  TempDir tmp;
  const Grid3D g = make_grid({{-2.5, -2.5, -4.0}, {2.5, 2.5, 1.0}}, {9, 7, 11});
  Medium m{g, {}};
  m.values.resize(g.size());
  for (auto& v : m.values) v = 1.0 + std::abs(rnd());
  write_medium(tmp.file("m.pfd"), m);
  const Medium back = read_medium(tmp.file("m.pfd"));
  REQUIRE(back.grid.n == g.n);
  REQUIRE(back.grid.box.lo.z == g.box.lo.z);
  REQUIRE(back.values == m.values);
}

TEST_CASE("plane field set round trip is bit-exact") {
  TempDir tmp;
  const PlaneSpec plane = make_plane(5.0, 2.5, 6);
  std::vector<PlaneField> fields(3);
  real k = 21.0;
  for (auto& f : fields) {
    f.plane = plane;
    f.k = k;
    k -= 0.1;
    f.values.resize(plane.size());
    for (auto& v : f.values) v = complex(rnd(), rnd());
  }
  write_plane_fields(tmp.file("f.pfd"), fields);
  const auto back = read_plane_fields(tmp.file("f.pfd"));
  REQUIRE(back.size() == fields.size());
  for (std::size_t j = 0; j < fields.size(); ++j) {
    REQUIRE(back[j].k == fields[j].k);
    REQUIRE(back[j].values == fields[j].values);
  }
}

TEST_CASE("intensity file round trip is bit-exact") {
  TempDir tmp;
  IntensityData d;
  d.plane = make_plane(5.0, 2.5, 5);
  d.kgrid = make_wavenumber_grid(80, 85, 10);
  d.values.resize(std::size_t(d.kgrid.count()) * d.pixels());
  for (auto& v : d.values) v = std::abs(rnd());
  write_intensity(tmp.file("i.pfd"), d);
  const IntensityData back = read_intensity(tmp.file("i.pfd"));
  REQUIRE(back.kgrid.count() == d.kgrid.count());
  REQUIRE(back.values == d.values);
}

TEST_CASE("phase map round trip is bit-exact") {
  TempDir tmp;
  PhaseMap m;
  m.plane = make_plane(5.0, 2.5, 4);
  m.amplitude.resize(m.plane.size());
  m.tau.resize(m.plane.size());
  m.alpha.resize(m.plane.size());
  for (std::size_t p = 0; p < m.plane.size(); ++p) {
    m.alpha[p] = std::abs(rnd());
    m.tau[p] = m.alpha[p] + 2.5;
    m.amplitude[p] = std::abs(rnd()) + 0.5;
  }
  write_phase_map(tmp.file("p.pfd"), m);
  const PhaseMap back = read_phase_map(tmp.file("p.pfd"));
  REQUIRE(back.amplitude == m.amplitude);
  REQUIRE(back.tau == m.tau);
  REQUIRE(back.alpha == m.alpha);
}

TEST_CASE("boundary data round trip preserves the boundary values") {
  TempDir tmp;
  const Grid3D g = make_grid({{-2.5, -2.5, -4.0}, {2.5, 2.5, 1.0}}, {7, 6, 5});
  BoundaryData bd;
  bd.grid = g;
  bd.kgrid = make_wavenumber_grid(20.4, 21.0, 2);
  bd.gamma_half_width = 2.5;
  bd.g.assign(bd.kgrid.count(), std::vector<complex>(g.size(), complex(0)));
  for (auto& gk : bd.g)
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto ijk = g.unindex(i);
      if (g.on_boundary(ijk[0], ijk[1], ijk[2])) gk[i] = complex(rnd(), rnd());
    }
  write_boundary_data(tmp.file("b.pfd"), bd);
  const BoundaryData back = read_boundary_data(tmp.file("b.pfd"));
  REQUIRE(back.gamma_half_width == bd.gamma_half_width);
  REQUIRE(back.kgrid.count() == bd.kgrid.count());
  for (int j = 0; j < bd.kgrid.count(); ++j) REQUIRE(back.g[j] == bd.g[j]);
}

TEST_CASE("file kind mismatch is rejected") {
  TempDir tmp;
  const Grid3D g = make_grid({{0, 0, 0}, {1, 1, 1}}, {2, 2, 2});
  Medium m{g, std::vector<real>(8, 1.0)};
  write_medium(tmp.file("m.pfd"), m);
  CHECK_THROWS_AS(read_intensity(tmp.file("m.pfd")), config_error);
  CHECK_THROWS_AS(read_medium(tmp.file("missing.pfd")), config_error);
}

TEST_CASE("config parsing: comments, repeats, types") {
  std::istringstream in(
      "# case geometry\n"
      "omega_n = 17\n"
      "noise_level = 0.05   # five percent\n"
      "inclusion = 0 0 0.25 0.25 1.0\n"
      "inclusion = 0.5 0 0.25 0.25\n"
      "out_dir = /tmp/run\n"
      "\n");
  const ConfigFile f = parse_config(in);
  CHECK(f.get_int("omega_n", 0) == 17);
  CHECK(f.get_real("noise_level", 0) == Approx(0.05));
  CHECK(f.get_all("inclusion").size() == 2);
  CHECK(f.get("out_dir", "") == "/tmp/run");
  CHECK(f.get_int("missing", 42) == 42);
}

TEST_CASE("config parsing rejects malformed lines and values") {
  std::istringstream bad1("omega_n 17\n");
  CHECK_THROWS_AS(parse_config(bad1), config_error);
  std::istringstream bad2("omega_n = seventeen\n");
  const ConfigFile f = parse_config(bad2);
  CHECK_THROWS_AS(f.get_int("omega_n", 0), config_error);
}

TEST_CASE("pipeline config validation") {
  std::istringstream ok(
      "inclusion = 0 0 0.25 0.25 1.0\n"
      "out_dir = /tmp/x\n");
  CHECK_NOTHROW(load_pipeline_config(parse_config(ok)));

  std::istringstream unknown("whatever = 3\n");
  CHECK_THROWS_AS(load_pipeline_config(parse_config(unknown)), config_error);

  std::istringstream shift_bad("shift_k_hi = 90\n");
  CHECK_THROWS_AS(load_pipeline_config(parse_config(shift_bad)), config_error);

  std::istringstream prop_bad("prop_x3 = 0.5\n");  // not the top face of omega
  CHECK_THROWS_AS(load_pipeline_config(parse_config(prop_bad)), config_error);
}

TEST_CASE("output lock is exclusive") {
  TempDir tmp;
  const std::string dir = tmp.file("out");
  {
    OutputLock lock(dir);
    CHECK_THROWS_AS(OutputLock(dir), config_error);
  }
  CHECK_NOTHROW(OutputLock(dir));  // released on destruction
}
