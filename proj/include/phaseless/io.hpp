#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "phaseless/forward.hpp"
#include "phaseless/grid.hpp"
#include "phaseless/medium.hpp"
#include "phaseless/propagation.hpp"
#include "phaseless/retrieval.hpp"
#include "phaseless/sensing.hpp"
#include "phaseless/types.hpp"

namespace phaseless {

// ---------------------------------------------------------------------------
// Binary field-file container. Layout: 16-byte magic, u64 version, u64 kind,
// kind-specific header, payload. All integers u64/i64 little-endian, all reals
// IEEE binary64 little-endian, arrays row-major with x1 fastest. Complex data
// is interleaved (re, im).
// ---------------------------------------------------------------------------

namespace io {

inline constexpr char kMagic[16] = {'P', 'H', 'A', 'S', 'E', 'L', 'E', 'S',
                                    'S', 'F', 'I', 'E', 'L', 'D', '0', '1'};
inline constexpr std::uint64_t kVersion = 1;

enum class FileKind : std::uint64_t {
  medium = 1,
  plane_complex_set = 2,
  intensity = 3,
  phase_map = 4,
  boundary = 5,
};

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw config_error("cannot open file for writing: " + path);
  }
  void magic(FileKind kind) {
    out_.write(kMagic, sizeof(kMagic));
    u64(kVersion);
    u64(static_cast<std::uint64_t>(kind));
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xff;
    out_.write(reinterpret_cast<char*>(b), 8);
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(real v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void f64_array(const real* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) f64(data[i]);
  }
  void c64_array(const complex* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      f64(data[i].real());
      f64(data[i].imag());
    }
  }
  void close() {
    out_.close();
    if (!out_) throw config_error("write failed while closing file");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw config_error("cannot open file for reading: " + path);
  }
  FileKind magic() {
    char m[16];
    in_.read(m, 16);
    if (!in_ || std::memcmp(m, kMagic, 16) != 0)
      throw config_error("not a phaseless field file: " + path_);
    if (u64() != kVersion) throw config_error("unsupported field file version: " + path_);
    return static_cast<FileKind>(u64());
  }
  std::uint64_t u64() {
    unsigned char b[8];
    in_.read(reinterpret_cast<char*>(b), 8);
    if (!in_) throw config_error("truncated field file: " + path_);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  real f64() {
    const std::uint64_t bits = u64();
    real v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  void f64_array(real* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) data[i] = f64();
  }
  void c64_array(complex* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      const real re = f64();
      const real im = f64();
      data[i] = complex(re, im);
    }
  }

 private:
  std::ifstream in_;
  std::string path_;
};

inline void write_grid_header(Writer& w, const Grid3D& g) {
  for (int a = 0; a < 3; ++a) w.i64(g.n[a]);
  w.f64(g.box.lo.x);
  w.f64(g.box.lo.y);
  w.f64(g.box.lo.z);
  w.f64(g.box.hi.x);
  w.f64(g.box.hi.y);
  w.f64(g.box.hi.z);
}

inline Grid3D read_grid_header(Reader& r) {
  std::array<int, 3> n;
  for (int a = 0; a < 3; ++a) n[a] = int(r.i64());
  Box3 box;
  box.lo = {r.f64(), r.f64(), r.f64()};
  box.hi = {r.f64(), r.f64(), r.f64()};
  return make_grid(box, n);
}

inline void write_plane_header(Writer& w, const PlaneSpec& p) {
  w.i64(p.n);
  w.f64(p.half_width);
  w.f64(p.x3);
}

inline PlaneSpec read_plane_header(Reader& r) {
  const int n = int(r.i64());
  const real hw = r.f64();
  const real x3 = r.f64();
  return make_plane(hw, x3, n);
}

}  // namespace io

inline void write_medium(const std::string& path, const Medium& m) {
  io::Writer w(path);
  w.magic(io::FileKind::medium);
  io::write_grid_header(w, m.grid);
  w.f64_array(m.values.data(), m.values.size());
  w.close();
}

inline Medium read_medium(const std::string& path) {
  io::Reader r(path);
  if (r.magic() != io::FileKind::medium)
    throw config_error("expected a medium file: " + path);
  Medium m;
  m.grid = io::read_grid_header(r);
  m.values.resize(m.grid.size());
  r.f64_array(m.values.data(), m.values.size());
  return m;
}

inline void write_plane_fields(const std::string& path, const std::vector<PlaneField>& fields) {
  if (fields.empty()) throw config_error("write_plane_fields: empty field set");
  io::Writer w(path);
  w.magic(io::FileKind::plane_complex_set);
  io::write_plane_header(w, fields.front().plane);
  w.i64(std::int64_t(fields.size()));
  for (const auto& f : fields) w.f64(f.k);
  for (const auto& f : fields) {
    if (!f.plane.same_geometry(fields.front().plane))
      throw config_error("write_plane_fields: inconsistent plane geometry");
    w.c64_array(f.values.data(), f.values.size());
  }
  w.close();
}

inline std::vector<PlaneField> read_plane_fields(const std::string& path) {
  io::Reader r(path);
  if (r.magic() != io::FileKind::plane_complex_set)
    throw config_error("expected a plane field file: " + path);
  const PlaneSpec plane = io::read_plane_header(r);
  const std::int64_t count = r.i64();
  std::vector<PlaneField> fields(count);
  for (auto& f : fields) {
    f.plane = plane;
    f.k = r.f64();
  }
  for (auto& f : fields) {
    f.values.resize(plane.size());
    r.c64_array(f.values.data(), f.values.size());
  }
  return fields;
}

inline void write_intensity(const std::string& path, const IntensityData& d) {
  io::Writer w(path);
  w.magic(io::FileKind::intensity);
  io::write_plane_header(w, d.plane);
  w.i64(d.kgrid.intervals);
  w.f64(d.kgrid.k_lo);
  w.f64(d.kgrid.k_hi);
  w.f64_array(d.values.data(), d.values.size());
  w.close();
}

inline IntensityData read_intensity(const std::string& path) {
  io::Reader r(path);
  if (r.magic() != io::FileKind::intensity)
    throw config_error("expected an intensity file: " + path);
  IntensityData d;
  d.plane = io::read_plane_header(r);
  const int N = int(r.i64());
  const real k_lo = r.f64();
  const real k_hi = r.f64();
  d.kgrid = make_wavenumber_grid(k_lo, k_hi, N);
  d.values.resize(std::size_t(d.kgrid.count()) * d.pixels());
  r.f64_array(d.values.data(), d.values.size());
  return d;
}

inline void write_phase_map(const std::string& path, const PhaseMap& m) {
  io::Writer w(path);
  w.magic(io::FileKind::phase_map);
  io::write_plane_header(w, m.plane);
  w.f64_array(m.amplitude.data(), m.amplitude.size());
  w.f64_array(m.tau.data(), m.tau.size());
  w.f64_array(m.alpha.data(), m.alpha.size());
  w.close();
}

inline PhaseMap read_phase_map(const std::string& path) {
  io::Reader r(path);
  if (r.magic() != io::FileKind::phase_map)
    throw config_error("expected a phase map file: " + path);
  PhaseMap m;
  m.plane = io::read_plane_header(r);
  m.amplitude.resize(m.plane.size());
  m.tau.resize(m.plane.size());
  m.alpha.resize(m.plane.size());
  r.f64_array(m.amplitude.data(), m.amplitude.size());
  r.f64_array(m.tau.data(), m.tau.size());
  r.f64_array(m.alpha.data(), m.alpha.size());
  return m;
}

// Boundary data: per k node the six faces of the box in the fixed order
// x1-lo, x1-hi, x2-lo, x2-hi, x3-lo, x3-hi; each face is the full slab with
// the lower in-face axis fastest (edges appear in several faces with equal
// values).
inline void write_boundary_data(const std::string& path, const BoundaryData& bd) {
  io::Writer w(path);
  w.magic(io::FileKind::boundary);
  io::write_grid_header(w, bd.grid);
  w.f64(bd.gamma_half_width);
  w.i64(bd.kgrid.intervals);
  w.f64(bd.kgrid.k_lo);
  w.f64(bd.kgrid.k_hi);
  const Grid3D& g = bd.grid;
  for (const auto& gk : bd.g) {
    for (int face = 0; face < 6; ++face) {
      const int axis = face / 2;
      const int side = face % 2;
      const int fixed = side == 0 ? 0 : g.n[axis] - 1;
      auto at = [&](int a, int b) {
        switch (axis) {
          case 0: return gk[g.index(fixed, a, b)];
          case 1: return gk[g.index(a, fixed, b)];
          default: return gk[g.index(a, b, fixed)];
        }
      };
      const int na = axis == 0 ? g.n[1] : g.n[0];
      const int nb = axis == 2 ? g.n[1] : g.n[2];
      for (int b = 0; b < nb; ++b)
        for (int a = 0; a < na; ++a) {
          const complex v = at(a, b);
          w.f64(v.real());
          w.f64(v.imag());
        }
    }
  }
  w.close();
}

inline BoundaryData read_boundary_data(const std::string& path) {
  io::Reader r(path);
  if (r.magic() != io::FileKind::boundary)
    throw config_error("expected a boundary data file: " + path);
  BoundaryData bd;
  bd.grid = io::read_grid_header(r);
  bd.gamma_half_width = r.f64();
  const int N = int(r.i64());
  const real k_lo = r.f64();
  const real k_hi = r.f64();
  bd.kgrid = make_wavenumber_grid(k_lo, k_hi, N);
  bd.g.assign(bd.kgrid.count(), std::vector<complex>(bd.grid.size(), complex(0)));
  const Grid3D& g = bd.grid;
  for (auto& gk : bd.g) {
    for (int face = 0; face < 6; ++face) {
      const int axis = face / 2;
      const int side = face % 2;
      const int fixed = side == 0 ? 0 : g.n[axis] - 1;
      auto put = [&](int a, int b, complex v) {
        switch (axis) {
          case 0: gk[g.index(fixed, a, b)] = v; break;
          case 1: gk[g.index(a, fixed, b)] = v; break;
          default: gk[g.index(a, b, fixed)] = v; break;
        }
      };
      const int na = axis == 0 ? g.n[1] : g.n[0];
      const int nb = axis == 2 ? g.n[1] : g.n[2];
      for (int b = 0; b < nb; ++b)
        for (int a = 0; a < na; ++a) {
          const real re = r.f64();
          const real im = r.f64();
          put(a, b, complex(re, im));
        }
    }
  }
  return bd;
}

// ---------------------------------------------------------------------------
// Flat key=value configuration files. '#' starts a comment; keys may repeat
// (each occurrence is kept, in order); values keep their raw token list.
// ---------------------------------------------------------------------------

struct ConfigFile {
  std::vector<std::pair<std::string, std::string>> entries;

  bool has(const std::string& key) const {
    for (const auto& [k, v] : entries)
      if (k == key) return true;
    return false;
  }
  std::string get(const std::string& key, const std::string& fallback) const {
    std::string out = fallback;
    for (const auto& [k, v] : entries)
      if (k == key) out = v;
    return out;
  }
  real get_real(const std::string& key, real fallback) const {
    if (!has(key)) return fallback;
    return parse_real(key, get(key, ""));
  }
  int get_int(const std::string& key, int fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get(key, "");
    try {
      std::size_t pos = 0;
      const int out = std::stoi(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw config_error("config key '" + key + "': expected an integer, got '" + v + "'");
    }
  }
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get(key, "");
    try {
      std::size_t pos = 0;
      const std::uint64_t out = std::stoull(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw config_error("config key '" + key + "': expected an unsigned integer, got '" + v + "'");
    }
  }
  std::vector<real> get_reals(const std::string& key) const {
    std::vector<real> out;
    std::istringstream is(get(key, ""));
    std::string tok;
    while (is >> tok) out.push_back(parse_real(key, tok));
    return out;
  }
  std::vector<std::string> get_all(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries)
      if (k == key) out.push_back(v);
    return out;
  }

  static real parse_real(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      const real out = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw config_error("config key '" + key + "': expected a number, got '" + v + "'");
    }
  }
};

inline ConfigFile parse_config(std::istream& in) {
  ConfigFile cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r\n");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r\n");
      return s.substr(b, e - b + 1);
    };
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    if (key.empty()) throw config_error("config line " + std::to_string(lineno) + ": empty key");
    cfg.entries.emplace_back(key, val);
  }
  return cfg;
}

inline ConfigFile parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  return parse_config(in);
}

}  // namespace phaseless
