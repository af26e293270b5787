#pragma once

#include <sys/stat.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "phaseless/forward.hpp"
#include "phaseless/grid.hpp"
#include "phaseless/inversion.hpp"
#include "phaseless/io.hpp"
#include "phaseless/medium.hpp"
#include "phaseless/metrics.hpp"
#include "phaseless/propagation.hpp"
#include "phaseless/retrieval.hpp"
#include "phaseless/sensing.hpp"
#include "phaseless/types.hpp"

namespace phaseless {

/// Everything a pipeline run needs, read from a flat key=value config file.
struct PipelineConfig {
  // geometry
  Box3 omega{{-2.5, -2.5, -4.0}, {2.5, 2.5, 1.0}};
  int omega_n = 51;
  std::vector<Inclusion> inclusions;
  real meas_half_width = 5.0;
  real meas_x3 = 2.5;
  int meas_n = 100;
  real prop_x3 = 1.0;
  real gamma_half_width = 2.5;
  // acquisition and inversion wavenumber grids
  real acq_k_lo = 80.0, acq_k_hi = 85.0;
  int acq_k_intervals = 50;
  real shift_k_lo = 20.4, shift_k_hi = 21.0;
  int inversion_stages = 6;
  // noise
  real noise_level = 0.05;
  std::uint64_t seed = 7919;
  // retrieval
  real retrieval_eps = 0.03;
  // forward solver
  real forward_tol = 1e-8;
  int forward_max_iter = 2000;
  int forward_restart = 50;
  // simulation solve grid (auto-fitted around the inclusions)
  real sim_points_per_wavelength = 4.5;
  real sim_margin = 0.15;
  int sim_max_n = 192;
  // inversion
  int inner_iters = 3;
  real c_max = 10.0;
  real tol_stop = 1e-3;
  int boundary_buffer_cells = 4;
  bool upwind = true;
  real tail_threshold = 0.02;
  real elliptic_tol = 1e-8;
  int elliptic_max_iter = 50000;
  bool save_snapshots = true;
  // metrics
  real support_threshold = 1.2;
  // output
  std::string out_dir = "out";
  bool verbose = false;

  Grid3D omega_grid() const {
    return make_grid(omega, {omega_n, omega_n, omega_n});
  }
  WavenumberGrid acquisition_grid() const {
    return make_wavenumber_grid(acq_k_lo, acq_k_hi, acq_k_intervals);
  }
  WavenumberGrid inversion_grid() const {
    return make_wavenumber_grid(shift_k_lo, shift_k_hi, inversion_stages);
  }
  /// Inversion grid extended by one node below k_lo, so the last-stage
  /// boundary difference has both operands.
  WavenumberGrid extended_inversion_grid() const {
    const WavenumberGrid kg = inversion_grid();
    return make_wavenumber_grid(kg.k_lo - kg.step(), kg.k_hi, kg.intervals + 1);
  }
};

inline PipelineConfig load_pipeline_config(const ConfigFile& file) {
  static const std::vector<std::string> known = {
      "omega_lo", "omega_hi", "omega_n", "inclusion", "meas_half_width", "meas_x3",
      "meas_n", "prop_x3", "gamma_half_width", "acq_k_lo", "acq_k_hi",
      "acq_k_intervals", "shift_k_lo", "shift_k_hi", "inversion_stages",
      "noise_level", "seed", "retrieval_eps", "forward_tol", "forward_max_iter",
      "forward_restart", "sim_points_per_wavelength", "sim_margin", "sim_max_n",
      "inner_iters", "c_max", "tol_stop", "boundary_buffer_cells", "upwind",
      "tail_threshold", "elliptic_tol", "elliptic_max_iter", "save_snapshots", "support_threshold",
      "out_dir", "verbose"};
  for (const auto& [k, v] : file.entries) {
    bool ok = false;
    for (const auto& key : known)
      if (k == key) ok = true;
    if (!ok) throw config_error("unknown config key: " + k);
  }

  PipelineConfig cfg;
  if (file.has("omega_lo")) {
    const auto v = file.get_reals("omega_lo");
    if (v.size() != 3) throw config_error("omega_lo needs three numbers");
    cfg.omega.lo = {v[0], v[1], v[2]};
  }
  if (file.has("omega_hi")) {
    const auto v = file.get_reals("omega_hi");
    if (v.size() != 3) throw config_error("omega_hi needs three numbers");
    cfg.omega.hi = {v[0], v[1], v[2]};
  }
  cfg.omega_n = file.get_int("omega_n", cfg.omega_n);
  for (const auto& line : file.get_all("inclusion")) {
    std::istringstream is(line);
    real cx, cy, cz, r, amp = 1.0;
    if (!(is >> cx >> cy >> cz >> r))
      throw config_error("inclusion needs: cx cy cz radius [amplitude]");
    is >> amp;
    cfg.inclusions.push_back({{cx, cy, cz}, r, amp});
  }
  cfg.meas_half_width = file.get_real("meas_half_width", cfg.meas_half_width);
  cfg.meas_x3 = file.get_real("meas_x3", cfg.meas_x3);
  cfg.meas_n = file.get_int("meas_n", cfg.meas_n);
  cfg.prop_x3 = file.get_real("prop_x3", cfg.prop_x3);
  cfg.gamma_half_width = file.get_real("gamma_half_width", cfg.gamma_half_width);
  cfg.acq_k_lo = file.get_real("acq_k_lo", cfg.acq_k_lo);
  cfg.acq_k_hi = file.get_real("acq_k_hi", cfg.acq_k_hi);
  cfg.acq_k_intervals = file.get_int("acq_k_intervals", cfg.acq_k_intervals);
  cfg.shift_k_lo = file.get_real("shift_k_lo", cfg.shift_k_lo);
  cfg.shift_k_hi = file.get_real("shift_k_hi", cfg.shift_k_hi);
  cfg.inversion_stages = file.get_int("inversion_stages", cfg.inversion_stages);
  cfg.noise_level = file.get_real("noise_level", cfg.noise_level);
  cfg.seed = file.get_u64("seed", cfg.seed);
  cfg.retrieval_eps = file.get_real("retrieval_eps", cfg.retrieval_eps);
  cfg.forward_tol = file.get_real("forward_tol", cfg.forward_tol);
  cfg.forward_max_iter = file.get_int("forward_max_iter", cfg.forward_max_iter);
  cfg.forward_restart = file.get_int("forward_restart", cfg.forward_restart);
  cfg.sim_points_per_wavelength =
      file.get_real("sim_points_per_wavelength", cfg.sim_points_per_wavelength);
  cfg.sim_margin = file.get_real("sim_margin", cfg.sim_margin);
  cfg.sim_max_n = file.get_int("sim_max_n", cfg.sim_max_n);
  cfg.inner_iters = file.get_int("inner_iters", cfg.inner_iters);
  cfg.c_max = file.get_real("c_max", cfg.c_max);
  cfg.tol_stop = file.get_real("tol_stop", cfg.tol_stop);
  cfg.boundary_buffer_cells = file.get_int("boundary_buffer_cells", cfg.boundary_buffer_cells);
  cfg.upwind = file.get_int("upwind", cfg.upwind ? 1 : 0) != 0;
  cfg.tail_threshold = file.get_real("tail_threshold", cfg.tail_threshold);
  cfg.elliptic_tol = file.get_real("elliptic_tol", cfg.elliptic_tol);
  cfg.elliptic_max_iter = file.get_int("elliptic_max_iter", cfg.elliptic_max_iter);
  cfg.save_snapshots = file.get_int("save_snapshots", cfg.save_snapshots ? 1 : 0) != 0;
  cfg.support_threshold = file.get_real("support_threshold", cfg.support_threshold);
  cfg.out_dir = file.get("out_dir", cfg.out_dir);

  if (!(cfg.shift_k_hi < cfg.acq_k_hi))
    throw config_error("shifted interval must sit below the acquisition interval "
                       "(shift_k_hi < acq_k_hi)");
  if (!(cfg.prop_x3 > 0) || !(cfg.prop_x3 < cfg.meas_x3))
    throw config_error("propagated plane must satisfy 0 < prop_x3 < meas_x3");
  if (std::abs(cfg.prop_x3 - cfg.omega.hi.z) > 1e-9)
    throw config_error("propagated plane must coincide with the top face of omega");
  return cfg;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  return load_pipeline_config(parse_config_file(path));
}

/// Exclusive lock on the output directory; concurrent invocations writing the
/// same directory are refused.
class OutputLock {
 public:
  explicit OutputLock(const std::string& dir) {
    std::filesystem::create_directories(dir);
    path_ = dir + "/.phaseless.lock";
    FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f)
      throw config_error("output directory is locked by another invocation: " + dir);
    std::fclose(f);
  }
  ~OutputLock() { std::remove(path_.c_str()); }
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::string path_;
};

namespace paths {
inline std::string truth(const PipelineConfig& c) { return c.out_dir + "/c_true.pfd"; }
inline std::string intensity(const PipelineConfig& c) { return c.out_dir + "/intensity.pfd"; }
inline std::string phasemap(const PipelineConfig& c) { return c.out_dir + "/phasemap.pfd"; }
inline std::string boundary(const PipelineConfig& c) { return c.out_dir + "/boundary.pfd"; }
inline std::string estimate(const PipelineConfig& c) { return c.out_dir + "/c_est.pfd"; }
inline std::string diagnostics(const PipelineConfig& c) { return c.out_dir + "/diagnostics.txt"; }
inline std::string metrics(const PipelineConfig& c) { return c.out_dir + "/metrics.txt"; }
}  // namespace paths

/// Solve grid for data synthesis: a tight box around the inclusion supports,
/// resolved at the requested points per effective wavelength at the highest
/// acquisition wavenumber.
inline Grid3D simulation_grid(const PipelineConfig& cfg) {
  if (cfg.inclusions.empty())
    throw config_error("simulate: config defines no inclusions");
  Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
  real c_max = 1.0;
  for (const auto& inc : cfg.inclusions) {
    lo.x = std::min(lo.x, inc.center.x - inc.radius - cfg.sim_margin);
    lo.y = std::min(lo.y, inc.center.y - inc.radius - cfg.sim_margin);
    lo.z = std::min(lo.z, inc.center.z - inc.radius - cfg.sim_margin);
    hi.x = std::max(hi.x, inc.center.x + inc.radius + cfg.sim_margin);
    hi.y = std::max(hi.y, inc.center.y + inc.radius + cfg.sim_margin);
    hi.z = std::max(hi.z, inc.center.z + inc.radius + cfg.sim_margin);
    c_max = std::max(c_max, 1.0 + inc.amplitude);
  }
  const real lambda_eff = 2.0 * pi / (cfg.acq_k_hi * std::sqrt(c_max));
  const real target_h = lambda_eff / cfg.sim_points_per_wavelength;
  std::array<int, 3> n;
  const real ext[3] = {hi.x - lo.x, hi.y - lo.y, hi.z - lo.z};
  for (int a = 0; a < 3; ++a) {
    n[a] = std::max(2, int(std::ceil(ext[a] / target_h)) + 1);
    if (n[a] > cfg.sim_max_n) n[a] = cfg.sim_max_n;
  }
  return make_grid({lo, hi}, n);
}

inline void log_line(const PipelineConfig& cfg, const std::string& msg) {
  if (cfg.verbose) std::cerr << "[phaseless] " << msg << "\n";
}

/// simulate: forward-solve per acquisition wavenumber on the fine solve grid,
/// evaluate |u_sc|^2 on the measurement square, add calibrated noise, write
/// the intensity file (and the truth medium on the omega grid for metrics).
inline void run_simulate(const PipelineConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  const Grid3D omega = cfg.omega_grid();
  write_medium(paths::truth(cfg), build_medium(omega, cfg.inclusions));

  const Grid3D sgrid = simulation_grid(cfg);
  const Medium sim_medium = build_medium(sgrid, cfg.inclusions);
  const WavenumberGrid acq = cfg.acquisition_grid();
  const PlaneSpec plane = make_plane(cfg.meas_half_width, cfg.meas_x3, cfg.meas_n);
  log_line(cfg, "simulate: solve grid " + std::to_string(sgrid.n[0]) + "x" +
                    std::to_string(sgrid.n[1]) + "x" + std::to_string(sgrid.n[2]) +
                    ", " + std::to_string(acq.count()) + " wavenumbers");

  std::vector<PlaneField> fields(acq.count());
  std::exception_ptr failure;
#pragma omp parallel
  {
    ComplexField3D warm;  // per-thread warm start across its contiguous k chunk
#pragma omp for schedule(static)
    for (int j = 0; j < acq.count(); ++j) {
      if (failure) continue;
      try {
        const real k = acq.node(j);
        SolveReport rep;
        ComplexField3D u = solve_lippmann_schwinger(
            sim_medium, k, cfg.forward_tol, cfg.forward_max_iter, cfg.forward_restart,
            &rep, warm.values.empty() ? nullptr : &warm);
        fields[j] = scattered_on_plane(sim_medium, u, plane, k);
        warm = std::move(u);
#pragma omp critical
        log_line(cfg, "simulate: k = " + std::to_string(k) + " done in " +
                          std::to_string(rep.iterations) + " iterations");
      } catch (...) {
#pragma omp critical
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);

  IntensityData data = intensity(fields, acq);
  data = add_noise(data, cfg.noise_level, cfg.seed);
  write_intensity(paths::intensity(cfg), data);
}

inline void run_retrieve(const PipelineConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  const IntensityData data = read_intensity(paths::intensity(cfg));
  const PhaseMap map = retrieve_plane(data, cfg.retrieval_eps);
  write_phase_map(paths::phasemap(cfg), map);
  log_line(cfg, "retrieve: phase map written");
}

inline void run_propagate(const PipelineConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  const PhaseMap map = read_phase_map(paths::phasemap(cfg));
  const WavenumberGrid kext = cfg.extended_inversion_grid();
  std::vector<PlaneField> synth = synthesize_usc(map, kext);
  std::vector<PlaneField> prop(synth.size());
#pragma omp parallel for schedule(static)
  for (int j = 0; j < int(synth.size()); ++j)
    prop[j] = angular_spectrum_propagate(synth[j], cfg.prop_x3);
  const BoundaryData bd =
      assemble_boundary_data(prop, kext, cfg.omega_grid(), cfg.gamma_half_width);
  write_boundary_data(paths::boundary(cfg), bd);
  log_line(cfg, "propagate: boundary data written (" + std::to_string(kext.count()) +
                    " wavenumbers)");
}

inline InversionResult run_invert(const PipelineConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  const BoundaryData bd = read_boundary_data(paths::boundary(cfg));
  InversionConfig icfg;
  icfg.kgrid = cfg.inversion_grid();
  icfg.inner_iters = cfg.inner_iters;
  icfg.c_max = cfg.c_max;
  icfg.tol_stop = cfg.tol_stop;
  icfg.boundary_buffer_cells = cfg.boundary_buffer_cells;
  icfg.upwind = cfg.upwind;
  icfg.tail_threshold = cfg.tail_threshold;
  icfg.elliptic_tol = cfg.elliptic_tol;
  icfg.elliptic_max_iter = cfg.elliptic_max_iter;
  icfg.forward_tol = cfg.forward_tol;
  icfg.forward_max_iter = cfg.forward_max_iter;
  icfg.forward_restart = cfg.forward_restart;
  if (cfg.verbose) icfg.log = [&](const std::string& m) { log_line(cfg, m); };

  InversionResult result = run_inversion(bd, cfg.omega_grid(), icfg);
  write_medium(paths::estimate(cfg), result.coefficient);

  std::ofstream diag(paths::diagnostics(cfg));
  diag << "# stage inner q_iters q_residual fwd_iters fwd_residual max_c c_change\n";
  for (const auto& d : result.diagnostics)
    diag << d.stage << ' ' << d.inner << ' ' << d.q_iterations << ' ' << d.q_residual
         << ' ' << d.forward_iterations << ' ' << d.forward_residual << ' '
         << d.c_max_value << ' ' << d.c_change << '\n';
  diag << "# chosen snapshot " << result.chosen_index << "\n";

  if (cfg.save_snapshots) {
    const Grid3D omega = cfg.omega_grid();
    for (std::size_t s = 0; s < result.c_history.size(); ++s) {
      char name[64];
      std::snprintf(name, sizeof(name), "/c_snap_%03zu.pfd", s);
      write_medium(cfg.out_dir + name, Medium{omega, result.c_history[s]});
    }
  }
  log_line(cfg, "invert: chose snapshot " + std::to_string(result.chosen_index));
  return result;
}

inline Metrics run_metrics(const PipelineConfig& cfg, std::ostream& out) {
  const Medium truth = read_medium(paths::truth(cfg));
  const Medium est = read_medium(paths::estimate(cfg));
  const Metrics m = compute_metrics(truth, est, cfg.support_threshold);

  std::ofstream file(paths::metrics(cfg));
  for (std::ostream* os : {&out, static_cast<std::ostream*>(&file)}) {
    *os << "max_c_true = " << m.max_c_true << "\n";
    *os << "max_c_est = " << m.max_c_est << "\n";
    *os << "contrast_rel_error = " << m.contrast_rel_error
        << "  # |max_est - max_true| / (max_true - 1)\n";
    *os << "max_rel_error = " << m.max_rel_error
        << "  # |max_est - max_true| / max_true\n";
    *os << "true_components = " << m.true_component_count << "\n";
    *os << "estimated_components = " << m.estimated_component_count << "\n";
    for (std::size_t i = 0; i < m.components.size(); ++i) {
      const auto& c = m.components[i];
      *os << "component " << i << ": max_c = " << c.estimated.max_c << ", centroid = ("
          << c.estimated.centroid.x << ", " << c.estimated.centroid.y << ", "
          << c.estimated.centroid.z << "), centroid_error = " << c.centroid_error
          << ", contrast_rel_error = " << c.contrast_rel_error
          << ", max_rel_error = " << c.max_rel_error << "\n";
    }
  }
  return m;
}

/// The whole chain through the same intermediate files the individual stages
/// use, so stage-by-stage and single-shot runs are bit-identical.
inline Metrics run_full_pipeline(const PipelineConfig& cfg, std::ostream& out) {
  run_simulate(cfg);
  run_retrieve(cfg);
  run_propagate(cfg);
  run_invert(cfg);
  return run_metrics(cfg, out);
}

}  // namespace phaseless
