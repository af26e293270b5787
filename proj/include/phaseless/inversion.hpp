#pragma once

#include <functional>
#include <vector>

#include "phaseless/elliptic.hpp"
#include "phaseless/forward.hpp"
#include "phaseless/grid.hpp"
#include "phaseless/medium.hpp"
#include "phaseless/propagation.hpp"
#include "phaseless/types.hpp"

namespace phaseless {

/// Gradient of the tail function and its divergence; the tail itself is never
/// formed.
struct TailGradient {
  Grid3D grid;
  VectorField3 grad;
  std::vector<complex> div;
};

/// Bookkeeping for the frequency cascade: q history, the accumulated
/// Q = h * sum(q_j), the current tail and coefficient estimate.
struct CascadeState {
  int stage = 0;
  std::vector<std::vector<complex>> q_history;
  std::vector<complex> Q;
  TailGradient tail;
  std::vector<real> c_current;

  /// Largest relative deviation between the stored Q and h * sum(q_history).
  real q_bookkeeping_error(real h) const {
    std::vector<complex> sum(Q.size(), complex(0));
    for (const auto& q : q_history)
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += q[i];
    real num = 0, den = 0;
    for (std::size_t i = 0; i < sum.size(); ++i) {
      num += std::norm(Q[i] - h * sum[i]);
      den += std::norm(Q[i]);
    }
    return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
  }
};

struct InversionConfig {
  WavenumberGrid kgrid{20.4, 21.0, 6};
  int inner_iters = 3;
  real c_max = 10.0;
  real tol_stop = 1e-3;
  int boundary_buffer_cells = 4;
  // Centered advection admits an undamped oscillatory mode once k h exceeds
  // ~1 per cell and stalls the Krylov iteration; upwinding confines it to
  // boundary layers that the coefficient buffer absorbs.
  bool upwind = true;
  // Contrast below this is dropped from the medium handed to the tail's
  // forward solve (snapshots keep the raw update). Differencing the scattered
  // field of sub-threshold spurious contrast at coarse grids feeds back into
  // the next update with gain above one and the background solution runs
  // away; truncation pins the vacuum fixed point exactly.
  real tail_threshold = 0.02;
  real elliptic_tol = 1e-8;
  int elliptic_max_iter = 50000;
  real forward_tol = 1e-8;
  int forward_max_iter = 2000;
  int forward_restart = 50;
  std::function<void(const std::string&)> log;  // optional progress sink
};

struct StageDiagnostics {
  int stage = 0, inner = 0;
  int q_iterations = 0;
  real q_residual = 0;
  int forward_iterations = 0;
  real forward_residual = 0;
  real c_max_value = 0;
  real c_change = 0;  // relative L2 change against previous snapshot
};

struct InversionResult {
  Medium coefficient;
  std::vector<std::vector<real>> c_history;
  std::vector<StageDiagnostics> diagnostics;
  int chosen_index = 0;
};

namespace detail {

/// R(x, k_bar) boundary construction for the tail problem: on the Gamma window
/// of the top face the tangential components come from centered one-step
/// principal-log ratios of g (branch-safe), the normal component is the
/// plane-wave value i*k_bar; on the rest of the boundary R = (0, 0, i*k_bar).
inline VectorField3 tail_dirichlet(const BoundaryData& bdata, int knode, real k_bar) {
  const Grid3D& g = bdata.grid;
  const std::vector<complex>& gb = bdata.g[knode];
  VectorField3 R;
  R.resize(g.size());
  const complex ikb(0, k_bar);
  const int n1 = g.n[0], n2 = g.n[1], n3 = g.n[2];

  for (int i3 = 0; i3 < n3; ++i3)
    for (int i2 = 0; i2 < n2; ++i2)
      for (int i1 = 0; i1 < n1; ++i1) {
        if (!g.on_boundary(i1, i2, i3)) continue;
        const std::size_t idx = g.index(i1, i2, i3);
        R.z[idx] = ikb;
        if (i3 != n3 - 1) continue;
        const Vec3 x = g.node(i1, i2, i3);
        if (std::abs(x.x) > bdata.gamma_half_width || std::abs(x.y) > bdata.gamma_half_width)
          continue;
        if (std::abs(gb[idx]) < 1e-12)
          throw numerical_error("init_tail: boundary data vanishes on Gamma");
        auto dlog = [&](std::size_t plus, std::size_t minus, real h) {
          // average of two one-step principal logs; each step's phase change
          // stays below pi for resolvable data
          const complex a = std::log(gb[plus] / gb[idx]);
          const complex b = std::log(gb[idx] / gb[minus]);
          return (a + b) / (2 * h);
        };
        if (i1 > 0 && i1 < n1 - 1)
          R.x[idx] = dlog(g.index(i1 + 1, i2, i3), g.index(i1 - 1, i2, i3), g.spacing.x);
        if (i2 > 0 && i2 < n2 - 1)
          R.y[idx] = dlog(g.index(i1, i2 + 1, i3), g.index(i1, i2 - 1, i3), g.spacing.y);
      }
  return R;
}

}  // namespace detail

/// Initial tail: three discrete Laplace problems, one per component of
/// grad(V), with Dirichlet data R(x, k_bar).
inline TailGradient init_tail(const BoundaryData& bdata, real k_bar,
                              const EllipticOptions& opt = {}) {
  const int knode = bdata.node_index(k_bar);
  if (knode < 0) throw config_error("init_tail: boundary data does not include k_bar");
  for (std::size_t i = 0; i < bdata.g[knode].size(); ++i) {
    const auto idx = bdata.grid.unindex(i);
    if (bdata.grid.on_boundary(idx[0], idx[1], idx[2]) && std::abs(bdata.g[knode][i]) < 1e-12)
      throw numerical_error("init_tail: |g| below 1e-12 on the boundary");
  }

  const VectorField3 R = detail::tail_dirichlet(bdata, knode, k_bar);
  TailGradient tail;
  tail.grid = bdata.grid;
  VectorField3 none;
  none.resize(bdata.grid.size());
  const std::vector<complex> zero(bdata.grid.size(), complex(0));
  tail.grad.x = solve_advection_diffusion(bdata.grid, 1.0, none, zero, R.x, opt);
  tail.grad.y = solve_advection_diffusion(bdata.grid, 1.0, none, zero, R.y, opt);
  tail.grad.z = solve_advection_diffusion(bdata.grid, 1.0, none, zero, R.z, opt);
  tail.div = divergence(bdata.grid, tail.grad);
  return tail;
}

/// Finite-difference logarithmic k-derivative of the boundary data:
/// q_n = (g(., k_n) - g(., k_next)) / (h g(., k_n)) on the boundary nodes.
inline std::vector<complex> boundary_q(const Grid3D& grid, const std::vector<complex>& g_n,
                                       const std::vector<complex>& g_next, real h) {
  std::vector<complex> out(grid.size(), complex(0));
  for (int i3 = 0; i3 < grid.n[2]; ++i3)
    for (int i2 = 0; i2 < grid.n[1]; ++i2)
      for (int i1 = 0; i1 < grid.n[0]; ++i1) {
        if (!grid.on_boundary(i1, i2, i3)) continue;
        const std::size_t idx = grid.index(i1, i2, i3);
        if (std::abs(g_n[idx]) < 1e-12)
          throw numerical_error("boundary_q: vanishing denominator g(x, k_n)");
        out[idx] = (g_n[idx] - g_next[idx]) / (h * g_n[idx]);
      }
  return out;
}

/// One linearized elliptic problem of the cascade:
///   k_n Lap(q) - 2 k_n grad(q).grad(Q_prev) + 2 k_n grad(q).grad(V) =
///     -2 Lap(Q_prev) + 2 div(grad V) + 2 (grad V - grad Q_prev)^2
/// with Dirichlet data q_dirichlet. The full grad(q).grad(V) coupling is kept.
inline std::vector<complex> solve_q_bvp(const Grid3D& grid, real k_n,
                                        const std::vector<complex>& Q_prev,
                                        const TailGradient& tail,
                                        const std::vector<complex>& q_dirichlet,
                                        const EllipticOptions& opt = {},
                                        KrylovReport* report = nullptr,
                                        const std::vector<complex>* initial_guess = nullptr) {
  const std::size_t total = grid.size();
  const VectorField3 gQ = gradient(grid, Q_prev);
  const std::vector<complex> lapQ = laplacian7(grid, Q_prev);

  VectorField3 b;
  b.resize(total);
  std::vector<complex> rhs(total);
  for (std::size_t i = 0; i < total; ++i) {
    const complex dx = tail.grad.x[i] - gQ.x[i];
    const complex dy = tail.grad.y[i] - gQ.y[i];
    const complex dz = tail.grad.z[i] - gQ.z[i];
    b.x[i] = 2.0 * k_n * dx;
    b.y[i] = 2.0 * k_n * dy;
    b.z[i] = 2.0 * k_n * dz;
    rhs[i] = -2.0 * lapQ[i] + 2.0 * tail.div[i] + 2.0 * (dx * dx + dy * dy + dz * dz);
  }
  return solve_advection_diffusion(grid, k_n, b, rhs, q_dirichlet, opt, report,
                                   initial_guess);
}

/// Coefficient update: assemble grad(v) and Lap(v) from the cascade formula
///   grad(v) = -(h grad(q_n) + grad(Q_prev)) + grad(V),
/// evaluate c = -Re(Lap v + (grad v)^2) / k_stage^2, clamp to [1, c_max] and
/// force c = 1 in a buffer of grid cells along the boundary.
///
/// Lap(q_n) is taken from the solved elliptic equation,
///   Lap(q) = (rhs - b.grad(q)) / k_stage,
/// with the advection evaluated by the same stencil the solver used. The
/// boundary-data mismatch of the cascade puts sub-grid layers on q whose raw
/// second differences would contaminate c near the buffer; through the
/// equation their leading-order contribution cancels identically.
inline std::vector<real> update_coefficient(const Grid3D& grid,
                                            const std::vector<complex>& q_n,
                                            const std::vector<complex>& Q_prev,
                                            const TailGradient& tail, real k_stage,
                                            real h, real c_max, int buffer_cells,
                                            bool upwind = true) {
  const std::size_t total = grid.size();
  const VectorField3 gq = gradient(grid, q_n);
  const VectorField3 gQ = gradient(grid, Q_prev);
  const std::vector<complex> lap_Q = laplacian7(grid, Q_prev);

  VectorField3 b;
  b.resize(total);
  std::vector<complex> rhs(total);
  for (std::size_t i = 0; i < total; ++i) {
    const complex dx = tail.grad.x[i] - gQ.x[i];
    const complex dy = tail.grad.y[i] - gQ.y[i];
    const complex dz = tail.grad.z[i] - gQ.z[i];
    b.x[i] = 2.0 * k_stage * dx;
    b.y[i] = 2.0 * k_stage * dy;
    b.z[i] = 2.0 * k_stage * dz;
    rhs[i] = -2.0 * lap_Q[i] + 2.0 * tail.div[i] + 2.0 * (dx * dx + dy * dy + dz * dz);
  }
  const std::vector<complex> bgq = advection_apply(grid, b, q_n, upwind);

  std::vector<real> c(total, 1.0);
  const real k2 = k_stage * k_stage;
  for (int i3 = 0; i3 < grid.n[2]; ++i3)
    for (int i2 = 0; i2 < grid.n[1]; ++i2)
      for (int i1 = 0; i1 < grid.n[0]; ++i1) {
        const int d1 = std::min(i1, grid.n[0] - 1 - i1);
        const int d2 = std::min(i2, grid.n[1] - 1 - i2);
        const int d3 = std::min(i3, grid.n[2] - 1 - i3);
        if (std::min({d1, d2, d3}) < buffer_cells) continue;
        const std::size_t i = grid.index(i1, i2, i3);
        const complex vx = -(h * gq.x[i] + gQ.x[i]) + tail.grad.x[i];
        const complex vy = -(h * gq.y[i] + gQ.y[i]) + tail.grad.y[i];
        const complex vz = -(h * gq.z[i] + gQ.z[i]) + tail.grad.z[i];
        const complex lap_q = h != 0 ? (rhs[i] - bgq[i]) / k_stage : complex(0);
        const complex lap_v = -(h * lap_q + lap_Q[i]) + tail.div[i];
        const real raw = -(lap_v + vx * vx + vy * vy + vz * vz).real() / k2;
        c[i] = std::clamp(raw, 1.0, c_max);
      }
  return c;
}

/// Tail update from a total field: grad(V) = grad(u)/u and its divergence.
/// The differences are taken on the carrier-factored field w = u e^{-i k x3}
/// (grad(u)/u = i k e3 + grad(w)/w), which is exact in vacuum and avoids
/// differencing the e^{ikx3} oscillation on coarse grids.
inline TailGradient tail_from_field(const ComplexField3D& u, real k_bar) {
  const Grid3D& grid = u.grid;
  std::vector<complex> w(grid.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const real az = std::abs(u.values[i]);
    if (az < 1e-10) {
      const auto ix = grid.unindex(i);
      throw numerical_error("update_tail: |u| below 1e-10 at node (" +
                            std::to_string(ix[0]) + "," + std::to_string(ix[1]) + "," +
                            std::to_string(ix[2]) + ")");
    }
  }
  for (int i3 = 0; i3 < grid.n[2]; ++i3) {
    const complex carrier = std::polar(1.0, -k_bar * (grid.box.lo.z + i3 * grid.spacing.z));
    const std::size_t base = grid.index(0, 0, i3);
    for (std::size_t i = 0; i < std::size_t(grid.n[0]) * grid.n[1]; ++i)
      w[base + i] = u.values[base + i] * carrier;
  }
  const VectorField3 gw = gradient(grid, w);
  TailGradient tail;
  tail.grid = grid;
  tail.grad.resize(grid.size());
  const complex ikb(0, k_bar);
  for (std::size_t i = 0; i < w.size(); ++i) {
    tail.grad.x[i] = gw.x[i] / w[i];
    tail.grad.y[i] = gw.y[i] / w[i];
    tail.grad.z[i] = ikb + gw.z[i] / w[i];
  }
  tail.div = divergence(grid, tail.grad);
  return tail;
}

/// Forward-solves at k_bar with the current coefficient and returns the tail.
inline TailGradient update_tail(const Medium& c_n, real k_bar, real tol = 1e-8,
                                int max_iter = 2000, int restart = 50,
                                SolveReport* report = nullptr,
                                const ComplexField3D* warm = nullptr,
                                ComplexField3D* field_out = nullptr) {
  ComplexField3D u = solve_lippmann_schwinger(c_n, k_bar, tol, max_iter, restart,
                                              report, warm);
  TailGradient tail = tail_from_field(u, k_bar);
  if (field_out) *field_out = std::move(u);
  return tail;
}

/// Stopping rule: first snapshot whose relative L2 change against its
/// predecessor falls below tol_stop, else the last snapshot.
inline int criterion_of_choice(const std::vector<std::vector<real>>& history,
                               real tol_stop) {
  if (history.empty()) throw config_error("criterion_of_choice: empty history");
  for (std::size_t j = 1; j < history.size(); ++j) {
    real num = 0, den = 0;
    for (std::size_t i = 0; i < history[j].size(); ++i) {
      const real d = history[j][i] - history[j - 1][i];
      num += d * d;
      den += history[j - 1][i] * history[j - 1][i];
    }
    if (std::sqrt(num) <= tol_stop * std::sqrt(den)) return int(j);
  }
  return int(history.size()) - 1;
}

/// The frequency cascade: for each stage n (descending k) run inner_iters
/// rounds of { solve q BVP, update c, forward-solve at k_bar, update tail }.
inline InversionResult run_inversion(const BoundaryData& bdata, const Grid3D& grid,
                                     const InversionConfig& cfg) {
  const WavenumberGrid& kg = cfg.kgrid;
  const real h = kg.step();
  const real k_bar = kg.k_hi;
  const std::size_t total = grid.size();

  // map inversion nodes into the boundary data (which may carry one extra
  // node below k_lo for the last-stage difference)
  std::vector<int> node(kg.count() + 1, -1);
  for (int j = 0; j < kg.count(); ++j) {
    node[j] = bdata.node_index(kg.node(j));
    if (node[j] < 0)
      throw config_error("run_inversion: boundary data does not cover the inversion grid");
  }
  node[kg.count()] = bdata.node_index(kg.k_lo - h);

  EllipticOptions eopt{cfg.elliptic_tol, cfg.elliptic_max_iter, cfg.upwind};

  InversionResult result;
  CascadeState state;
  state.q_history.assign(1, std::vector<complex>(total, complex(0)));  // q_0 = 0
  state.Q.assign(total, complex(0));
  state.tail = init_tail(bdata, k_bar, eopt);
  state.c_current.assign(total, 1.0);

  std::vector<complex> q_candidate(total, complex(0));
  ComplexField3D u_prev;

  for (int n = 1; n <= kg.intervals; ++n) {
    const real k_n = kg.node(n);
    std::vector<complex> qb;
    if (node[n + 1] >= 0) {
      qb = boundary_q(grid, bdata.g[node[n]], bdata.g[node[n + 1]], h);
    } else {
      // no node below k_lo: backward pair (k_{n-1}, k_n) at the last stage
      qb = boundary_q(grid, bdata.g[node[n]], bdata.g[node[n - 1]], -h);
    }
    q_candidate = state.q_history.back();

    for (int i = 1; i <= cfg.inner_iters; ++i) {
      StageDiagnostics diag;
      diag.stage = n;
      diag.inner = i;

      KrylovReport qrep;
      q_candidate = solve_q_bvp(grid, k_n, state.Q, state.tail, qb, eopt, &qrep,
                                &q_candidate);
      diag.q_iterations = qrep.iterations;
      diag.q_residual = qrep.residual;

      std::vector<real> c =
          update_coefficient(grid, q_candidate, state.Q, state.tail, k_n, h, cfg.c_max,
                             cfg.boundary_buffer_cells, cfg.upwind);
      Medium med{grid, c};
      diag.c_max_value = med.max_value();

      Medium tail_medium{grid, c};
      for (real& v : tail_medium.values)
        if (std::abs(v - 1.0) < cfg.tail_threshold) v = 1.0;

      SolveReport frep;
      ComplexField3D u;
      state.tail = update_tail(tail_medium, k_bar, cfg.forward_tol, cfg.forward_max_iter,
                               cfg.forward_restart, &frep,
                               u_prev.values.empty() ? nullptr : &u_prev, &u);
      u_prev = std::move(u);
      diag.forward_iterations = frep.iterations;
      diag.forward_residual = frep.residual;

      if (!result.c_history.empty()) {
        real num = 0, den = 0;
        const auto& prev = result.c_history.back();
        for (std::size_t x = 0; x < total; ++x) {
          const real d = c[x] - prev[x];
          num += d * d;
          den += prev[x] * prev[x];
        }
        diag.c_change = std::sqrt(num / den);
      }
      state.c_current = c;
      result.c_history.push_back(std::move(c));
      result.diagnostics.push_back(diag);
      if (cfg.log)
        cfg.log("stage " + std::to_string(n) + "." + std::to_string(i) +
                ": q iters " + std::to_string(diag.q_iterations) + ", fwd iters " +
                std::to_string(diag.forward_iterations) + ", max c " +
                std::to_string(diag.c_max_value) + ", change " +
                std::to_string(diag.c_change));
    }

    state.stage = n;
    state.q_history.push_back(q_candidate);
    for (std::size_t x = 0; x < total; ++x) state.Q[x] += h * q_candidate[x];
  }

  result.chosen_index = criterion_of_choice(result.c_history, cfg.tol_stop);
  result.coefficient = Medium{grid, result.c_history[result.chosen_index]};
  return result;
}

}  // namespace phaseless
