#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "phaseless/grid.hpp"
#include "phaseless/sensing.hpp"
#include "phaseless/types.hpp"

namespace phaseless {

/// Coefficients of the per-pixel linear model; xi1 = alpha^2 when the model is
/// exact. The raw least-squares solution is kept (xi1 may come out negative on
/// noisy data); clamping happens at extraction.
struct FitCoefficients {
  real xi1 = 0, xi2 = 0, xi3 = 0, xi4 = 0;
};

/// Retrieved amplitude and travel time per measurement pixel;
/// tau = alpha + plane.x3 elementwise.
struct PhaseMap {
  PlaneSpec plane;
  std::vector<real> amplitude, tau, alpha;
};

/// Cumulative integrals from k_lo: F1(k) = int_{k_lo}^{k} f, F2(k) = int F1.
/// Series are indexed like the grid (index 0 <-> k_hi, index N <-> k_lo), so
/// F1[N] = F2[N] = 0. Fourth-order per-interval cubic quadrature (one-sided
/// stencils at the ends, trapezoid when fewer than four nodes): the O(h^2)
/// trapezoid bias in F2 would feed a k-scaled phase error into the amplitude
/// extraction.
inline void cumulative_integrals(std::span<const real> fk, const WavenumberGrid& kg,
                                 std::span<real> F1, std::span<real> F2) {
  const int N = kg.intervals;
  if (int(fk.size()) != N + 1 || int(F1.size()) != N + 1 || int(F2.size()) != N + 1)
    throw config_error("cumulative_integrals: series must match the wavenumber grid");
  if (N < 1) throw config_error("cumulative_integrals: need at least 2 nodes");
  const real h = kg.step();

  // integral over the interval between node j+1 (lower k) and node j
  auto accumulate = [&](std::span<const real> f, std::span<real> F) {
    F[N] = 0;
    for (int j = N - 1; j >= 0; --j) {
      real piece;
      if (N < 3) {
        piece = 0.5 * h * (f[j] + f[j + 1]);
      } else if (j == N - 1) {
        piece = h / 24.0 * (9 * f[N] + 19 * f[N - 1] - 5 * f[N - 2] + f[N - 3]);
      } else if (j == 0) {
        piece = h / 24.0 * (f[3] - 5 * f[2] + 19 * f[1] + 9 * f[0]);
      } else {
        piece = h / 24.0 * (-f[j + 2] + 13 * f[j + 1] + 13 * f[j] - f[j - 1]);
      }
      F[j] = F[j + 1] + piece;
    }
  };
  accumulate(fk, F1);
  accumulate(F1, F2);
}

/// Regularized least-squares fit of the four model coefficients:
/// solves (F^T F + eps I) xi = F^T f with rows (-F2, -(k-k_lo)^2, -(k-k_lo), 1),
/// signed so that the recovered vector satisfies xi1 = alpha^2 >= 0 on exact
/// model data.
inline FitCoefficients fit_xi(std::span<const real> F2, std::span<const real> fk,
                              const WavenumberGrid& kg, real eps) {
  if (!(eps > 0)) throw config_error("fit_xi: regularization eps must be positive");
  if (F2.size() != fk.size() || int(fk.size()) != kg.count())
    throw config_error("fit_xi: series must match the wavenumber grid");

  real M[4][4] = {};
  real rhs[4] = {};
  for (int j = 0; j < kg.count(); ++j) {
    const real dk = kg.node(j) - kg.k_lo;
    const real row[4] = {-F2[j], -dk * dk, -dk, 1.0};
    for (int a = 0; a < 4; ++a) {
      rhs[a] += row[a] * fk[j];
      for (int b = a; b < 4; ++b) M[a][b] += row[a] * row[b];
    }
  }
  for (int a = 0; a < 4; ++a) {
    M[a][a] += eps;
    for (int b = 0; b < a; ++b) M[a][b] = M[b][a];
  }

  // Cholesky: M = L L^T (SPD by construction).
  real L[4][4] = {};
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b <= a; ++b) {
      real s = M[a][b];
      for (int c = 0; c < b; ++c) s -= L[a][c] * L[b][c];
      if (a == b) {
        if (!(s > 0)) throw numerical_error("fit_xi: normal matrix lost definiteness");
        L[a][a] = std::sqrt(s);
      } else {
        L[a][b] = s / L[b][b];
      }
    }
  }
  real y[4], xi[4];
  for (int a = 0; a < 4; ++a) {
    real s = rhs[a];
    for (int c = 0; c < a; ++c) s -= L[a][c] * y[c];
    y[a] = s / L[a][a];
  }
  for (int a = 3; a >= 0; --a) {
    real s = y[a];
    for (int c = a + 1; c < 4; ++c) s -= L[c][a] * xi[c];
    xi[a] = s / L[a][a];
  }
  return FitCoefficients{xi[0], xi[1], xi[2], xi[3]};
}

struct PixelRetrieval {
  real alpha = 0, tau = 0, amplitude = 0;
};

/// alpha = Re(sqrt(xi1)) with the non-negative branch (negative xi1 -> 0),
/// tau = alpha + x3. The amplitude formula |cos(k alpha) + sqrt(cos^2 + f - 1)|
/// is evaluated with the complex square root at every node; per node the root
/// consistent with the xi2-implied amplitude sqrt(-2 xi2/xi1 - 1) is kept, and
/// the moduli are averaged.
inline PixelRetrieval extract_alpha_A(const FitCoefficients& xi, std::span<const real> fk,
                                      const WavenumberGrid& kg, real plane_x3) {
  PixelRetrieval out;
  out.alpha = xi.xi1 > 0 ? std::sqrt(xi.xi1) : 0.0;
  out.tau = out.alpha + plane_x3;

  real ref = -1;
  if (xi.xi1 > 0) {
    const real a2 = -2.0 * xi.xi2 / xi.xi1 - 1.0;
    if (a2 > 0) ref = std::sqrt(a2);
  }

  // Nodes near the tangency cos(k alpha) ~ A carry no amplitude information
  // and amplify the alpha error through the square root; weight each node by
  // |cos^2 + f - 1| so they drop out of the average.
  real acc = 0, wsum = 0, plain = 0;
  for (int j = 0; j < kg.count(); ++j) {
    const real c = std::cos(kg.node(j) * out.alpha);
    const real disc = c * c + fk[j] - 1.0;
    const complex s = std::sqrt(complex(disc, 0.0));
    const real plus = std::abs(complex(c, 0) + s);
    const real minus = std::abs(complex(c, 0) - s);
    const real pick = (ref >= 0 && std::abs(minus - ref) < std::abs(plus - ref)) ? minus
                                                                                 : plus;
    const real w = std::abs(disc);
    acc += w * pick;
    wsum += w;
    plain += pick;
  }
  out.amplitude = wsum > 0 ? acc / wsum : plain / kg.count();
  return out;
}

/// Period-spacing estimator: locates consecutive interior local minimizers of
/// the sampled f(.), refines them by parabolic interpolation, and returns
/// 2*pi/|kappa2 - kappa1|. Falls back to maximizers when fewer than two minima
/// exist; an empty optional means the interval does not contain enough extrema.
inline std::optional<real> estimate_alpha_extrema(std::span<const real> fk,
                                                  const WavenumberGrid& kg) {
  const int N = kg.intervals;
  if (int(fk.size()) != N + 1 || N < 2) return std::nullopt;

  auto locate = [&](bool minima) {
    std::vector<real> pos;
    for (int j = 1; j < N; ++j) {
      const bool hit = minima ? (fk[j] < fk[j - 1] && fk[j] < fk[j + 1])
                              : (fk[j] > fk[j - 1] && fk[j] > fk[j + 1]);
      if (!hit) continue;
      // Parabola through the three samples. With t the offset from node(j) in
      // units of +step along ascending k, sample j-1 sits at t = +1 and sample
      // j+1 at t = -1 (the grid index runs against k).
      const real denom = fk[j - 1] - 2 * fk[j] + fk[j + 1];
      real t = 0;
      if (denom != 0) t = 0.5 * (fk[j + 1] - fk[j - 1]) / denom;
      pos.push_back(kg.node(j) + t * kg.step());
    }
    return pos;
  };

  for (bool minima : {true, false}) {
    const auto pos = locate(minima);
    if (pos.size() >= 2) return 2.0 * pi / std::abs(pos[1] - pos[0]);
  }
  return std::nullopt;
}

/// Per-pixel pipeline over the full intensity data set.
inline PhaseMap retrieve_plane(const IntensityData& data, real eps) {
  PhaseMap map;
  map.plane = data.plane;
  const std::size_t npix = data.pixels();
  map.amplitude.resize(npix);
  map.tau.resize(npix);
  map.alpha.resize(npix);
  const int count = data.kgrid.count();

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < std::ptrdiff_t(npix); ++p) {
    std::vector<real> fk(count), F1(count), F2(count);
    for (int j = 0; j < count; ++j) fk[j] = data.values[std::size_t(j) * npix + p];
    cumulative_integrals(fk, data.kgrid, F1, F2);
    const FitCoefficients xi = fit_xi(F2, fk, data.kgrid, eps);
    const PixelRetrieval r = extract_alpha_A(xi, fk, data.kgrid, data.plane.x3);
    map.alpha[p] = r.alpha;
    map.tau[p] = r.tau;
    map.amplitude[p] = r.amplitude;
  }
  return map;
}

/// u_sc(x,k) = A(x) e^{ik tau(x)} - e^{ik x3} for every node of the output
/// grid, which may differ from the acquisition grid (the wavenumber shift).
inline std::vector<PlaneField> synthesize_usc(const PhaseMap& map,
                                              const WavenumberGrid& kgrid_out) {
  std::vector<PlaneField> out(kgrid_out.count());
  for (int j = 0; j < kgrid_out.count(); ++j) {
    const real k = kgrid_out.node(j);
    PlaneField& f = out[j];
    f.plane = map.plane;
    f.k = k;
    f.values.resize(map.plane.size());
    const complex inc = std::polar(1.0, k * map.plane.x3);
    for (std::size_t p = 0; p < f.values.size(); ++p)
      f.values[p] = std::polar(map.amplitude[p], k * map.tau[p]) - inc;
  }
  return out;
}

/// Companion total-field formula u(x,k) = A(x) e^{ik tau(x)}.
inline std::vector<PlaneField> synthesize_total(const PhaseMap& map,
                                                const WavenumberGrid& kgrid_out) {
  std::vector<PlaneField> out(kgrid_out.count());
  for (int j = 0; j < kgrid_out.count(); ++j) {
    const real k = kgrid_out.node(j);
    PlaneField& f = out[j];
    f.plane = map.plane;
    f.k = k;
    f.values.resize(map.plane.size());
    for (std::size_t p = 0; p < f.values.size(); ++p)
      f.values[p] = std::polar(map.amplitude[p], k * map.tau[p]);
  }
  return out;
}

}  // namespace phaseless
