#pragma once

#include <sstream>
#include <vector>

#include "phaseless/grid.hpp"
#include "phaseless/krylov.hpp"
#include "phaseless/types.hpp"

namespace phaseless {

struct VectorField3 {
  std::vector<complex> x, y, z;

  void resize(std::size_t n) {
    x.assign(n, complex(0));
    y.assign(n, complex(0));
    z.assign(n, complex(0));
  }
};

/// Centered differences in the interior, one-sided on the boundary.
inline VectorField3 gradient(const Grid3D& g, const std::vector<complex>& f) {
  VectorField3 out;
  out.resize(g.size());
  const int n1 = g.n[0], n2 = g.n[1], n3 = g.n[2];
  const real h1 = g.spacing.x, h2 = g.spacing.y, h3 = g.spacing.z;
  for (int i3 = 0; i3 < n3; ++i3)
    for (int i2 = 0; i2 < n2; ++i2)
      for (int i1 = 0; i1 < n1; ++i1) {
        const std::size_t idx = g.index(i1, i2, i3);
        auto d = [&](int a, int i, int n, real h, auto plus, auto minus) {
          if (i > 0 && i < n - 1) return (plus(1) - minus(1)) / (2 * h);
          if (i == 0) return (plus(1) - f[idx]) / h;
          return (f[idx] - minus(1)) / h;
        };
        out.x[idx] = d(0, i1, n1, h1,
                       [&](int s) { return f[g.index(i1 + s, i2, i3)]; },
                       [&](int s) { return f[g.index(i1 - s, i2, i3)]; });
        out.y[idx] = d(1, i2, n2, h2,
                       [&](int s) { return f[g.index(i1, i2 + s, i3)]; },
                       [&](int s) { return f[g.index(i1, i2 - s, i3)]; });
        out.z[idx] = d(2, i3, n3, h3,
                       [&](int s) { return f[g.index(i1, i2, i3 + s)]; },
                       [&](int s) { return f[g.index(i1, i2, i3 - s)]; });
      }
  return out;
}

inline std::vector<complex> divergence(const Grid3D& g, const VectorField3& v) {
  const VectorField3 gx = gradient(g, v.x);
  const VectorField3 gy = gradient(g, v.y);
  const VectorField3 gz = gradient(g, v.z);
  std::vector<complex> out(g.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gx.x[i] + gy.y[i] + gz.z[i];
  return out;
}

/// 7-point Laplacian; boundary entries are left at zero.
inline std::vector<complex> laplacian7(const Grid3D& g, const std::vector<complex>& f) {
  std::vector<complex> out(g.size(), complex(0));
  const int n1 = g.n[0], n2 = g.n[1], n3 = g.n[2];
  const real w1 = 1.0 / (g.spacing.x * g.spacing.x);
  const real w2 = 1.0 / (g.spacing.y * g.spacing.y);
  const real w3 = 1.0 / (g.spacing.z * g.spacing.z);
  for (int i3 = 1; i3 < n3 - 1; ++i3)
    for (int i2 = 1; i2 < n2 - 1; ++i2)
      for (int i1 = 1; i1 < n1 - 1; ++i1) {
        const std::size_t idx = g.index(i1, i2, i3);
        out[idx] = w1 * (f[idx - 1] + f[idx + 1]) +
                   w2 * (f[g.index(i1, i2 - 1, i3)] + f[g.index(i1, i2 + 1, i3)]) +
                   w3 * (f[g.index(i1, i2, i3 - 1)] + f[g.index(i1, i2, i3 + 1)]) -
                   2.0 * (w1 + w2 + w3) * f[idx];
      }
  return out;
}


namespace detail {
/// Upwind side for a complex advection coefficient: keyed on the dominant
/// real/imaginary component so the stencil side is stable under small
/// perturbations of the subordinate part.
inline bool upwind_minus_side(const complex& bc) {
  return std::abs(bc.real()) >= std::abs(bc.imag()) ? bc.real() >= 0
                                                    : bc.imag() >= 0;
}
}  // namespace detail

struct EllipticOptions {
  real tol = 1e-8;
  int max_iter = 50000;
  bool upwind = false;
};

/// b . grad(q) on interior nodes with the solver's stencil (boundary zero).
inline std::vector<complex> advection_apply(const Grid3D& g, const VectorField3& b,
                                            const std::vector<complex>& q, bool upwind) {
  std::vector<complex> out(g.size(), complex(0));
  const int n1 = g.n[0], n2 = g.n[1], n3 = g.n[2];
  const real h1 = g.spacing.x, h2 = g.spacing.y, h3 = g.spacing.z;
  for (int i3 = 1; i3 < n3 - 1; ++i3)
    for (int i2 = 1; i2 < n2 - 1; ++i2)
      for (int i1 = 1; i1 < n1 - 1; ++i1) {
        const std::size_t idx = g.index(i1, i2, i3);
        const complex qc = q[idx];
        const complex qxm = q[idx - 1], qxp = q[idx + 1];
        const complex qym = q[g.index(i1, i2 - 1, i3)], qyp = q[g.index(i1, i2 + 1, i3)];
        const complex qzm = q[g.index(i1, i2, i3 - 1)], qzp = q[g.index(i1, i2, i3 + 1)];
        if (!upwind) {
          out[idx] = b.x[idx] * (qxp - qxm) / (2 * h1) +
                     b.y[idx] * (qyp - qym) / (2 * h2) +
                     b.z[idx] * (qzp - qzm) / (2 * h3);
        } else {
          auto up = [&](const complex& bc, const complex& qm, const complex& qp, real h) {
            return detail::upwind_minus_side(bc) ? bc * (qc - qm) / h
                                                 : bc * (qp - qc) / h;
          };
          out[idx] = up(b.x[idx], qxm, qxp, h1) + up(b.y[idx], qym, qyp, h2) +
                     up(b.z[idx], qzm, qzp, h3);
        }
      }
  return out;
}

namespace detail {

/// Matrix-free apply of diff_coef * Laplacian + b . grad on interior nodes,
/// identity on boundary nodes (lifted Dirichlet system).
class AdvectionDiffusionOp {
 public:
  AdvectionDiffusionOp(const Grid3D& g, real diff, const VectorField3& b, bool upwind)
      : g_(g), diff_(diff), b_(&b), upwind_(upwind) {}

  void operator()(const std::vector<complex>& q, std::vector<complex>& out) const {
    const int n1 = g_.n[0], n2 = g_.n[1], n3 = g_.n[2];
    const real h1 = g_.spacing.x, h2 = g_.spacing.y, h3 = g_.spacing.z;
    const real w1 = diff_ / (h1 * h1), w2 = diff_ / (h2 * h2), w3 = diff_ / (h3 * h3);
    out.resize(q.size());
#pragma omp parallel for schedule(static)
    for (int i3 = 0; i3 < n3; ++i3)
      for (int i2 = 0; i2 < n2; ++i2)
        for (int i1 = 0; i1 < n1; ++i1) {
          const std::size_t idx = g_.index(i1, i2, i3);
          if (g_.on_boundary(i1, i2, i3)) {
            out[idx] = q[idx];
            continue;
          }
          const complex qc = q[idx];
          const complex qxm = q[idx - 1], qxp = q[idx + 1];
          const complex qym = q[g_.index(i1, i2 - 1, i3)], qyp = q[g_.index(i1, i2 + 1, i3)];
          const complex qzm = q[g_.index(i1, i2, i3 - 1)], qzp = q[g_.index(i1, i2, i3 + 1)];
          complex v = w1 * (qxm + qxp) + w2 * (qym + qyp) + w3 * (qzm + qzp) -
                      2.0 * (w1 + w2 + w3) * qc;
          if (!upwind_) {
            v += b_->x[idx] * (qxp - qxm) / (2 * h1) +
                 b_->y[idx] * (qyp - qym) / (2 * h2) +
                 b_->z[idx] * (qzp - qzm) / (2 * h3);
          } else {
            auto up = [&](const complex& bc, const complex& qm, const complex& qp, real h) {
              return detail::upwind_minus_side(bc) ? bc * (qc - qm) / h
                                                   : bc * (qp - qc) / h;
            };
            v += up(b_->x[idx], qxm, qxp, h1) + up(b_->y[idx], qym, qyp, h2) +
                 up(b_->z[idx], qzm, qzp, h3);
          }
          out[idx] = v;
        }
  }

  complex diagonal(std::size_t idx, const std::array<int, 3>& i) const {
    if (g_.on_boundary(i[0], i[1], i[2])) return complex(1);
    const real h1 = g_.spacing.x, h2 = g_.spacing.y, h3 = g_.spacing.z;
    complex d = -2.0 * diff_ * (1 / (h1 * h1) + 1 / (h2 * h2) + 1 / (h3 * h3));
    if (upwind_) {
      auto dc = [](const complex& bc, real h) {
        return detail::upwind_minus_side(bc) ? bc / h : -bc / h;
      };
      d += dc(b_->x[idx], h1) + dc(b_->y[idx], h2) + dc(b_->z[idx], h3);
    }
    return d;
  }

 private:
  const Grid3D& g_;
  real diff_;
  const VectorField3* b_;
  bool upwind_;
};

}  // namespace detail

/// Solves diff_coef * Laplacian(q) + b . grad(q) = rhs in the interior with
/// q = dirichlet on the boundary (all full-grid arrays). BiCGSTAB with Jacobi
/// preconditioning; initial_guess optional. Throws numerical_error on
/// non-convergence, carrying the final residual.
inline std::vector<complex> solve_advection_diffusion(
    const Grid3D& g, real diff_coef, const VectorField3& b,
    const std::vector<complex>& rhs, const std::vector<complex>& dirichlet,
    const EllipticOptions& opt = {}, KrylovReport* report = nullptr,
    const std::vector<complex>* initial_guess = nullptr) {
  const std::size_t total = g.size();
  detail::AdvectionDiffusionOp A(g, diff_coef, b, opt.upwind);

  std::vector<complex> bvec(total);
  for (int i3 = 0; i3 < g.n[2]; ++i3)
    for (int i2 = 0; i2 < g.n[1]; ++i2)
      for (int i1 = 0; i1 < g.n[0]; ++i1) {
        const std::size_t idx = g.index(i1, i2, i3);
        bvec[idx] = g.on_boundary(i1, i2, i3) ? dirichlet[idx] : rhs[idx];
      }

  std::vector<complex> diag_inv(total);
  for (std::size_t idx = 0; idx < total; ++idx)
    diag_inv[idx] = 1.0 / A.diagonal(idx, g.unindex(idx));

  std::vector<complex> q = initial_guess ? *initial_guess
                                         : std::vector<complex>(total, complex(0));
  // pin boundary values so the lifted rows start consistent
  for (int i3 = 0; i3 < g.n[2]; ++i3)
    for (int i2 = 0; i2 < g.n[1]; ++i2)
      for (int i1 = 0; i1 < g.n[0]; ++i1)
        if (g.on_boundary(i1, i2, i3)) q[g.index(i1, i2, i3)] = dirichlet[g.index(i1, i2, i3)];

  KrylovOptions kopt;
  kopt.tol = opt.tol;
  kopt.max_iter = std::min(opt.max_iter, 3000);
  auto rep = bicgstab(A, bvec, q, diag_inv, kopt);
  kopt.max_iter = opt.max_iter;
  if (!rep.converged) {
    // fall back to restarted GMRES on the Jacobi-scaled system; the scaled
    // norm underweights interior rows, so convergence is judged on the true
    // residual and the scaled tolerance tightened until it holds
    auto scaled = [&](const std::vector<complex>& in, std::vector<complex>& out) {
      A(in, out);
      for (std::size_t i = 0; i < total; ++i) out[i] *= diag_inv[i];
    };
    std::vector<complex> bscaled(total);
    for (std::size_t i = 0; i < total; ++i) bscaled[i] = diag_inv[i] * bvec[i];
    kopt.restart = 120;
    kopt.tol = opt.tol * 0.3;
    std::vector<complex> Aq(total);
    for (int attempt = 0; attempt < 4; ++attempt) {
      rep = gmres(scaled, bscaled, q, kopt);
      A(q, Aq);
      real num = 0, den = 0;
      for (std::size_t i = 0; i < total; ++i) {
        num += std::norm(bvec[i] - Aq[i]);
        den += std::norm(bvec[i]);
      }
      rep.residual = std::sqrt(num / den);
      rep.converged = rep.residual <= opt.tol;
      if (rep.converged || !rep.iterations) break;
      kopt.tol *= 0.05;
    }
  }
  if (report) *report = rep;
  if (!rep.converged) {
    std::ostringstream msg;
    msg << "elliptic solve did not converge: residual " << rep.residual;
    throw numerical_error(msg.str());
  }
  return q;
}

/// Relative interior residual ||diff*Lap(q) + b.grad(q) - rhs|| / ||rhs||,
/// for a posteriori checks.
inline real elliptic_residual(const Grid3D& g, real diff_coef, const VectorField3& b,
                              const std::vector<complex>& rhs,
                              const std::vector<complex>& q, bool upwind = false) {
  detail::AdvectionDiffusionOp A(g, diff_coef, b, upwind);
  std::vector<complex> Aq;
  A(q, Aq);
  real num = 0, den = 0;
  for (int i3 = 1; i3 < g.n[2] - 1; ++i3)
    for (int i2 = 1; i2 < g.n[1] - 1; ++i2)
      for (int i1 = 1; i1 < g.n[0] - 1; ++i1) {
        const std::size_t idx = g.index(i1, i2, i3);
        num += std::norm(Aq[idx] - rhs[idx]);
        den += std::norm(rhs[idx]);
      }
  return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace phaseless
