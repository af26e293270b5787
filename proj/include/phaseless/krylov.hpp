#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "phaseless/types.hpp"

namespace phaseless {

struct KrylovOptions {
  real tol = 1e-8;        // relative to ||b||
  int max_iter = 2000;    // total matrix applications
  int restart = 50;       // GMRES only
};

struct KrylovReport {
  bool converged = false;
  int iterations = 0;
  real residual = 0;  // relative
};

namespace blas {

inline complex dot(const std::vector<complex>& a, const std::vector<complex>& b) {
  complex s = 0;
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) s += std::conj(a[i]) * b[i];
  return s;
}

inline real nrm2(const std::vector<complex>& a) {
  real s = 0;
  for (const complex& v : a) s += std::norm(v);
  return std::sqrt(s);
}

inline void axpy(complex alpha, const std::vector<complex>& x, std::vector<complex>& y) {
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace blas

/// Restarted GMRES with modified Gram-Schmidt and Givens rotations.
/// apply(in, out) computes out = A*in; x carries the initial guess.
template <class Op>
KrylovReport gmres(Op&& apply, const std::vector<complex>& b, std::vector<complex>& x,
                   const KrylovOptions& opt = {}) {
  using blas::axpy;
  using blas::dot;
  using blas::nrm2;

  const std::size_t n = b.size();
  const real bnorm = nrm2(b);
  KrylovReport rep;
  if (bnorm == 0) {
    x.assign(n, complex(0));
    rep.converged = true;
    return rep;
  }
  const int m = std::max(1, opt.restart);

  std::vector<std::vector<complex>> V;
  std::vector<complex> H((m + 1) * m, complex(0));
  std::vector<complex> cs(m), sn(m), g(m + 1);
  std::vector<complex> w(n), r(n);

  auto hm = [&](int i, int j) -> complex& { return H[std::size_t(i) * m + j]; };

  int total_iters = 0;
  while (true) {
    apply(x, r);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
    real beta = nrm2(r);
    rep.residual = beta / bnorm;
    if (rep.residual <= opt.tol) {
      rep.converged = true;
      rep.iterations = total_iters;
      return rep;
    }
    if (total_iters >= opt.max_iter) {
      rep.iterations = total_iters;
      return rep;
    }

    V.assign(1, r);
    for (auto& v : V[0]) v /= beta;
    std::fill(g.begin(), g.end(), complex(0));
    g[0] = beta;
    std::fill(H.begin(), H.end(), complex(0));

    int j = 0;
    for (; j < m && total_iters < opt.max_iter; ++j, ++total_iters) {
      apply(V[j], w);
      for (int i = 0; i <= j; ++i) {
        hm(i, j) = dot(V[i], w);
        axpy(-hm(i, j), V[i], w);
      }
      const real hnext = nrm2(w);
      // Givens updates of column j
      for (int i = 0; i < j; ++i) {
        const complex t = std::conj(cs[i]) * hm(i, j) + std::conj(sn[i]) * hm(i + 1, j);
        hm(i + 1, j) = -sn[i] * hm(i, j) + cs[i] * hm(i + 1, j);
        hm(i, j) = t;
      }
      const real rho = std::sqrt(std::norm(hm(j, j)) + hnext * hnext);
      if (rho == 0) break;
      cs[j] = hm(j, j) / rho;
      sn[j] = hnext / rho;
      hm(j, j) = rho;
      g[j + 1] = -sn[j] * g[j];
      g[j] = std::conj(cs[j]) * g[j];
      rep.residual = std::abs(g[j + 1]) / bnorm;

      if (hnext != 0 && rep.residual > opt.tol && j + 1 < m) {
        V.push_back(w);
        for (auto& v : V.back()) v /= hnext;
      } else {
        ++j;
        ++total_iters;
        break;
      }
    }

    // back substitution on the j x j triangular system
    std::vector<complex> y(j);
    for (int i = j - 1; i >= 0; --i) {
      complex s = g[i];
      for (int l = i + 1; l < j; ++l) s -= hm(i, l) * y[l];
      y[i] = s / hm(i, i);
    }
    for (int i = 0; i < j; ++i) axpy(y[i], V[i], x);

    if (rep.residual <= opt.tol || total_iters >= opt.max_iter) {
      apply(x, r);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
      rep.residual = nrm2(r) / bnorm;
      rep.converged = rep.residual <= opt.tol;
      rep.iterations = total_iters;
      if (rep.converged || total_iters >= opt.max_iter) return rep;
    }
  }
}

/// BiCGSTAB with an optional diagonal (Jacobi) right preconditioner.
/// diag_inv may be empty for the unpreconditioned iteration.
template <class Op>
KrylovReport bicgstab(Op&& apply, const std::vector<complex>& b, std::vector<complex>& x,
                      const std::vector<complex>& diag_inv, const KrylovOptions& opt = {}) {
  using blas::dot;
  using blas::nrm2;

  const std::size_t n = b.size();
  const real bnorm = nrm2(b);
  KrylovReport rep;
  if (bnorm == 0) {
    x.assign(n, complex(0));
    rep.converged = true;
    return rep;
  }

  auto precond = [&](const std::vector<complex>& in, std::vector<complex>& out) {
    if (diag_inv.empty())
      out = in;
    else {
      out.resize(n);
      for (std::size_t i = 0; i < n; ++i) out[i] = diag_inv[i] * in[i];
    }
  };

  std::vector<complex> r(n), r0(n), p(n), v(n), s(n), t(n), ph(n), sh(n);
  apply(x, r);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  r0 = r;
  complex rho = 1, alpha = 1, omega = 1;
  p.assign(n, complex(0));
  v.assign(n, complex(0));

  for (int it = 0; it < opt.max_iter; ++it) {
    const complex rho1 = dot(r0, r);
    if (std::abs(rho1) < 1e-300) break;  // breakdown
    if (it == 0) {
      p = r;
    } else {
      const complex beta = (rho1 / rho) * (alpha / omega);
      for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    }
    rho = rho1;
    precond(p, ph);
    apply(ph, v);
    alpha = rho / dot(r0, v);
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    rep.residual = nrm2(s) / bnorm;
    rep.iterations = it + 1;
    if (rep.residual <= opt.tol) {
      for (std::size_t i = 0; i < n; ++i) x[i] += alpha * ph[i];
      rep.converged = true;
      return rep;
    }
    precond(s, sh);
    apply(sh, t);
    const real tt = nrm2(t);
    if (tt == 0) break;
    omega = dot(t, s) / complex(tt * tt, 0);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * ph[i] + omega * sh[i];
      r[i] = s[i] - omega * t[i];
    }
    rep.residual = nrm2(r) / bnorm;
    rep.iterations = it + 1;
    if (rep.residual <= opt.tol) {
      rep.converged = true;
      return rep;
    }
    if (std::abs(omega) < 1e-300) break;
  }
  return rep;
}

}  // namespace phaseless
