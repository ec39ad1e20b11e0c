#pragma once

// Box-constrained dual of the penalized least-squares problem.
//
// For blocks (A_i, [lo_i, hi_i]) the dual is
//
//   min_z 1/2 || y - sum_i A_i^T z_i ||^2   s.t.  lo_i <= z_i <= hi_i,
//
// and the primal estimate is recovered as beta = y - sum_i A_i^T z_i. An l1 penalty with
// weight lambda maps to the box [-lambda, lambda], a positive-part penalty to [0, lambda].
// The solver is a Mehrotra predictor-corrector interior-point method. Each Newton system
// (B B^T + Sigma) dz = r is reduced to the n x n matrix I + B^T Sigma^{-1} B and factorized.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "ftf/errors.hpp"
#include "ftf/linear_solvers.hpp"
#include "ftf/operators.hpp"
#include "ftf/solve_result.hpp"
#include "ftf/sparse.hpp"

namespace ftf {

struct DualBlock {
  SparseMatrix op;
  Vector lower;
  Vector upper;
};

struct BoxedDualProblem {
  Vector y;
  std::vector<DualBlock> blocks;

  void validate() const {
    for (const auto& b : blocks) {
      detail::require_dims(b.op.cols() == y.size(), "dual block operator columns must equal len(y)");
      detail::require_dims(b.lower.size() == b.op.rows() && b.upper.size() == b.op.rows(),
                           "dual block bounds must match operator rows");
      for (std::size_t j = 0; j < b.lower.size(); ++j)
        if (!(b.lower[j] <= b.upper[j])) throw ConstructionError("dual box has lower > upper");
    }
  }
};

struct DualSolution {
  std::vector<Vector> z_blocks;
  Vector beta;
  double kkt_residual = 0.0;
  double duality_gap = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct DualOptions {
  // Target for the projected-gradient residual max_j |z_j - P(z_j - grad_j)|.
  double tol = 1e-9;
  // Interior-point iterations.
  std::size_t max_iter = 200;
  // Fraction of the distance to the boundary taken per step.
  double step_fraction = 0.99;
  double max_weight = 1e8;
  // Iterative-refinement passes per Newton solve.
  std::size_t refinement = 2;
  // Iterations in which neither the residual nor the complementarity halves before giving up.
  std::size_t stall_limit = 8;
};

inline DualBlock box_for(const PenaltySpec& p) {
  const std::size_t m = p.op.rows();
  const double lo = p.kind == PenaltyKind::L1 ? -p.weight : 0.0;
  return {p.op, Vector(m, lo), Vector(m, p.weight)};
}

// Zero-weight and zero-row penalties are dropped; they constrain nothing.
inline BoxedDualProblem make_dual_problem(std::span<const double> y, std::span<const PenaltySpec> penalties) {
  BoxedDualProblem p{Vector(y.begin(), y.end()), {}};
  for (const auto& pen : penalties) {
    pen.validate(y.size());
    if (pen.weight > 0.0 && pen.op.rows() > 0) p.blocks.push_back(box_for(pen));
  }
  return p;
}

// beta = y - sum_i A_i^T z_i, accumulated block by block in order.
inline Vector recover_primal(std::span<const double> y, std::span<const DualBlock> blocks,
                             std::span<const Vector> z) {
  Vector beta(y.begin(), y.end());
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].op.multiply_transpose(z[i], beta, -1.0, 1.0);
  return beta;
}

namespace detail {

// Support function of the box evaluated at v: sum_j max(lo_j v_j, hi_j v_j).
inline double box_support(std::span<const double> v, std::span<const double> lo, std::span<const double> hi) {
  double s = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) s += std::max(lo[j] * v[j], hi[j] * v[j]);
  return s;
}

}  // namespace detail

inline DualSolution dual_solve(const BoxedDualProblem& p, const DualOptions& opt = {},
                               const TraceSink& trace = {}) {
  p.validate();
  const std::size_t n = p.y.size();
  DualSolution sol;

  std::vector<SparseMatrix> ops;
  Vector lo, hi;
  for (const auto& b : p.blocks) {
    ops.push_back(b.op);
    lo.insert(lo.end(), b.lower.begin(), b.lower.end());
    hi.insert(hi.end(), b.upper.begin(), b.upper.end());
  }
  const SparseMatrix bmat = ops.empty() ? SparseMatrix::zeros(0, n) : vstack(ops);
  const std::size_t m = bmat.rows();

  Vector z(m), beta(n), grad(m);
  for (std::size_t j = 0; j < m; ++j) z[j] = 0.5 * (lo[j] + hi[j]);
  auto refresh = [&]() {
    std::copy(p.y.begin(), p.y.end(), beta.begin());
    if (m == 0) return 0.0;
    bmat.multiply_transpose(z, beta, -1.0, 1.0);
    bmat.multiply(beta, grad, -1.0);
    double r = 0.0;
    for (std::size_t j = 0; j < m; ++j) r = std::max(r, std::abs(z[j] - std::clamp(z[j] - grad[j], lo[j], hi[j])));
    return r;
  };
  auto gap = [&]() {
    double fit = 0.0;
    for (std::size_t i = 0; i < n; ++i) fit += 0.5 * (p.y[i] - beta[i]) * (p.y[i] - beta[i]);
    Vector bb(m);
    for (std::size_t j = 0; j < m; ++j) bb[j] = -grad[j];
    return fit + detail::box_support(bb, lo, hi) - 0.5 * (dot(p.y, p.y) - dot(beta, beta));
  };

  std::vector<char> fixed(m);
  std::size_t n_free = 0;
  for (std::size_t j = 0; j < m; ++j) {
    fixed[j] = lo[j] == hi[j];
    n_free += !fixed[j];
  }

  sol.kkt_residual = refresh();
  if (n_free > 0 && sol.kkt_residual > opt.tol) {
    // Multipliers mu_lo, mu_hi for z >= lo and z <= hi; started so that the stationarity
    // residual grad - mu_lo + mu_hi vanishes.
    const double shift = 0.1 * std::max(norm_inf(grad), 1e-8);
    Vector mu_lo(m, 0.0), mu_hi(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      if (fixed[j]) continue;
      mu_lo[j] = std::max(grad[j], 0.0) + shift;
      mu_hi[j] = std::max(-grad[j], 0.0) + shift;
    }
    const auto order = minimum_degree_ordering(SpdOperator(n, 1.0).add_term(1.0, bmat).materialize());
    Vector s_lo(m), s_hi(m), w(m), sigma(m), rd(m), rhs(m), dz(m), dz_aff(m), dlo(m), dhi(m), dlo_aff(m),
        dhi_aff(m), t(n), corr(m);

    double best = sol.kkt_residual;
    double best_comp = std::numeric_limits<double>::infinity();
    std::size_t stalled = 0;
    for (std::size_t it = 1; it <= opt.max_iter; ++it) {
      sol.iterations = it;
      double comp = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        if (fixed[j]) {
          w[j] = 0.0;
          continue;
        }
        s_lo[j] = std::max(z[j] - lo[j], std::numeric_limits<double>::min());
        s_hi[j] = std::max(hi[j] - z[j], std::numeric_limits<double>::min());
        sigma[j] = mu_lo[j] / s_lo[j] + mu_hi[j] / s_hi[j];
        // Capped so that I + B^T W B stays safely factorizable; refinement absorbs the difference.
        w[j] = std::min(1.0 / sigma[j], opt.max_weight);
        rd[j] = grad[j] - mu_lo[j] + mu_hi[j];
        comp += mu_lo[j] * s_lo[j] + mu_hi[j] * s_hi[j];
      }
      const double tau = comp / (2.0 * static_cast<double>(n_free));

      // (B B^T + Sigma) dz = rhs through I + B^T Sigma^{-1} B, plus one refinement pass.
      std::vector<Triplet> tr = weighted_gram(bmat, w).triplets();
      for (std::size_t i = 0; i < n; ++i) tr.push_back({i, i, 1.0});
      const Factorization f = Factorization::compute(SparseMatrix::from_triplets(n, n, tr), order);
      auto woodbury = [&](const Vector& r, Vector& out) {
        for (std::size_t j = 0; j < m; ++j) corr[j] = w[j] * r[j];
        bmat.multiply_transpose(corr, t);
        const Vector v = f.solve(t);
        bmat.multiply(v, out);
        for (std::size_t j = 0; j < m; ++j) out[j] = w[j] * (r[j] - out[j]);
      };
      auto kkt_solve = [&](const Vector& r, Vector& out) {
        woodbury(r, out);
        Vector resid(m), fix(m);
        for (std::size_t pass = 0; pass < opt.refinement; ++pass) {
          bmat.multiply_transpose(out, t);
          bmat.multiply(t, corr);
          for (std::size_t j = 0; j < m; ++j) resid[j] = fixed[j] ? 0.0 : r[j] - corr[j] - sigma[j] * out[j];
          woodbury(resid, fix);
          for (std::size_t j = 0; j < m; ++j) out[j] += fix[j];
        }
      };
      auto max_step = [&](const Vector& d, const Vector& dl, const Vector& dh) {
        double a = 1.0;
        for (std::size_t j = 0; j < m; ++j) {
          if (fixed[j]) continue;
          if (d[j] < 0.0) a = std::min(a, -s_lo[j] / d[j]);
          if (d[j] > 0.0) a = std::min(a, s_hi[j] / d[j]);
          if (dl[j] < 0.0) a = std::min(a, -mu_lo[j] / dl[j]);
          if (dh[j] < 0.0) a = std::min(a, -mu_hi[j] / dh[j]);
        }
        return a;
      };

      // Predictor.
      for (std::size_t j = 0; j < m; ++j) rhs[j] = fixed[j] ? 0.0 : -grad[j];
      kkt_solve(rhs, dz_aff);
      for (std::size_t j = 0; j < m; ++j) {
        if (fixed[j]) continue;
        dlo_aff[j] = -mu_lo[j] - mu_lo[j] * dz_aff[j] / s_lo[j];
        dhi_aff[j] = -mu_hi[j] + mu_hi[j] * dz_aff[j] / s_hi[j];
      }
      const double a_aff = max_step(dz_aff, dlo_aff, dhi_aff);
      double comp_aff = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        if (fixed[j]) continue;
        comp_aff += (mu_lo[j] + a_aff * dlo_aff[j]) * (s_lo[j] + a_aff * dz_aff[j]) +
                    (mu_hi[j] + a_aff * dhi_aff[j]) * (s_hi[j] - a_aff * dz_aff[j]);
      }
      const double ratio = comp_aff / comp;
      const double target = ratio * ratio * ratio * tau;

      // Corrector with the second-order complementarity term.
      Vector q_lo(m), q_hi(m);
      for (std::size_t j = 0; j < m; ++j) {
        if (fixed[j]) {
          rhs[j] = 0.0;
          continue;
        }
        q_lo[j] = target - mu_lo[j] * s_lo[j] - dz_aff[j] * dlo_aff[j];
        q_hi[j] = target - mu_hi[j] * s_hi[j] + dz_aff[j] * dhi_aff[j];
        rhs[j] = -rd[j] + q_lo[j] / s_lo[j] - q_hi[j] / s_hi[j];
      }
      kkt_solve(rhs, dz);
      for (std::size_t j = 0; j < m; ++j) {
        if (fixed[j]) continue;
        dlo[j] = (q_lo[j] - mu_lo[j] * dz[j]) / s_lo[j];
        dhi[j] = (q_hi[j] + mu_hi[j] * dz[j]) / s_hi[j];
      }
      const double a = std::min(1.0, opt.step_fraction * max_step(dz, dlo, dhi));
      for (std::size_t j = 0; j < m; ++j) {
        if (fixed[j]) continue;
        z[j] = std::clamp(z[j] + a * dz[j], lo[j], hi[j]);
        mu_lo[j] += a * dlo[j];
        mu_hi[j] += a * dhi[j];
      }

      sol.kkt_residual = refresh();
      if (!std::isfinite(sol.kkt_residual)) throw NumericalError("dual_solve: non-finite iterate");
      if (trace) {
        const double g = gap();
        trace({it, sol.kkt_residual, g, g + 0.5 * (dot(p.y, p.y) - dot(beta, beta))});
      }
      if (sol.kkt_residual <= opt.tol) break;
      // Stop once rounding keeps both measures from improving.
      double comp_new = 0.0;
      for (std::size_t j = 0; j < m; ++j)
        if (!fixed[j]) comp_new += mu_lo[j] * (z[j] - lo[j]) + mu_hi[j] * (hi[j] - z[j]);
      bool progress = false;
      if (sol.kkt_residual < 0.5 * best) {
        best = sol.kkt_residual;
        progress = true;
      }
      if (comp_new < 0.5 * best_comp) {
        best_comp = comp_new;
        progress = true;
      }
      stalled = progress ? 0 : stalled + 1;
      if (stalled >= opt.stall_limit) break;
    }
  }
  sol.converged = sol.kkt_residual <= opt.tol;

  std::size_t offset = 0;
  for (const auto& b : p.blocks) {
    sol.z_blocks.emplace_back(z.begin() + static_cast<std::ptrdiff_t>(offset),
                              z.begin() + static_cast<std::ptrdiff_t>(offset + b.op.rows()));
    offset += b.op.rows();
  }
  sol.duality_gap = gap();
  sol.beta = recover_primal(p.y, p.blocks, sol.z_blocks);
  return sol;
}

}  // namespace ftf
