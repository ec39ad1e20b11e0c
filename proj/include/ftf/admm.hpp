#pragma once

// Scaled-form ADMM over a list of penalty blocks. With blocks (D, lambda_f) and (Delta, lambda_t)
// each iteration is
//
//   beta  <- (I + rho1 D^T D + rho2 Delta^T Delta)^{-1} (y + rho1 D^T (a1 + u1) + rho2 Delta^T (a2 + u2))
//   a1    <- S_{lambda_f / rho1}(D beta - u1)
//   a2    <- S_{lambda_t / rho2}(Delta beta - u2)
//   u1    <- u1 + a1 - D beta
//   u2    <- u2 + a2 - Delta beta
//
// Positive-part blocks use the one-sided threshold instead of S.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ftf/errors.hpp"
#include "ftf/linear_solvers.hpp"
#include "ftf/operators.hpp"
#include "ftf/prox.hpp"
#include "ftf/solve_result.hpp"
#include "ftf/sparse.hpp"

namespace ftf {

enum class LinearBackend { ConjugateGradient, Factorization };

struct AdmmConfig {
  double rho1 = 1.0;
  double rho2 = 1.0;
  double eps_abs = 1e-3;
  double eps_rel = 1e-3;
  std::size_t max_iter = 10000;
  LinearBackend backend = LinearBackend::ConjugateGradient;
  // Relative residual target of each inner CG solve.
  double cg_tol = 1e-10;

  void validate() const {
    if (!(rho1 > 0.0) || !(rho2 > 0.0)) throw ConstructionError("ADMM: rho must be > 0");
    if (!(eps_abs > 0.0) || !(eps_rel > 0.0)) throw ConstructionError("ADMM: tolerances must be > 0");
    if (!(cg_tol > 0.0)) throw ConstructionError("ADMM: cg_tol must be > 0");
  }
};

struct AdmmState {
  Vector beta;
  std::vector<Vector> alpha;
  std::vector<Vector> u;
};

struct AdmmBlock {
  PenaltySpec penalty;
  double rho;
};

inline SolveResult admm_solve_blocks(std::span<const double> y, std::span<const AdmmBlock> all_blocks,
                                     const AdmmConfig& cfg, const TraceSink& trace = {}) {
  cfg.validate();
  const std::size_t n = y.size();
  std::vector<const AdmmBlock*> blocks;
  for (const auto& b : all_blocks) {
    b.penalty.validate(n);
    if (b.penalty.weight > 0.0 && b.penalty.op.rows() > 0) blocks.push_back(&b);
  }
  std::vector<PenaltySpec> penalties;
  for (const auto* b : blocks) penalties.push_back(b->penalty);

  SpdOperator system(n, 1.0);
  for (const auto* b : blocks) system.add_term(b->rho, b->penalty.op);
  std::optional<Factorization> factor;
  if (cfg.backend == LinearBackend::Factorization && !blocks.empty()) factor = factorize(system);

  const std::size_t k = blocks.size();
  AdmmState st;
  st.beta.assign(y.begin(), y.end());
  for (const auto* b : blocks) {
    st.alpha.emplace_back(b->penalty.op.rows(), 0.0);
    st.u.emplace_back(b->penalty.op.rows(), 0.0);
  }

  std::size_t total_rows = 0;
  for (const auto* b : blocks) total_rows += b->penalty.op.rows();

  SolveResult res;
  std::vector<Vector> op_beta(k), alpha_prev(k);
  Vector rhs(n), dual_vec(n), tmp;
  for (std::size_t it = 1; it <= cfg.max_iter; ++it) {
    std::copy(y.begin(), y.end(), rhs.begin());
    for (std::size_t i = 0; i < k; ++i) {
      tmp = st.alpha[i];
      for (std::size_t j = 0; j < tmp.size(); ++j) tmp[j] += st.u[i][j];
      blocks[i]->penalty.op.multiply_transpose(tmp, rhs, blocks[i]->rho, 1.0);
    }
    if (k == 0) {
      st.beta = rhs;
    } else if (factor) {
      st.beta = factor->solve(rhs);
    } else {
      auto cg = conjugate_gradient(system, rhs, st.beta, cfg.cg_tol);
      if (!cg.converged) warn("ADMM: inner CG hit its iteration cap");
      res.inner_iterations += cg.iterations;
      st.beta = std::move(cg.x);
    }

    double r_pri2 = 0.0, op_beta_norm2 = 0.0, alpha_norm2 = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const auto& pen = blocks[i]->penalty;
      const double thresh = pen.weight / blocks[i]->rho;
      op_beta[i] = matvec(pen.op, st.beta);
      alpha_prev[i] = st.alpha[i];
      auto& a = st.alpha[i];
      auto& u = st.u[i];
      for (std::size_t j = 0; j < a.size(); ++j) {
        const double v = op_beta[i][j] - u[j];
        a[j] = pen.kind == PenaltyKind::L1 ? soft_threshold(v, thresh) : positive_part_threshold(v, thresh);
        u[j] += a[j] - op_beta[i][j];
        const double r = op_beta[i][j] - a[j];
        r_pri2 += r * r;
        op_beta_norm2 += op_beta[i][j] * op_beta[i][j];
        alpha_norm2 += a[j] * a[j];
      }
    }

    // s = sum_i rho_i A_i^T (alpha_i - alpha_prev_i); the scaled dual iterate enters eps_dual.
    std::fill(dual_vec.begin(), dual_vec.end(), 0.0);
    Vector dual_u(n, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      tmp = st.alpha[i];
      for (std::size_t j = 0; j < tmp.size(); ++j) tmp[j] -= alpha_prev[i][j];
      blocks[i]->penalty.op.multiply_transpose(tmp, dual_vec, blocks[i]->rho, 1.0);
      blocks[i]->penalty.op.multiply_transpose(st.u[i], dual_u, blocks[i]->rho, 1.0);
    }
    const double r_pri = std::sqrt(r_pri2);
    const double r_dual = norm2(dual_vec);
    const double eps_pri = std::sqrt(static_cast<double>(total_rows)) * cfg.eps_abs +
                           cfg.eps_rel * std::max(std::sqrt(op_beta_norm2), std::sqrt(alpha_norm2));
    const double eps_dual = std::sqrt(static_cast<double>(n)) * cfg.eps_abs + cfg.eps_rel * norm2(dual_u);

    for (double v : st.beta)
      if (!std::isfinite(v)) throw NumericalError("ADMM: non-finite iterate");

    res.iterations = it;
    res.primal_residual = r_pri;
    res.dual_residual = r_dual;
    if (trace) trace({it, r_pri, r_dual, penalized_objective(y, st.beta, penalties)});
    if (r_pri <= eps_pri && r_dual <= eps_dual) {
      res.converged = true;
      break;
    }
  }
  res.beta = std::move(st.beta);
  res.objective = penalized_objective(y, res.beta, penalties);
  return res;
}

// Two-block form: lambda_f ||D beta||_1 + lambda_t ||Delta beta||_1.
inline SolveResult admm_solve(std::span<const double> y, const SparseMatrix& d, const SparseMatrix& delta,
                              double lambda_f, double lambda_t, const AdmmConfig& cfg,
                              const TraceSink& trace = {}) {
  if (lambda_f < 0.0 || lambda_t < 0.0) throw ConstructionError("ADMM: lambda must be >= 0");
  const AdmmBlock blocks[] = {{{d, PenaltyKind::L1, lambda_f}, cfg.rho1},
                              {{delta, PenaltyKind::L1, lambda_t}, cfg.rho2}};
  return admm_solve_blocks(y, blocks, cfg, trace);
}

}  // namespace ftf
