#pragma once

// Public estimator API: fused lasso, nearly-isotonic, general and Kronecker trend filters,
// their fused combinations, the mixed multi-penalty filter and the isotonic limit.
//
// Every estimator has the form
//
//   beta_hat = argmin 1/2 ||y - beta||^2 + sum_i lambda_i * penalty_i(A_i beta)
//
// and is solved either through the box-constrained dual (default) or ADMM.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "ftf/admm.hpp"
#include "ftf/dual.hpp"
#include "ftf/errors.hpp"
#include "ftf/graph.hpp"
#include "ftf/operators.hpp"
#include "ftf/solve_result.hpp"
#include "ftf/sparse.hpp"

namespace ftf {

enum class Engine { Admm, Dual };

struct EstimatorOptions {
  Engine engine = Engine::Dual;
  AdmmConfig admm;
  DualOptions dual;
  TraceSink trace;
};

struct EstimatorRequest {
  Vector y;
  DiGraph graph;
  std::optional<LatticeSpec> lattice;
  double lambda_f = 0.0;
  double lambda_ni = 0.0;
  double lambda_t = 0.0;
  TrendKind trend = TrendKind::General;
  EstimatorOptions options;
};

// Passed to the solve observer after every estimator call.
struct SolveObservation {
  std::string_view estimator;
  std::span<const double> y;
  const SolveResult& result;
  // True when every penalty operator has zero row sums, so sum(beta) must equal sum(y).
  bool sum_preserving;
};

using SolveObserver = std::function<void(const SolveObservation&)>;

namespace detail {

inline SolveObserver& solve_observer() {
  static SolveObserver observer;
  return observer;
}

inline bool zero_row_sums(const SparseMatrix& a) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0, scale = 0.0;
    for (double v : a.row_values(i)) {
      s += v;
      scale = std::max(scale, std::abs(v));
    }
    if (std::abs(s) > 1e-12 * scale) return false;
  }
  return true;
}

inline void check_nonneg(double lambda, const char* name) {
  if (!std::isfinite(lambda) || lambda < 0.0)
    throw ConstructionError(std::string(name) + " must be finite and >= 0");
}

inline void require_dag(const DiGraph& g) {
  if (!validate_dag(g)) throw CyclicGraphError("order graph contains a directed cycle");
}

inline SolveResult finish(std::string_view name, std::span<const double> y,
                          std::span<const PenaltySpec> penalties, SolveResult res) {
  res.objective = penalized_objective(y, res.beta, penalties);
  if (const auto& obs = solve_observer()) {
    bool conserving = true;
    for (const auto& p : penalties)
      if (p.weight > 0.0) conserving = conserving && zero_row_sums(p.op);
    obs({name, y, res, conserving});
  }
  return res;
}

inline SolveResult solve_dual(std::span<const double> y, std::span<const PenaltySpec> penalties,
                              const EstimatorOptions& opt) {
  const auto problem = make_dual_problem(y, penalties);
  auto sol = dual_solve(problem, opt.dual, opt.trace);
  SolveResult res;
  res.beta = std::move(sol.beta);
  res.iterations = sol.iterations;
  res.primal_residual = sol.kkt_residual;
  res.dual_residual = sol.duality_gap;
  res.converged = sol.converged;
  return res;
}

inline SolveResult solve_admm(std::span<const double> y, std::span<const PenaltySpec> penalties,
                              const EstimatorOptions& opt) {
  std::vector<AdmmBlock> blocks;
  for (std::size_t i = 0; i < penalties.size(); ++i)
    blocks.push_back({penalties[i], i == 0 ? opt.admm.rho1 : opt.admm.rho2});
  return admm_solve_blocks(y, blocks, opt.admm, opt.trace);
}

inline SolveResult solve(std::string_view name, std::span<const double> y,
                         std::span<const PenaltySpec> penalties, const EstimatorOptions& opt) {
  for (const auto& p : penalties) p.validate(y.size());
  SolveResult res = opt.engine == Engine::Dual ? solve_dual(y, penalties, opt) : solve_admm(y, penalties, opt);
  return finish(name, y, penalties, std::move(res));
}

// Nearly-isotonic fusion plus an optional trend block. ADMM goes through the reduction
//   NITF(y, l_ni, l_t) = FLTF(y - (l_ni / 2) D^T 1, l_ni / 2, l_t),
// the dual engine solves the positive-part box directly.
inline SolveResult solve_nearly_isotonic(std::string_view name, std::span<const double> y,
                                         const SparseMatrix& d, double lambda_ni,
                                         std::optional<PenaltySpec> trend, const EstimatorOptions& opt) {
  std::vector<PenaltySpec> original{{d, PenaltyKind::PositivePart, lambda_ni}};
  if (trend) original.push_back(*trend);
  if (opt.engine == Engine::Dual || lambda_ni == 0.0) return solve(name, y, original, opt);

  Vector shifted(y.begin(), y.end());
  const Vector ones(d.rows(), 1.0);
  d.multiply_transpose(ones, shifted, -0.5 * lambda_ni, 1.0);
  std::vector<PenaltySpec> reduced{{d, PenaltyKind::L1, 0.5 * lambda_ni}};
  if (trend) reduced.push_back(*trend);
  for (const auto& p : reduced) p.validate(y.size());
  SolveResult res = solve_admm(shifted, reduced, opt);
  return finish(name, y, original, std::move(res));
}

}  // namespace detail

// Installs a process-wide callback run after every estimator solve; returns the previous one.
// Not synchronized: install before starting concurrent solves.
inline SolveObserver set_solve_observer(SolveObserver obs) {
  return std::exchange(detail::solve_observer(), std::move(obs));
}

inline SolveResult fused_lasso(std::span<const double> y, const DiGraph& g, double lambda_f,
                               const EstimatorOptions& opt = {}) {
  detail::check_nonneg(lambda_f, "lambda_f");
  detail::require_dims(y.size() == g.n_vertices(), "fused_lasso: len(y) must equal the vertex count");
  const PenaltySpec p[] = {{incidence_matrix(g), PenaltyKind::L1, lambda_f}};
  return detail::solve("fused_lasso", y, p, opt);
}

inline SolveResult nearly_isotonic(std::span<const double> y, const DiGraph& g, double lambda_ni,
                                   const EstimatorOptions& opt = {}) {
  detail::check_nonneg(lambda_ni, "lambda_ni");
  detail::require_dims(y.size() == g.n_vertices(), "nearly_isotonic: len(y) must equal the vertex count");
  detail::require_dag(g);
  return detail::solve_nearly_isotonic("nearly_isotonic", y, incidence_matrix(g), lambda_ni, std::nullopt, opt);
}

inline SolveResult general_trend_filter(std::span<const double> y, const DiGraph& g, double lambda_t,
                                        const EstimatorOptions& opt = {}) {
  detail::check_nonneg(lambda_t, "lambda_t");
  detail::require_dims(y.size() == g.n_vertices(), "general_trend_filter: len(y) must equal the vertex count");
  const PenaltySpec p[] = {{laplacian(g), PenaltyKind::L1, lambda_t}};
  return detail::solve("general_trend_filter", y, p, opt);
}

inline SolveResult kronecker_trend_filter(std::span<const double> y, const LatticeSpec& lattice, double lambda_t,
                                          const EstimatorOptions& opt = {}) {
  detail::check_nonneg(lambda_t, "lambda_t");
  detail::require_dims(y.size() == lattice.size(), "kronecker_trend_filter: len(y) must equal the lattice size");
  const PenaltySpec p[] = {{kronecker_trend_matrix(lattice), PenaltyKind::L1, lambda_t}};
  return detail::solve("kronecker_trend_filter", y, p, opt);
}

namespace detail {

inline PenaltySpec trend_penalty(const EstimatorRequest& req) {
  return {trend_operator(req.graph, req.lattice, req.trend), PenaltyKind::L1, req.lambda_t};
}

inline void check_request(const EstimatorRequest& req) {
  check_nonneg(req.lambda_f, "lambda_f");
  check_nonneg(req.lambda_ni, "lambda_ni");
  check_nonneg(req.lambda_t, "lambda_t");
  require_dims(req.y.size() == req.graph.n_vertices(), "len(y) must equal the vertex count");
}

}  // namespace detail

// lambda_f ||D beta||_1 + lambda_t ||Delta beta||_1 with Delta = L or K.
inline SolveResult fused_trend_filter(const EstimatorRequest& req) {
  detail::check_request(req);
  if (req.lambda_ni != 0.0) throw ConstructionError("fused_trend_filter: lambda_ni must be 0");
  const PenaltySpec p[] = {{incidence_matrix(req.graph), PenaltyKind::L1, req.lambda_f}, detail::trend_penalty(req)};
  return detail::solve("fused_trend_filter", req.y, p, req.options);
}

// lambda_ni ||D beta||_+ + lambda_t ||Delta beta||_1 with Delta = L or K.
inline SolveResult nearly_isotonic_trend_filter(const EstimatorRequest& req) {
  detail::check_request(req);
  if (req.lambda_f != 0.0) throw ConstructionError("nearly_isotonic_trend_filter: lambda_f must be 0");
  detail::require_dag(req.graph);
  return detail::solve_nearly_isotonic("nearly_isotonic_trend_filter", req.y, incidence_matrix(req.graph),
                                       req.lambda_ni, detail::trend_penalty(req), req.options);
}

// Any number of l1 and positive-part blocks.
inline SolveResult mixed_trend_filter(std::span<const double> y, std::span<const PenaltySpec> blocks,
                                      const EstimatorOptions& opt = {}) {
  for (const auto& b : blocks) b.validate(y.size());
  return detail::solve("mixed_trend_filter", y, blocks, opt);
}

// Isotonic regression on the order graph, as the nearly-isotonic fit at lambda = 1e3 * range(y).
inline SolveResult isotonic_limit(std::span<const double> y, const DiGraph& g, const EstimatorOptions& opt = {}) {
  detail::require_dims(y.size() == g.n_vertices(), "isotonic_limit: len(y) must equal the vertex count");
  detail::require_dag(g);
  double range = 0.0;
  if (!y.empty()) {
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    range = *hi - *lo;
  }
  return detail::solve_nearly_isotonic("isotonic_limit", y, incidence_matrix(g), 1e3 * range, std::nullopt, opt);
}

}  // namespace ftf
