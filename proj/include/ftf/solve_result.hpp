#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <ostream>
#include <span>

#include "ftf/linear_solvers.hpp"
#include "ftf/operators.hpp"
#include "ftf/prox.hpp"
#include "ftf/sparse.hpp"

namespace ftf {

struct SolveResult {
  Vector beta;
  std::size_t iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double objective = 0.0;
  bool converged = false;
  // Inner linear-solver iterations summed over the run (CG backend only).
  std::size_t inner_iterations = 0;
};

struct TraceRecord {
  std::size_t iter;
  double r_pri;
  double r_dual;
  double objective;
};

using TraceSink = std::function<void(const TraceRecord&)>;

// CSV trace writer with header `iter,r_pri,r_dual,objective`.
class CsvTrace {
 public:
  explicit CsvTrace(std::ostream& os) : os_(&os) { *os_ << "iter,r_pri,r_dual,objective\n"; }

  void operator()(const TraceRecord& r) const {
    *os_ << r.iter << ',' << format_real(r.r_pri) << ',' << format_real(r.r_dual) << ','
         << format_real(r.objective) << '\n';
  }

  TraceSink sink() const {
    return [this](const TraceRecord& r) { (*this)(r); };
  }

 private:
  std::ostream* os_;
};

// 1/2 ||y - beta||^2 + sum_i weight_i * penalty_i(op_i beta).
inline double penalized_objective(std::span<const double> y, std::span<const double> beta,
                                  std::span<const PenaltySpec> blocks) {
  double fit = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) fit += 0.5 * (y[i] - beta[i]) * (y[i] - beta[i]);
  for (const auto& b : blocks) {
    if (b.weight == 0.0 || b.op.rows() == 0) continue;
    Vector v = matvec(b.op, beta);
    fit += b.weight * (b.kind == PenaltyKind::L1 ? l1_norm(v) : positive_part_norm(v));
  }
  return fit;
}

}  // namespace ftf
