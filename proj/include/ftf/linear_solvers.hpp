#pragma once

// The two inner engines behind the ADMM beta-update: conjugate gradient on the
// factored operator, and a sparse LDL^T factorization with a minimum-degree ordering.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <set>
#include <string>
#include <span>
#include <utility>
#include <vector>

#include "ftf/errors.hpp"
#include "ftf/sparse.hpp"

namespace ftf {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

// M = identity_weight * I + sum_i weight_i * A_i^T A_i, applied in factored form.
class SpdOperator {
 public:
  struct Term {
    double weight;
    SparseMatrix matrix;
  };

  SpdOperator(std::size_t n, double identity_weight) : n_(n), identity_weight_(identity_weight) {
    if (!(identity_weight >= 0.0) || !std::isfinite(identity_weight))
      throw ConstructionError("SpdOperator: identity weight must be finite and >= 0");
  }

  SpdOperator& add_term(double weight, SparseMatrix a) {
    if (!(weight >= 0.0) || !std::isfinite(weight))
      throw ConstructionError("SpdOperator: term weight must be finite and >= 0");
    detail::require_dims(a.cols() == n_, "SpdOperator: term column count mismatch");
    std::size_t m = a.rows();
    terms_.push_back({weight, std::move(a)});
    max_rows_ = std::max(max_rows_, m);
    return *this;
  }

  std::size_t size() const { return n_; }
  double identity_weight() const { return identity_weight_; }
  const std::vector<Term>& terms() const { return terms_; }

  // out = M x; scratch must hold at least max_term_rows() values.
  void apply(std::span<const double> x, std::span<double> out, std::span<double> scratch) const {
    detail::require_dims(x.size() == n_ && out.size() == n_, "SpdOperator::apply: dimension mismatch");
    for (std::size_t i = 0; i < n_; ++i) out[i] = identity_weight_ * x[i];
    for (const auto& term : terms_) {
      if (term.weight == 0.0 || term.matrix.rows() == 0) continue;
      auto s = scratch.first(term.matrix.rows());
      term.matrix.multiply(x, s);
      term.matrix.multiply_transpose(s, out, term.weight, 1.0);
    }
  }

  Vector apply(std::span<const double> x) const {
    Vector out(n_), scratch(max_rows_);
    apply(x, out, scratch);
    return out;
  }

  std::size_t max_term_rows() const { return max_rows_; }

  // Explicit sparse M, used only by the factorization path.
  SparseMatrix materialize() const {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n_; ++i)
      if (identity_weight_ != 0.0) t.push_back({i, i, identity_weight_});
    for (const auto& term : terms_) {
      if (term.weight == 0.0) continue;
      for (const auto& e : gram(term.matrix, term.weight).triplets()) t.push_back(e);
    }
    return SparseMatrix::from_triplets(n_, n_, t);
  }

 private:
  std::size_t n_;
  double identity_weight_;
  std::vector<Term> terms_;
  std::size_t max_rows_ = 0;
};

inline constexpr double kResidualFloor = 1e-12;

struct CgResult {
  Vector x;
  std::size_t iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

// Plain CG. Stops when ||M x - b|| / max(||b||, 1e-12) <= tol; max_iter = 0 means 10 n.
inline CgResult conjugate_gradient(const SpdOperator& m, std::span<const double> b,
                                   std::span<const double> x0, double tol,
                                   std::size_t max_iter = 0) {
  const std::size_t n = m.size();
  detail::require_dims(b.size() == n && x0.size() == n, "conjugate_gradient: dimension mismatch");
  if (!(tol > 0.0)) throw ConstructionError("conjugate_gradient: tol must be > 0");
  if (max_iter == 0) max_iter = 10 * std::max<std::size_t>(n, 1);

  CgResult res;
  res.x.assign(x0.begin(), x0.end());
  Vector r(n), p(n), mp(n), scratch(m.max_term_rows());
  m.apply(res.x, mp, scratch);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - mp[i];
  const double denom = std::max(norm2(b), kResidualFloor);
  double rr = dot(r, r);
  res.relative_residual = std::sqrt(rr) / denom;
  if (res.relative_residual <= tol) {
    res.converged = true;
    return res;
  }
  p = r;
  while (res.iterations < max_iter) {
    m.apply(p, mp, scratch);
    const double pmp = dot(p, mp);
    if (!std::isfinite(pmp)) throw NumericalError("conjugate_gradient: non-finite curvature");
    if (pmp <= 0.0) throw NotPositiveDefinite("conjugate_gradient: operator is not positive definite");
    const double alpha = rr / pmp;
    for (std::size_t i = 0; i < n; ++i) {
      res.x[i] += alpha * p[i];
      r[i] -= alpha * mp[i];
    }
    ++res.iterations;
    const double rr_new = dot(r, r);
    if (!std::isfinite(rr_new)) throw NumericalError("conjugate_gradient: non-finite residual");
    res.relative_residual = std::sqrt(rr_new) / denom;
    if (res.relative_residual <= tol) {
      res.converged = true;
      break;
    }
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  return res;
}

// Greedy minimum-degree elimination order on the symmetric pattern of a.
// Ties break toward the smaller vertex id, so the ordering is deterministic.
inline std::vector<std::size_t> minimum_degree_ordering(const SparseMatrix& a) {
  const std::size_t n = a.rows();
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : a.col_indices_of_row(i)) {
      if (j == i) continue;
      adj[i].push_back(j);
      adj[j].push_back(i);
    }
  }
  for (auto& nb : adj) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  std::set<std::pair<std::size_t, std::size_t>> queue;
  for (std::size_t v = 0; v < n; ++v) queue.insert({adj[v].size(), v});

  std::vector<std::size_t> order;
  order.reserve(n);
  std::vector<std::size_t> merged;
  while (!queue.empty()) {
    const std::size_t v = queue.begin()->second;
    queue.erase(queue.begin());
    order.push_back(v);
    const std::vector<std::size_t> clique = std::move(adj[v]);
    adj[v].clear();
    for (std::size_t u : clique) {
      queue.erase({adj[u].size(), u});
      merged.clear();
      std::set_union(adj[u].begin(), adj[u].end(), clique.begin(), clique.end(),
                     std::back_inserter(merged));
      std::erase_if(merged, [&](std::size_t w) { return w == u || w == v; });
      adj[u].swap(merged);
      queue.insert({adj[u].size(), u});
    }
  }
  return order;
}

// P M P^T = L D L^T with unit lower-triangular L (strict part stored).
class Factorization {
 public:
  const std::vector<std::size_t>& permutation() const { return perm_; }
  const SparseMatrix& lower_factor() const { return lower_; }
  const Vector& diagonal() const { return diag_; }
  std::size_t size() const { return perm_.size(); }

  Vector solve(std::span<const double> b) const {
    const std::size_t n = size();
    detail::require_dims(b.size() == n, "solve_factorized: dimension mismatch");
    Vector y(n);
    for (std::size_t k = 0; k < n; ++k) y[k] = b[perm_[k]];
    for (std::size_t j = 0; j < n; ++j) {
      auto rows = lower_.row_indices_of_col(j);
      auto vals = lower_.col_values(j);
      for (std::size_t p = 0; p < rows.size(); ++p) y[rows[p]] -= vals[p] * y[j];
    }
    for (std::size_t j = 0; j < n; ++j) y[j] /= diag_[j];
    for (std::size_t j = n; j-- > 0;) {
      auto rows = lower_.row_indices_of_col(j);
      auto vals = lower_.col_values(j);
      for (std::size_t p = 0; p < rows.size(); ++p) y[j] -= vals[p] * y[rows[p]];
    }
    nonzero_touches() += 2 * lower_.nnz() + n;
    Vector x(n);
    for (std::size_t k = 0; k < n; ++k) x[perm_[k]] = y[k];
    return x;
  }

  // Up-looking LDL^T over the permuted matrix (elimination tree + row patterns).
  static Factorization compute(const SparseMatrix& a) { return compute(a, minimum_degree_ordering(a)); }

  // Same, with a caller-supplied elimination order (e.g. reused across matrices sharing a pattern).
  static Factorization compute(const SparseMatrix& a, std::vector<std::size_t> perm) {
    detail::require_dims(a.rows() == a.cols(), "factorize: matrix must be square");
    detail::require_dims(perm.size() == a.rows(), "factorize: permutation length mismatch");
    const std::size_t n = a.rows();
    Factorization f;
    f.perm_ = std::move(perm);
    std::vector<std::size_t> pinv(n);
    for (std::size_t k = 0; k < n; ++k) pinv[f.perm_[k]] = k;

    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::vector<std::size_t> parent(n, kNone), flag(n), lnz(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
      flag[k] = k;
      for (std::size_t orig : a.row_indices_of_col(f.perm_[k])) {
        std::size_t i = pinv[orig];
        if (i >= k) continue;
        for (; flag[i] != k; i = parent[i]) {
          if (parent[i] == kNone) parent[i] = k;
          ++lnz[i];
          flag[i] = k;
        }
      }
    }
    std::vector<std::size_t> lp(n + 1, 0);
    for (std::size_t k = 0; k < n; ++k) lp[k + 1] = lp[k] + lnz[k];

    std::vector<std::size_t> li(lp[n]), pattern(n);
    Vector lx(lp[n]), y(n, 0.0);
    f.diag_.assign(n, 0.0);
    std::fill(lnz.begin(), lnz.end(), 0);
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t top = n;
      flag[k] = k;
      auto rows = a.row_indices_of_col(f.perm_[k]);
      auto vals = a.col_values(f.perm_[k]);
      for (std::size_t p = 0; p < rows.size(); ++p) {
        std::size_t i = pinv[rows[p]];
        if (i > k) continue;
        y[i] += vals[p];
        std::size_t len = 0;
        for (; flag[i] != k; i = parent[i]) {
          pattern[len++] = i;
          flag[i] = k;
        }
        while (len > 0) pattern[--top] = pattern[--len];
      }
      double dk = y[k];
      y[k] = 0.0;
      for (; top < n; ++top) {
        const std::size_t i = pattern[top];
        const double yi = y[i];
        y[i] = 0.0;
        const std::size_t end = lp[i] + lnz[i];
        for (std::size_t p = lp[i]; p < end; ++p) y[li[p]] -= lx[p] * yi;
        const double lki = yi / f.diag_[i];
        dk -= lki * yi;
        li[end] = k;
        lx[end] = lki;
        ++lnz[i];
      }
      if (!std::isfinite(dk)) throw NumericalError("factorize: non-finite pivot");
      if (dk <= 0.0) throw NotPositiveDefinite("factorize: non-positive pivot at step " + std::to_string(k));
      f.diag_[k] = dk;
    }
    std::vector<Triplet> t;
    t.reserve(lp[n]);
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p = lp[j]; p < lp[j + 1]; ++p) t.push_back({li[p], j, lx[p]});
    f.lower_ = SparseMatrix::from_triplets(n, n, t);
    return f;
  }

 private:
  std::vector<std::size_t> perm_;
  SparseMatrix lower_;
  Vector diag_;
};

inline Factorization factorize(const SpdOperator& m) { return Factorization::compute(m.materialize()); }

inline Vector solve_factorized(const Factorization& f, std::span<const double> b) { return f.solve(b); }

}  // namespace ftf
