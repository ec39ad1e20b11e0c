#pragma once

// Compressed sparse matrices with both row-major and column-major views.
//
// Every matrix stores its entries twice: once in CSR order for A x and once
// in CSC order for A^T x. Both products touch each stored nonzero exactly
// once, which is what the per-iteration cost accounting relies on.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ftf/errors.hpp"

namespace ftf {

using Vector = std::vector<double>;

// Number of stored nonzeros read by sparse products on the calling thread.
inline std::uint64_t& nonzero_touches() {
  thread_local std::uint64_t count = 0;
  return count;
}

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

class SparseMatrix {
 public:
  SparseMatrix() : row_ptr_(1, 0), col_ptr_(1, 0) {}

  // Duplicates are summed and exact zeros (structural or from cancellation) dropped.
  static SparseMatrix from_triplets(std::size_t nrows, std::size_t ncols,
                                    std::span<const Triplet> triplets) {
    for (const auto& t : triplets) {
      if (t.row >= nrows || t.col >= ncols) {
        throw ConstructionError("triplet index (" + std::to_string(t.row) + ", " +
                                std::to_string(t.col) + ") outside " + std::to_string(nrows) +
                                "x" + std::to_string(ncols));
      }
      if (!std::isfinite(t.value)) throw ConstructionError("non-finite triplet value");
    }
    std::vector<Triplet> sorted(triplets.begin(), triplets.end());
    std::sort(sorted.begin(), sorted.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    SparseMatrix m;
    m.nrows_ = nrows;
    m.ncols_ = ncols;
    m.row_ptr_.assign(nrows + 1, 0);
    for (std::size_t k = 0; k < sorted.size();) {
      std::size_t j = k;
      double sum = 0.0;
      while (j < sorted.size() && sorted[j].row == sorted[k].row && sorted[j].col == sorted[k].col) {
        sum += sorted[j].value;
        ++j;
      }
      if (!std::isfinite(sum)) throw ConstructionError("duplicate summation overflowed");
      if (sum != 0.0) {
        m.col_idx_.push_back(sorted[k].col);
        m.values_.push_back(sum);
        ++m.row_ptr_[sorted[k].row + 1];
      }
      k = j;
    }
    std::partial_sum(m.row_ptr_.begin(), m.row_ptr_.end(), m.row_ptr_.begin());
    m.build_transpose_index();
    return m;
  }

  static SparseMatrix identity(std::size_t n) {
    std::vector<Triplet> t;
    t.reserve(n);
    for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
    return from_triplets(n, n, t);
  }

  static SparseMatrix zeros(std::size_t nrows, std::size_t ncols) {
    return from_triplets(nrows, ncols, std::span<const Triplet>{});
  }

  std::size_t rows() const { return nrows_; }
  std::size_t cols() const { return ncols_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const std::size_t> row_indices_of_col(std::size_t j) const {
    return {row_idx_.data() + col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]};
  }
  std::span<const double> col_values(std::size_t j) const {
    return {t_values_.data() + col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]};
  }
  std::span<const std::size_t> col_indices_of_row(std::size_t i) const {
    return {col_idx_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  std::span<const double> row_values(std::size_t i) const {
    return {values_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }

  double coeff(std::size_t i, std::size_t j) const {
    auto cols = col_indices_of_row(i);
    auto it = std::lower_bound(cols.begin(), cols.end(), j);
    if (it == cols.end() || *it != j) return 0.0;
    return values_[row_ptr_[i] + static_cast<std::size_t>(it - cols.begin())];
  }

  // out = alpha * A x + beta * out
  void multiply(std::span<const double> x, std::span<double> out, double alpha = 1.0,
                double beta = 0.0) const {
    detail::require_dims(x.size() == ncols_ && out.size() == nrows_, "matvec: dimension mismatch");
    for (std::size_t i = 0; i < nrows_; ++i) {
      double acc = 0.0;
      for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) acc += values_[p] * x[col_idx_[p]];
      out[i] = alpha * acc + (beta == 0.0 ? 0.0 : beta * out[i]);
    }
    nonzero_touches() += nnz();
  }

  // out = alpha * A^T x + beta * out
  void multiply_transpose(std::span<const double> x, std::span<double> out, double alpha = 1.0,
                          double beta = 0.0) const {
    detail::require_dims(x.size() == nrows_ && out.size() == ncols_,
                         "matvec_transpose: dimension mismatch");
    for (std::size_t j = 0; j < ncols_; ++j) {
      double acc = 0.0;
      for (std::size_t p = col_ptr_[j]; p < col_ptr_[j + 1]; ++p) acc += t_values_[p] * x[row_idx_[p]];
      out[j] = alpha * acc + (beta == 0.0 ? 0.0 : beta * out[j]);
    }
    nonzero_touches() += nnz();
  }

  std::vector<Triplet> triplets() const {
    std::vector<Triplet> t;
    t.reserve(nnz());
    for (std::size_t i = 0; i < nrows_; ++i)
      for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) t.push_back({i, col_idx_[p], values_[p]});
    return t;
  }

  SparseMatrix transposed() const {
    auto t = triplets();
    for (auto& e : t) std::swap(e.row, e.col);
    return from_triplets(ncols_, nrows_, t);
  }

  std::vector<std::vector<double>> to_dense() const {
    std::vector<std::vector<double>> d(nrows_, std::vector<double>(ncols_, 0.0));
    for (const auto& t : triplets()) d[t.row][t.col] = t.value;
    return d;
  }

  Vector row_sums() const {
    Vector s(nrows_, 0.0);
    for (std::size_t i = 0; i < nrows_; ++i)
      for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s[i] += values_[p];
    return s;
  }

  friend bool operator==(const SparseMatrix& a, const SparseMatrix& b) {
    return a.nrows_ == b.nrows_ && a.ncols_ == b.ncols_ && a.row_ptr_ == b.row_ptr_ &&
           a.col_idx_ == b.col_idx_ && a.values_ == b.values_;
  }

 private:
  void build_transpose_index() {
    col_ptr_.assign(ncols_ + 1, 0);
    for (std::size_t c : col_idx_) ++col_ptr_[c + 1];
    std::partial_sum(col_ptr_.begin(), col_ptr_.end(), col_ptr_.begin());
    row_idx_.resize(nnz());
    t_values_.resize(nnz());
    std::vector<std::size_t> next(col_ptr_.begin(), col_ptr_.end() - 1);
    for (std::size_t i = 0; i < nrows_; ++i) {
      for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
        std::size_t q = next[col_idx_[p]]++;
        row_idx_[q] = i;
        t_values_[q] = values_[p];
      }
    }
  }

  std::size_t nrows_ = 0;
  std::size_t ncols_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
  std::vector<std::size_t> col_ptr_;
  std::vector<std::size_t> row_idx_;
  std::vector<double> t_values_;
};

inline SparseMatrix build_sparse(std::size_t nrows, std::size_t ncols,
                                 std::span<const Triplet> triplets) {
  return SparseMatrix::from_triplets(nrows, ncols, triplets);
}

inline Vector matvec(const SparseMatrix& a, std::span<const double> x) {
  Vector out(a.rows());
  a.multiply(x, out);
  return out;
}

inline Vector matvec_transpose(const SparseMatrix& a, std::span<const double> x) {
  Vector out(a.cols());
  a.multiply_transpose(x, out);
  return out;
}

// (A (x) B)[i*p + k, j*q + l] = A[i,j] * B[k,l] for B of shape p x q.
inline SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
  constexpr auto max = std::numeric_limits<std::size_t>::max();
  auto mul_overflows = [](std::size_t x, std::size_t y) { return x != 0 && y > max / x; };
  if (mul_overflows(a.rows(), b.rows()) || mul_overflows(a.cols(), b.cols()) ||
      mul_overflows(a.nnz(), b.nnz())) {
    throw ConstructionError("kron: product dimensions overflow");
  }
  std::vector<Triplet> t;
  t.reserve(a.nnz() * b.nnz());
  for (const auto& ea : a.triplets())
    for (const auto& eb : b.triplets())
      t.push_back({ea.row * b.rows() + eb.row, ea.col * b.cols() + eb.col, ea.value * eb.value});
  return SparseMatrix::from_triplets(a.rows() * b.rows(), a.cols() * b.cols(), t);
}

// Vertical concatenation; block k occupies rows [offset_k, offset_k + rows_k).
inline SparseMatrix vstack(std::span<const SparseMatrix> blocks) {
  if (blocks.empty()) return SparseMatrix{};
  const std::size_t ncols = blocks.front().cols();
  std::size_t nrows = 0;
  std::vector<Triplet> t;
  for (const auto& b : blocks) {
    detail::require_dims(b.cols() == ncols, "stack: mismatched column counts");
    for (auto e : b.triplets()) {
      e.row += nrows;
      t.push_back(e);
    }
    nrows += b.rows();
  }
  return SparseMatrix::from_triplets(nrows, ncols, t);
}

// A * B, sparse times sparse.
inline SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b) {
  detail::require_dims(a.cols() == b.rows(), "multiply: inner dimension mismatch");
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ac = a.col_indices_of_row(i);
    auto av = a.row_values(i);
    for (std::size_t p = 0; p < ac.size(); ++p) {
      auto bc = b.col_indices_of_row(ac[p]);
      auto bv = b.row_values(ac[p]);
      for (std::size_t q = 0; q < bc.size(); ++q) t.push_back({i, bc[q], av[p] * bv[q]});
    }
  }
  return SparseMatrix::from_triplets(a.rows(), b.cols(), t);
}

// A^T A without forming A^T: each row contributes the outer product of its nonzeros.
inline SparseMatrix gram(const SparseMatrix& a, double weight = 1.0) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto c = a.col_indices_of_row(i);
    auto v = a.row_values(i);
    for (std::size_t p = 0; p < c.size(); ++p)
      for (std::size_t q = 0; q < c.size(); ++q) t.push_back({c[p], c[q], weight * v[p] * v[q]});
  }
  return SparseMatrix::from_triplets(a.cols(), a.cols(), t);
}

// A^T diag(w) A, same construction as gram with per-row weights.
inline SparseMatrix weighted_gram(const SparseMatrix& a, std::span<const double> w) {
  detail::require_dims(w.size() == a.rows(), "weighted_gram: weight length must equal rows");
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    if (w[i] == 0.0) continue;
    auto c = a.col_indices_of_row(i);
    auto v = a.row_values(i);
    for (std::size_t p = 0; p < c.size(); ++p)
      for (std::size_t q = 0; q < c.size(); ++q) t.push_back({c[p], c[q], w[i] * v[p] * v[q]});
  }
  return SparseMatrix::from_triplets(a.cols(), a.cols(), t);
}

// Locale-independent shortest-roundtrip-safe decimal with 17 significant digits.
inline std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

// Debug dump: one `row col value` line per stored entry.
inline void dump_triplets(std::ostream& os, const SparseMatrix& a) {
  for (const auto& t : a.triplets()) os << t.row << ' ' << t.col << ' ' << format_real(t.value) << '\n';
}

}  // namespace ftf
