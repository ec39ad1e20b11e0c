#pragma once

// Difference and trend operators, and the penalty blocks built from them.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ftf/errors.hpp"
#include "ftf/graph.hpp"
#include "ftf/sparse.hpp"

namespace ftf {

enum class PenaltyKind { L1, PositivePart };

enum class TrendKind { General, Kronecker };

// One penalty term weight * ||operator * beta|| under the chosen norm.
struct PenaltySpec {
  SparseMatrix op;
  PenaltyKind kind = PenaltyKind::L1;
  double weight = 0.0;

  void validate(std::size_t signal_length) const {
    detail::require_dims(op.cols() == signal_length, "penalty operator columns must equal signal length");
    if (!std::isfinite(weight) || weight < 0.0) throw ConstructionError("penalty weight must be finite and >= 0");
  }
};

// Rows e_i - e_{i+1}; identical to the incidence matrix of chain_graph(n).
inline SparseMatrix first_difference_matrix(std::size_t n) {
  if (n < 2) throw ConstructionError("first_difference_matrix: n must be >= 2");
  return incidence_matrix(chain_graph(n));
}

// Rows e_i - 2 e_{i+1} + e_{i+2}.
inline SparseMatrix second_difference_matrix(std::size_t n) {
  if (n < 3) throw ConstructionError("second_difference_matrix: n must be >= 3");
  std::vector<Triplet> t;
  t.reserve(3 * (n - 2));
  for (std::size_t i = 0; i + 2 < n; ++i) {
    t.push_back({i, i, 1.0});
    t.push_back({i, i + 1, -2.0});
    t.push_back({i, i + 2, 1.0});
  }
  return SparseMatrix::from_triplets(n - 2, n, t);
}

// Per-axis second differences stacked over the lattice, axis 0 block first. Each row carries
// the stencil (-1, 2, -1) along its axis, the sign convention of the reference 3x4 fixture.
// Axes shorter than 3 contribute no rows.
inline SparseMatrix kronecker_trend_matrix(const LatticeSpec& spec) {
  spec.validate();
  std::vector<SparseMatrix> blocks;
  std::size_t before = 1;
  std::size_t after = spec.size();
  for (std::size_t len : spec.dims) {
    after /= len;
    if (len >= 3) {
      auto stencil = second_difference_matrix(len);
      auto neg = stencil.triplets();
      for (auto& e : neg) e.value = -e.value;
      auto block = kron(SparseMatrix::identity(after),
                        kron(SparseMatrix::from_triplets(len - 2, len, neg), SparseMatrix::identity(before)));
      blocks.push_back(std::move(block));
    }
    before *= len;
  }
  if (blocks.empty()) {
    warn("kronecker_trend_matrix: every lattice axis is shorter than 3, operator has no rows");
    return SparseMatrix::zeros(0, spec.size());
  }
  return vstack(blocks);
}

inline SparseMatrix stack_operators(std::span<const SparseMatrix> blocks) {
  if (blocks.empty()) throw DimensionError("stack_operators: no blocks");
  return vstack(blocks);
}

// Laplacian for General, the lattice second-difference stack for Kronecker.
inline SparseMatrix trend_operator(const DiGraph& g, const std::optional<LatticeSpec>& lattice,
                                   TrendKind kind) {
  if (kind == TrendKind::General) return laplacian(g);
  if (!lattice) throw ConstructionError("Kronecker trend filtering requires a lattice spec");
  detail::require_dims(lattice->size() == g.n_vertices(), "lattice size does not match the graph");
  return kronecker_trend_matrix(*lattice);
}

}  // namespace ftf
