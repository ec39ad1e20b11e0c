#pragma once

// Reference matrices for the 5-chain and the 3x4 lattice (column-major numbering).

#include <cstddef>
#include <vector>

namespace ftf::testing {

using IntMatrix = std::vector<std::vector<int>>;

inline const IntMatrix kChain5Incidence = {
    {1, -1, 0, 0, 0},
    {0, 1, -1, 0, 0},
    {0, 0, 1, -1, 0},
    {0, 0, 0, 1, -1},
};

// As printed; row 12 carries its -1 in column 8 instead of column 9 (1-based).
inline const IntMatrix kLattice34LaplacianPrinted = {
    {2, -1, 0, -1, 0, 0, 0, 0, 0, 0, 0, 0},
    {-1, 3, -1, 0, -1, 0, 0, 0, 0, 0, 0, 0},
    {0, -1, 2, 0, 0, -1, 0, 0, 0, 0, 0, 0},
    {-1, 0, 0, 3, -1, 0, -1, 0, 0, 0, 0, 0},
    {0, -1, 0, -1, 4, -1, 0, -1, 0, 0, 0, 0},
    {0, 0, -1, 0, -1, 3, 0, 0, -1, 0, 0, 0},
    {0, 0, 0, -1, 0, 0, 3, -1, 0, -1, 0, 0},
    {0, 0, 0, 0, -1, 0, -1, 4, -1, 0, -1, 0},
    {0, 0, 0, 0, 0, -1, 0, -1, 3, 0, 0, -1},
    {0, 0, 0, 0, 0, 0, -1, 0, 0, 2, -1, 0},
    {0, 0, 0, 0, 0, 0, 0, -1, 0, -1, 3, -1},
    {0, 0, 0, 0, 0, 0, 0, -1, 0, 0, -1, 2},
};

// The single correction applied to the printed Laplacian: row 12, -1 moved from column 8 to 9.
inline IntMatrix lattice34_laplacian_corrected() {
  IntMatrix l = kLattice34LaplacianPrinted;
  l[11][7] = 0;
  l[11][8] = -1;
  return l;
}

inline const IntMatrix kLattice34Kronecker = {
    {-1, 2, -1, 0, 0, 0, 0, 0, 0, 0, 0, 0},
    {0, 0, 0, -1, 2, -1, 0, 0, 0, 0, 0, 0},
    {0, 0, 0, 0, 0, 0, -1, 2, -1, 0, 0, 0},
    {0, 0, 0, 0, 0, 0, 0, 0, 0, -1, 2, -1},
    {-1, 0, 0, 2, 0, 0, -1, 0, 0, 0, 0, 0},
    {0, -1, 0, 0, 2, 0, 0, -1, 0, 0, 0, 0},
    {0, 0, -1, 0, 0, 2, 0, 0, -1, 0, 0, 0},
    {0, 0, 0, -1, 0, 0, 2, 0, 0, -1, 0, 0},
    {0, 0, 0, 0, -1, 0, 0, 2, 0, 0, -1, 0},
    {0, 0, 0, 0, 0, -1, 0, 0, 2, 0, 0, -1},
};

inline bool is_symmetric(const IntMatrix& m) {
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j)
      if (m[i][j] != m[j][i]) return false;
  return true;
}

// Exact entrywise comparison of a sparse matrix against an integer table.
template <class Sparse>
bool equals_exactly(const Sparse& a, const IntMatrix& expected) {
  if (a.rows() != expected.size()) return false;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (a.cols() != expected[i].size()) return false;
    for (std::size_t j = 0; j < expected[i].size(); ++j)
      if (a.coeff(i, j) != static_cast<double>(expected[i][j])) return false;
  }
  return true;
}

}  // namespace ftf::testing
