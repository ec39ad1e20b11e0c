#pragma once

// Directed graphs encoding partial orders, plus the incidence/Laplacian operators derived from them.

#include <cstddef>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ftf/errors.hpp"
#include "ftf/sparse.hpp"

namespace ftf {

using VertexId = std::size_t;

struct Edge {
  VertexId source;
  VertexId target;
  friend bool operator==(const Edge&, const Edge&) = default;
};

class DiGraph {
 public:
  DiGraph() = default;

  // Rejects out-of-range ids and self-loops; duplicate edges are rejected too.
  DiGraph(std::size_t n_vertices, std::vector<Edge> edges)
      : n_(n_vertices), edges_(std::move(edges)) {
    std::set<std::pair<VertexId, VertexId>> seen;
    for (const auto& e : edges_) {
      if (e.source >= n_ || e.target >= n_)
        throw ConstructionError("edge (" + std::to_string(e.source) + ", " + std::to_string(e.target) +
                                ") references a vertex outside [0, " + std::to_string(n_) + ")");
      if (e.source == e.target) throw ConstructionError("self-loop at vertex " + std::to_string(e.source));
      if (!seen.insert({e.source, e.target}).second)
        throw ConstructionError("duplicate edge (" + std::to_string(e.source) + ", " +
                                std::to_string(e.target) + ")");
    }
  }

  std::size_t n_vertices() const { return n_; }
  std::size_t n_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }

  friend bool operator==(const DiGraph&, const DiGraph&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
};

// Axis lengths of a lattice; dims[0] varies fastest in the vertex numbering (column-major in 2-D).
struct LatticeSpec {
  std::vector<std::size_t> dims;

  LatticeSpec() = default;
  explicit LatticeSpec(std::vector<std::size_t> d) : dims(std::move(d)) { validate(); }
  LatticeSpec(std::size_t n1, std::size_t n2) : dims{n1, n2} { validate(); }

  std::size_t size() const {
    return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>{});
  }

  void validate() const {
    if (dims.empty()) throw ConstructionError("lattice needs at least one dimension");
    for (auto d : dims)
      if (d < 1) throw ConstructionError("lattice dimensions must be >= 1");
  }

  friend bool operator==(const LatticeSpec&, const LatticeSpec&) = default;
};

inline DiGraph chain_graph(std::size_t n) {
  if (n == 0) throw ConstructionError("chain_graph: n must be >= 1");
  std::vector<Edge> edges;
  edges.reserve(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return DiGraph(n, std::move(edges));
}

// Edges point from each vertex to its successor along every axis. Edges of axis 0 come
// first (scanned in vertex order), then axis 1, and so on.
inline DiGraph lattice_graph(const LatticeSpec& spec) {
  spec.validate();
  const std::size_t n = spec.size();
  std::vector<Edge> edges;
  std::size_t stride = 1;
  for (std::size_t axis = 0; axis < spec.dims.size(); ++axis) {
    const std::size_t len = spec.dims[axis];
    for (std::size_t v = 0; v < n; ++v) {
      if ((v / stride) % len + 1 < len) edges.push_back({v, v + stride});
    }
    stride *= len;
  }
  return DiGraph(n, std::move(edges));
}

// Row i holds +1 at the source and -1 at the target of edge i.
inline SparseMatrix incidence_matrix(const DiGraph& g) {
  std::vector<Triplet> t;
  t.reserve(2 * g.n_edges());
  for (std::size_t i = 0; i < g.n_edges(); ++i) {
    t.push_back({i, g.edges()[i].source, 1.0});
    t.push_back({i, g.edges()[i].target, -1.0});
  }
  return SparseMatrix::from_triplets(g.n_edges(), g.n_vertices(), t);
}

inline SparseMatrix laplacian(const DiGraph& g) { return gram(incidence_matrix(g)); }

// True iff the graph has no directed cycle (Kahn's algorithm).
inline bool validate_dag(const DiGraph& g) {
  const std::size_t n = g.n_vertices();
  std::vector<std::size_t> indeg(n, 0), start(n + 1, 0), succ(g.n_edges());
  for (const auto& e : g.edges()) {
    ++indeg[e.target];
    ++start[e.source + 1];
  }
  std::partial_sum(start.begin(), start.end(), start.begin());
  std::vector<std::size_t> fill(start.begin(), start.end() - 1);
  for (const auto& e : g.edges()) succ[fill[e.source]++] = e.target;

  std::vector<std::size_t> ready;
  for (std::size_t v = 0; v < n; ++v)
    if (indeg[v] == 0) ready.push_back(v);
  std::size_t visited = 0;
  while (!ready.empty()) {
    const std::size_t v = ready.back();
    ready.pop_back();
    ++visited;
    for (std::size_t p = start[v]; p < start[v + 1]; ++p)
      if (--indeg[succ[p]] == 0) ready.push_back(succ[p]);
  }
  return visited == n;
}

// Edge-list text: `n_vertices m_edges` then `source target` per line, 0-based.
inline DiGraph read_edge_list(std::istream& is) {
  std::size_t n = 0, m = 0;
  if (!(is >> n >> m)) throw ConstructionError("edge list: missing `n_vertices m_edges` header");
  std::vector<Edge> edges;
  edges.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    long long s = 0, t = 0;
    if (!(is >> s >> t)) throw ConstructionError("edge list: expected " + std::to_string(m) + " edges");
    if (s < 0 || t < 0) throw ConstructionError("edge list: negative vertex id");
    edges.push_back({static_cast<VertexId>(s), static_cast<VertexId>(t)});
  }
  return DiGraph(n, std::move(edges));
}

inline void write_edge_list(std::ostream& os, const DiGraph& g) {
  os << g.n_vertices() << ' ' << g.n_edges() << '\n';
  for (const auto& e : g.edges()) os << e.source << ' ' << e.target << '\n';
}

}  // namespace ftf
