#pragma once

// Fixed undirected network topologies, their incidence and Laplacian
// matrices, and the Laplacian spectra used by rate and bound formulas.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bqc/dense.hpp"
#include "bqc/rng.hpp"

namespace bqc {

enum class GraphErrorKind { TooFewNodes, NodeOutOfRange, SelfLoop, DuplicateEdge, Disconnected, InfeasibleEdgeCount };

inline const char* to_string(GraphErrorKind k) noexcept {
  switch (k) {
    case GraphErrorKind::TooFewNodes: return "too_few_nodes";
    case GraphErrorKind::NodeOutOfRange: return "node_out_of_range";
    case GraphErrorKind::SelfLoop: return "self_loop";
    case GraphErrorKind::DuplicateEdge: return "duplicate_edge";
    case GraphErrorKind::Disconnected: return "disconnected";
    case GraphErrorKind::InfeasibleEdgeCount: return "infeasible_edge_count";
  }
  return "unknown";
}

class GraphError : public std::invalid_argument {
 public:
  GraphError(GraphErrorKind kind, const std::string& what)
      : std::invalid_argument(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  GraphErrorKind kind() const noexcept { return kind_; }

 private:
  GraphErrorKind kind_;
};

using Edge = std::pair<int, int>;

/// Directed arc `from -> to`. Arc 2e is the (low -> high) direction of edge e,
/// arc 2e+1 the reverse.
struct Arc {
  int from;
  int to;
};

class Graph {
 public:
  /// Validates and canonicalizes: every edge stored as (low, high), edges sorted.
  Graph(int n, std::vector<Edge> edges) : n_(n) {
    if (n < 2) throw GraphError(GraphErrorKind::TooFewNodes, "need at least 2 nodes, got " + std::to_string(n));
    for (auto& [a, b] : edges) {
      if (a < 0 || b < 0 || a >= n || b >= n)
        throw GraphError(GraphErrorKind::NodeOutOfRange,
                         "edge (" + std::to_string(a) + "," + std::to_string(b) + ") outside [0," + std::to_string(n) + ")");
      if (a == b) throw GraphError(GraphErrorKind::SelfLoop, "self-loop at node " + std::to_string(a));
      if (a > b) std::swap(a, b);
    }
    std::sort(edges.begin(), edges.end());
    if (auto it = std::adjacent_find(edges.begin(), edges.end()); it != edges.end())
      throw GraphError(GraphErrorKind::DuplicateEdge,
                       "edge (" + std::to_string(it->first) + "," + std::to_string(it->second) + ") listed twice");
    edges_ = std::move(edges);

    neighbors_.assign(static_cast<std::size_t>(n), {});
    for (const auto& [a, b] : edges_) {
      neighbors_[a].push_back(b);
      neighbors_[b].push_back(a);
    }
    for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());
    if (!connected(n_, neighbors_)) throw GraphError(GraphErrorKind::Disconnected, "graph is not connected");
  }

  int n() const noexcept { return n_; }
  int m() const noexcept { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<int>& neighbors(int i) const noexcept { return neighbors_[i]; }
  int degree(int i) const noexcept { return static_cast<int>(neighbors_[i].size()); }
  int max_degree() const noexcept {
    int d = 0;
    for (int i = 0; i < n_; ++i) d = std::max(d, degree(i));
    return d;
  }

  std::vector<Arc> arcs() const {
    std::vector<Arc> out;
    out.reserve(2 * edges_.size());
    for (const auto& [a, b] : edges_) {
      out.push_back({a, b});
      out.push_back({b, a});
    }
    return out;
  }

  friend bool operator==(const Graph& x, const Graph& y) { return x.n_ == y.n_ && x.edges_ == y.edges_; }

  static bool connected(int n, const std::vector<std::vector<int>>& adj) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v : adj[u])
        if (!seen[v]) {
          seen[v] = 1;
          ++count;
          stack.push_back(v);
        }
    }
    return count == n;
  }

 private:
  int n_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> neighbors_;
};

inline Graph build_graph(int n, std::vector<Edge> edges) { return Graph(n, std::move(edges)); }

enum class GraphFamily { Star, Complete, RandomConnected, Intermediate };

inline const char* to_string(GraphFamily f) noexcept {
  switch (f) {
    case GraphFamily::Star: return "star";
    case GraphFamily::Complete: return "complete";
    case GraphFamily::RandomConnected: return "random_connected";
    case GraphFamily::Intermediate: return "intermediate";
  }
  return "unknown";
}

/// Edge count of the intermediate-density family: ceil((n+2)(n-1)/4).
inline int intermediate_edge_count(int n) { return ((n + 2) * (n - 1) + 3) / 4; }

inline int max_edge_count(int n) { return n * (n - 1) / 2; }

inline Graph star_graph(int n) {
  std::vector<Edge> e;
  for (int i = 1; i < n; ++i) e.emplace_back(0, i);
  return Graph(n, std::move(e));
}

inline Graph complete_graph(int n) {
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return Graph(n, std::move(e));
}

/// Start from the complete graph and delete uniformly chosen edges, redrawing
/// whenever a deletion would disconnect the graph, until `m` edges remain.
inline Graph random_connected_graph(int n, int m, Xoshiro256pp& rng) {
  if (n < 2) throw GraphError(GraphErrorKind::TooFewNodes, "need at least 2 nodes, got " + std::to_string(n));
  if (m < n - 1 || m > max_edge_count(n))
    throw GraphError(GraphErrorKind::InfeasibleEdgeCount,
                     "m=" + std::to_string(m) + " outside [" + std::to_string(n - 1) + "," + std::to_string(max_edge_count(n)) + "]");

  std::vector<Edge> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  auto erase_from = [](std::vector<int>& v, int x) { v.erase(std::find(v.begin(), v.end(), x)); };

  while (static_cast<int>(edges.size()) > m) {
    const auto idx = static_cast<std::size_t>(rng.uniform_index(edges.size()));
    const auto [a, b] = edges[idx];
    erase_from(adj[a], b);
    erase_from(adj[b], a);
    if (Graph::connected(n, adj)) {
      edges[idx] = edges.back();
      edges.pop_back();
    } else {
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
  }
  return Graph(n, std::move(edges));
}

struct GraphSpec {
  GraphFamily family = GraphFamily::Star;
  int n = 2;
  int m = 0;  // RandomConnected only
};

inline int edge_count(const GraphSpec& s) {
  switch (s.family) {
    case GraphFamily::Star: return s.n - 1;
    case GraphFamily::Complete: return max_edge_count(s.n);
    case GraphFamily::RandomConnected: return s.m;
    case GraphFamily::Intermediate: return intermediate_edge_count(s.n);
  }
  return 0;
}

/// Deterministic given the generator state; star and complete consume no draws.
inline Graph generate(const GraphSpec& s, Xoshiro256pp& rng) {
  switch (s.family) {
    case GraphFamily::Star: return star_graph(s.n);
    case GraphFamily::Complete: return complete_graph(s.n);
    case GraphFamily::RandomConnected: return random_connected_graph(s.n, s.m, rng);
    case GraphFamily::Intermediate: return random_connected_graph(s.n, intermediate_edge_count(s.n), rng);
  }
  throw std::logic_error("unhandled graph family");
}

struct GraphMatrices {
  Matrix m_minus;  // n x 2m oriented incidence
  Matrix m_plus;   // n x 2m unoriented incidence
  Matrix l_minus;  // signed Laplacian
  Matrix l_plus;   // signless Laplacian
  Matrix degree;   // W
};

inline GraphMatrices matrices(const Graph& g) {
  const auto n = static_cast<std::size_t>(g.n());
  const auto arcs = g.arcs();
  GraphMatrices out{Matrix(n, arcs.size()), Matrix(n, arcs.size()), Matrix(n, n), Matrix(n, n), Matrix(n, n)};
  for (std::size_t l = 0; l < arcs.size(); ++l) {
    out.m_minus(arcs[l].from, l) = 1.0;
    out.m_minus(arcs[l].to, l) = -1.0;
    out.m_plus(arcs[l].from, l) = 1.0;
    out.m_plus(arcs[l].to, l) = 1.0;
  }
  for (int i = 0; i < g.n(); ++i) {
    out.degree(i, i) = g.degree(i);
    out.l_minus(i, i) = g.degree(i);
    out.l_plus(i, i) = g.degree(i);
    for (int j : g.neighbors(i)) {
      out.l_minus(i, j) = -1.0;
      out.l_plus(i, j) = 1.0;
    }
  }
  return out;
}

struct SpectralInfo {
  double lambda2_minus;  // algebraic connectivity
  double lambdan_minus;
  double lambdan_plus;
};

inline SpectralInfo spectral(const Graph& g) {
  const auto mats = matrices(g);
  const auto em = jacobi_eigen(mats.l_minus);
  const auto ep = jacobi_eigen(mats.l_plus);
  return {em.values[1], em.values.back(), ep.values.back()};
}

}  // namespace bqc
