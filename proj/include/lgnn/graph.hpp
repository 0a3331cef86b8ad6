#pragma once

// Particle-system graphs: topology, node types and distance edge weights.

#include "lgnn/core.hpp"

#include <algorithm>
#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace lgnn {

struct Edge {
  std::size_t i = 0;
  std::size_t j = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

enum class Topology { chain, ring, explicit_edges };

/// Declarative description from which a SystemGraph is built.
struct SystemSpec {
  Topology topology = Topology::chain;
  std::size_t n = 1;
  std::size_t dim = 2;
  std::vector<int> node_types;  // empty means every node has type 0
  std::size_t n_types = 0;      // 0 means 1 + max(node_types)
  std::vector<Edge> edges;      // used by Topology::explicit_edges
};

/// Undirected particle graph. Each edge is stored once; edge_weights[e]
/// is the current distance between its endpoints (empty until computed).
struct SystemGraph {
  std::size_t n = 0;
  std::size_t dim = 2;
  std::size_t n_types = 1;
  std::vector<int> node_types;
  std::vector<Edge> edges;
  std::vector<double> edge_weights;

  std::size_t dof() const { return n * dim; }

  void validate() const {
    if (node_types.size() != n)
      throw ValidationError("graph: node_types has " + std::to_string(node_types.size()) +
                            " entries for " + std::to_string(n) + " nodes");
    for (std::size_t k = 0; k < n; ++k)
      if (node_types[k] < 0 || static_cast<std::size_t>(node_types[k]) >= n_types)
        throw ValidationError("graph: node " + std::to_string(k) + " has type " +
                              std::to_string(node_types[k]) + " outside [0, " +
                              std::to_string(n_types) + ")");
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& e : edges) {
      if (e.i >= n || e.j >= n)
        throw ValidationError("graph: edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
                              ") references a node outside [0, " + std::to_string(n) + ")");
      if (e.i == e.j) throw ValidationError("graph: self-edge at node " + std::to_string(e.i));
      auto key = std::minmax(e.i, e.j);
      if (!seen.insert({key.first, key.second}).second)
        throw ValidationError("graph: duplicate edge (" + std::to_string(e.i) + "," +
                              std::to_string(e.j) + ")");
    }
    if (!edge_weights.empty() && edge_weights.size() != edges.size())
      throw ValidationError("graph: edge_weights length does not match edge count");
  }

  std::vector<std::size_t> degrees() const {
    std::vector<std::size_t> d(n, 0);
    for (const auto& e : edges) {
      ++d[e.i];
      ++d[e.j];
    }
    return d;
  }
};

inline double particle_distance(const Vec& q, std::size_t dim, std::size_t i, std::size_t j) {
  return (q.segment(static_cast<Eigen::Index>(i * dim), static_cast<Eigen::Index>(dim)) -
          q.segment(static_cast<Eigen::Index>(j * dim), static_cast<Eigen::Index>(dim)))
      .norm();
}

inline SystemGraph build_system_graph(const SystemSpec& spec) {
  if (spec.n < 1) throw ValidationError("system spec: n must be at least 1");
  if (spec.dim < 1) throw ValidationError("system spec: dim must be at least 1");
  SystemGraph g;
  g.n = spec.n;
  g.dim = spec.dim;
  g.node_types = spec.node_types.empty() ? std::vector<int>(spec.n, 0) : spec.node_types;
  int max_type = 0;
  for (int t : g.node_types) max_type = std::max(max_type, t);
  g.n_types = spec.n_types ? spec.n_types : static_cast<std::size_t>(max_type) + 1;

  switch (spec.topology) {
    case Topology::chain:
      for (std::size_t k = 0; k + 1 < spec.n; ++k) g.edges.push_back({k, k + 1});
      break;
    case Topology::ring:
      for (std::size_t k = 0; k + 1 < spec.n; ++k) g.edges.push_back({k, k + 1});
      if (spec.n >= 3) g.edges.push_back({spec.n - 1, 0});
      break;
    case Topology::explicit_edges:
      g.edges = spec.edges;
      break;
  }
  g.validate();
  return g;
}

/// Copy of `g` with edge weights recomputed from positions `q`.
inline SystemGraph with_edge_weights(SystemGraph g, const Vec& q) {
  if (static_cast<std::size_t>(q.size()) != g.dof())
    throw ValidationError("edge weights: position vector has wrong length");
  g.edge_weights.resize(g.edges.size());
  for (std::size_t e = 0; e < g.edges.size(); ++e)
    g.edge_weights[e] = particle_distance(q, g.dim, g.edges[e].i, g.edges[e].j);
  return g;
}

/// Distance-threshold edge set {(i, j) : |q_i - q_j| <= theta}, i < j.
inline SystemGraph dynamic_edges(const State& state, const SystemGraph& graph, double theta) {
  if (!(theta > 0.0)) throw ValidationError("dynamic_edges: theta must be positive");
  validate_state(state, graph.dof());
  SystemGraph g = graph;
  g.edges.clear();
  g.edge_weights.clear();
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = i + 1; j < g.n; ++j) {
      const double d = particle_distance(state.q, g.dim, i, j);
      if (d <= theta) {
        g.edges.push_back({i, j});
        g.edge_weights.push_back(d);
      }
    }
  return g;
}

inline Vec one_hot(int type_id, int n_types) {
  if (n_types < 1 || type_id < 0 || type_id >= n_types)
    throw ValidationError("one_hot: type " + std::to_string(type_id) + " outside [0, " +
                          std::to_string(n_types) + ")");
  Vec v = Vec::Zero(n_types);
  v[type_id] = 1.0;
  return v;
}

}  // namespace lgnn
