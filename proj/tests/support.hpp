#pragma once

// Test-only helpers. The oracles here are written from the definitions and
// deliberately share no code with the library's fast paths.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "signpred/graph.hpp"
#include "signpred/opinion.hpp"
#include "signpred/qubo.hpp"

namespace testing {

using namespace signpred;

inline SignedGraph graph_from(std::size_t n, std::vector<SignedEdge> edges) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
  return SignedGraph::build(std::move(labels), std::move(edges));
}

inline SignedGraph graph_from_text(const std::string& text) {
  std::istringstream in(text);
  return load_edge_list(in);
}

/// Directed Erdos-Renyi graph with independent signs.
inline SignedGraph random_graph(std::size_t n, double density, double negative,
                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SignedEdge> edges;
  for (NodeId a = 0; a < n; ++a)
    for (NodeId b = 0; b < n; ++b)
      if (a != b && u(rng) < density)
        edges.push_back({a, b, u(rng) < negative ? -1 : 1});
  return graph_from(n, std::move(edges));
}

inline QuboInstance random_qubo(std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  QuboInstance q(m);
  q.set_constant(u(rng));
  for (std::size_t i = 0; i < m; ++i) q.set_linear(i, u(rng));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) q.set_quadratic(i, j, u(rng));
  return q;
}

/// Objective from the coefficient form, summing over every ordered pair.
inline double objective_oracle(const QuboInstance& q, std::uint64_t mask) {
  double total = q.constant();
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!((mask >> i) & 1)) continue;
    total += q.linear(i);
    for (std::size_t j = 0; j < q.size(); ++j)
      if (j != i && ((mask >> j) & 1)) total += 0.5 * q.quadratic(i, j);
  }
  return total;
}

/// Plain enumeration of every assignment.
inline double brute_force_minimum(const QuboInstance& q) {
  double best = std::numeric_limits<double>::infinity();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << q.size()); ++mask)
    best = std::min(best, objective_oracle(q, mask));
  return best;
}

inline Bits bits_of(std::uint64_t mask, std::size_t m) {
  Bits b(m);
  for (std::size_t i = 0; i < m; ++i) b[i] = (mask >> i) & 1;
  return b;
}

/// sum_y ((1/N) sum_set influence*s'(peer,y) - s_y)^2 + lambda*|set|
inline double squared_loss(const SignedGraph& g,
                           const std::vector<VariableLabel>& vars,
                           const Bits& bits, const std::vector<Target>& targets,
                           double lambda, double normalizer) {
  double loss = 0.0;
  for (const auto& t : targets) {
    double f = 0.0;
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (bits[i]) f += vars[i].influence * g.observed_sign(vars[i].peer, t.node);
    const double r = f / normalizer - t.sign;
    loss += r * r;
  }
  std::size_t set = 0;
  for (auto b : bits) set += b;
  return loss + lambda * static_cast<double>(set);
}

/// |N(u) ∩ N(v)| straight from an adjacency matrix.
inline std::vector<std::vector<std::size_t>> common_neighbour_matrix(
    const SignedGraph& g) {
  const std::size_t n = g.node_count();
  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (const auto& e : g.edges()) adj[e.src][e.dst] = adj[e.dst][e.src] = true;
  std::vector<std::vector<std::size_t>> c(n, std::vector<std::size_t>(n, 0));
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t w = 0; w < n; ++w)
        if (w != u && w != v && adj[u][w] && adj[v][w]) ++c[u][v];
  return c;
}

inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace testing
