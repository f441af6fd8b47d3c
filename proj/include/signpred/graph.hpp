#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace signpred {

/// Dense node index, contiguous in [0, n).
using NodeId = std::uint32_t;

struct SignedEdge {
  NodeId src = 0;
  NodeId dst = 0;
  int sign = 1;  // -1 or +1

  friend bool operator==(const SignedEdge&, const SignedEdge&) = default;
  friend auto operator<=>(const SignedEdge&, const SignedEdge&) = default;
};

/// Outgoing or incoming half of an edge as seen from one endpoint.
struct Arc {
  NodeId node = 0;
  std::int8_t sign = 1;
  bool hidden = false;  // sign withheld from the model (e.g. a test edge)
};

/**
 * Immutable snapshot of a directed signed network.
 *
 * Keeps three adjacency indices: signed out-arcs and in-arcs sorted by
 * node, and the undirected neighbour set (union of both directions, no
 * self). Edges may be marked hidden; a hidden edge still counts for
 * adjacency but its sign is not observable through `observed_sign`.
 */
class SignedGraph {
 public:
  SignedGraph() = default;

  /// Validates and indexes. `labels[i]` is the raw identifier of node i.
  /// Throws InvariantError on out-of-range endpoints, self-loops, signs
  /// other than +-1, or repeated (src,dst) pairs.
  static SignedGraph build(std::vector<std::string> labels,
                           std::vector<SignedEdge> edges);

  std::size_t node_count() const noexcept { return labels_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::span<const SignedEdge> edges() const noexcept { return edges_; }

  std::span<const Arc> out_arcs(NodeId x) const;
  std::span<const Arc> in_arcs(NodeId x) const;
  /// Sorted undirected neighbours of x.
  std::span<const NodeId> neighbours(NodeId x) const;
  bool adjacent(NodeId x, NodeId y) const;

  /// Sign of x->y regardless of hiding; 0 when absent.
  int sign(NodeId src, NodeId dst) const;
  /// Sign of x->y as the model may see it; 0 when absent or hidden.
  int observed_sign(NodeId src, NodeId dst) const;
  bool is_hidden(NodeId src, NodeId dst) const;
  std::size_t hidden_count() const noexcept { return hidden_count_; }

  const std::string& label(NodeId x) const { return labels_.at(x); }
  std::span<const std::string> labels() const noexcept { return labels_; }
  std::optional<NodeId> find(std::string_view label) const;

  /// FNV-1a over the ordered label list; identifies the id mapping.
  std::uint64_t mapping_hash() const noexcept { return mapping_hash_; }

  /// Same nodes and edges with the given edges' signs hidden.
  /// Throws InvariantError if one of them is not an edge of this graph.
  SignedGraph with_hidden(std::span<const SignedEdge> hide) const;
  /// Same node set (and ids) restricted to `keep`, which must be edges
  /// of this graph.
  SignedGraph restricted_to(std::span<const SignedEdge> keep) const;

 private:
  const Arc* find_out(NodeId src, NodeId dst) const;

  std::vector<std::string> labels_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<SignedEdge> edges_;
  std::vector<std::size_t> out_offsets_, in_offsets_, nbr_offsets_;
  std::vector<Arc> out_arcs_, in_arcs_;
  std::vector<NodeId> nbrs_;
  std::size_t hidden_count_ = 0;
  std::uint64_t mapping_hash_ = 0;
};

/// Tokens accepted as edge signs in edge-list input.
struct EdgeListFormat {
  std::vector<std::string> positive{"1", "+1"};
  std::vector<std::string> negative{"-1"};
};

/// Side information collected while loading.
struct LoadStats {
  std::size_t lines = 0;
  std::size_t self_loops_dropped = 0;
  std::size_t duplicates_collapsed = 0;
};

/// Reads `<src> <dst> <sign>` lines; `#` lines and blank lines are skipped.
/// Raw ids are densified in order of first appearance; a repeated
/// (src,dst) pair keeps the last sign. Self-loops are dropped.
SignedGraph load_edge_list(std::istream& in, const EdgeListFormat& format = {},
                           LoadStats* stats = nullptr);

/// Reads MovieLens-style `<user> <item> <rating> <timestamp>` lines into a
/// bipartite user->item graph. Users take ids [0, U), items [U, U+I).
/// rating <= negative_threshold gives sign -1, otherwise +1.
SignedGraph load_ratings(std::istream& in, int negative_threshold = 3,
                         LoadStats* stats = nullptr);

/// Writes an edge list (raw labels) that load_edge_list reads back.
void write_edge_list(const SignedGraph& g, std::ostream& out);

struct GraphStats {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;

  double positive_percent() const;
  double negative_percent() const;
};

GraphStats compute_stats(const SignedGraph& g);

/// Tab-separated header and value row: nodes edges pos_pct neg_pct.
void write_stats(const GraphStats& stats, std::ostream& out);

/// |N(u) ∩ N(v)| over undirected neighbourhoods, u and v excluded.
std::size_t common_neighbours(const SignedGraph& g, NodeId u, NodeId v);

struct DatasetSplit {
  std::vector<SignedEdge> train;
  std::vector<SignedEdge> validation;
  std::vector<SignedEdge> test;
  std::uint64_t seed = 0;
};

/// floor(test_fraction*|E|) edges go to test uniformly at random; the rest
/// is halved into train (gets the odd one) and validation.
DatasetSplit split_dataset(std::span<const SignedEdge> edges,
                           double test_fraction, std::uint64_t seed);
DatasetSplit split_dataset(const SignedGraph& g, double test_fraction,
                           std::uint64_t seed);

/// All negative edges plus an equal-size uniform sample of positives,
/// shuffled. Throws DataError when positives are fewer than negatives.
std::vector<SignedEdge> balance_by_sampling(std::span<const SignedEdge> edges,
                                            std::uint64_t seed);

}  // namespace signpred
