#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "signpred/graph.hpp"

namespace signpred {

/// How peer opinions are formed and who counts as a peer.
enum class OpinionVariant {
  SimpleAdjacent,    // opinion = s'(z,y); peers are neighbours of x
  StandardAdjacent,  // opinion = s'(z,y) * influence; peers are neighbours
  StandardPQ,        // opinion = s'(z,y) * influence; peers share >= p nbrs
};

std::string_view to_string(OpinionVariant v);
/// Accepts simple-adjacent / standard-adjacent / standard-pq.
OpinionVariant parse_variant(std::string_view name);

/// Simple-adjacent freezes every influence at +1.
constexpr bool uses_influence(OpinionVariant v) {
  return v != OpinionVariant::SimpleAdjacent;
}

struct PeerPolicy {
  OpinionVariant variant = OpinionVariant::StandardPQ;
  std::size_t p = 15;  // min common neighbours for a pq peer
  std::size_t q = 20;  // min peers of x adjacent to the target
};

struct TrustedPeer {
  NodeId peer = 0;
  int influence = 1;

  friend bool operator==(const TrustedPeer&, const TrustedPeer&) = default;
  friend auto operator<=>(const TrustedPeer&, const TrustedPeer&) = default;
};

/// Learned trusted peers of one source node. `trusted` is kept canonical:
/// sorted by peer, no repeats, and no peer holding both influences.
struct NodePredictor {
  NodeId source = 0;
  std::vector<TrustedPeer> trusted;

  friend bool operator==(const NodePredictor&, const NodePredictor&) = default;
};

/// Sorts, deduplicates and drops peers that appear with both influences
/// (their opinions cancel in every score). Throws InvariantError if the
/// source itself is listed.
NodePredictor make_predictor(NodeId source, std::vector<TrustedPeer> trusted);

/// A labelled example (source implied): target node and observed sign.
struct Target {
  NodeId node = 0;
  int sign = 1;

  friend bool operator==(const Target&, const Target&) = default;
};

struct Prediction {
  int value = 0;  // +1 / -1, or 0 when abstaining
  std::size_t gate_peers = 0;

  bool abstained() const { return value == 0; }
};

/// s'(z,y): the observed sign of z->y, 0 if absent or hidden.
inline int extended_sign(const SignedGraph& g, NodeId z, NodeId y) {
  return g.observed_sign(z, y);
}

/**
 * Peer lookup with reusable scratch space; one instance per thread.
 * Standard-pq peers are found by counting two-hop paths, so cost is
 * proportional to the size of x's two-hop neighbourhood.
 */
class PeerFinder {
 public:
  explicit PeerFinder(const SignedGraph& g);

  /// Sorted peers of x under `policy`; x excluded.
  std::vector<NodeId> peers(NodeId x, const PeerPolicy& policy);

 private:
  const SignedGraph* graph_;
  std::vector<std::uint32_t> counts_;
  std::vector<NodeId> touched_;
};

std::vector<NodeId> peers_of(const SignedGraph& g, NodeId x,
                             const PeerPolicy& policy);

/// F_x(y) = sum of influence * s'(z,y) over trusted peers.
int score(const SignedGraph& g, const NodePredictor& predictor, NodeId y);

/// Sign decision on a score: ties go to +1.
constexpr int decide(int f) { return f >= 0 ? 1 : -1; }

/// Number of `peers` (sorted) adjacent to y in the undirected sense.
std::size_t gate_count(const SignedGraph& g, std::span<const NodeId> peers,
                       NodeId y);

/// Gated prediction with peers supplied by the caller (sorted).
Prediction predict(const SignedGraph& g, const NodePredictor& predictor,
                   NodeId y, std::size_t q, std::span<const NodeId> peers);

Prediction predict(const SignedGraph& g, const NodePredictor& predictor,
                   NodeId y, const PeerPolicy& policy);

/// One line: `<src> <k> <peer:+|-> ...`, peers in ascending id order.
void write_predictor(std::ostream& out, const NodePredictor& predictor);
/// Parses a line written by write_predictor. Throws DataError.
NodePredictor parse_predictor(std::string_view line);

}  // namespace signpred
