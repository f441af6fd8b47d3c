#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "signpred/graph.hpp"
#include "signpred/opinion.hpp"
#include "signpred/trainer.hpp"

namespace signpred {

enum class Regime { Raw, AveragedResults, BalancedDataset };

std::string_view to_string(Regime r);
/// Accepts raw / averaged / balanced.
Regime parse_regime(std::string_view name);

/// Sign-prediction tallies over the gated test edges.
struct EvaluationReport {
  Regime regime = Regime::Raw;
  std::size_t tested = 0;
  std::size_t correct = 0;
  std::size_t abstained = 0;
  std::size_t positive_tested = 0;
  std::size_t negative_tested = 0;
  std::size_t false_positive = 0;  // true sign -1, predicted +1
  std::size_t false_negative = 0;  // true sign +1, predicted -1

  double accuracy() const;
  double false_positive_rate() const;
  double false_negative_rate() const;
};

/// `regime tested correct accuracy fpr fnr abstained`
std::string_view report_header();
std::string format_report_row(const EvaluationReport& r);
/// Human-readable block.
void write_report_summary(std::ostream& out, const EvaluationReport& r);

/// Predictions for every test edge (0 where the q-gate abstains), in input
/// order. `predictors` is indexed by node id; a default (empty) entry
/// predicts +1 everywhere.
std::vector<int> predict_edges(const SignedGraph& g,
                               std::span<const NodePredictor> predictors,
                               std::span<const SignedEdge> test,
                               const PeerPolicy& policy, std::size_t workers = 0);

EvaluationReport evaluate(const SignedGraph& g,
                          std::span<const NodePredictor> predictors,
                          std::span<const SignedEdge> test,
                          const PeerPolicy& policy, std::size_t workers = 0);

/**
 * Result averaging: error rate on all gated negative test edges, error rate
 * on an equal-size sample (without replacement) of gated positives, and
 * accuracy = 1 - mean of the two. Throws DataError if there is no gated
 * negative edge or fewer gated positives than negatives.
 */
EvaluationReport evaluate_averaged(const SignedGraph& g,
                                   std::span<const NodePredictor> predictors,
                                   std::span<const SignedEdge> test,
                                   const PeerPolicy& policy, std::uint64_t seed,
                                   std::size_t workers = 0);

/// Graph the model sees: `g` itself, or with the test signs withheld.
SignedGraph feature_graph(const SignedGraph& g, const DatasetSplit& split,
                          bool hide_test_signs);

/// Peer threshold used by the dataset-balancing regime for both p and q.
inline constexpr std::size_t kBalancedThreshold = 5;

/**
 * Dataset balancing: keeps all negative edges plus an equal sample of
 * positives, then splits, trains and evaluates on that graph from scratch
 * using `config` as given (callers normally set p = q = kBalancedThreshold).
 */
EvaluationReport evaluate_balanced(const SignedGraph& g,
                                   const TrainConfig& config,
                                   std::uint64_t seed, bool hide_test_signs,
                                   std::size_t workers = 0);

/// Edges (x,y) whose target is adjacent to at least q peers of x.
std::size_t count_threshold_edges(const SignedGraph& g,
                                  const PeerPolicy& policy,
                                  std::size_t workers = 0);

struct PlantedParams {
  std::size_t n = 200;
  std::size_t peers_per_node = 5;
  /// Probability that a node picks any given other node as a target. Edges
  /// its planted peers need are added on top, so the graph ends up denser.
  double density = 0.5;
  double noise = 0.0;  // probability of flipping an emitted sign
  double positive_influence = 0.5;
  /// Nodes [0, anchors) have exogenous random signs; 0 selects peers_per_node.
  std::size_t anchors = 0;
  double anchor_positive = 0.5;
};

/// Hidden predictors of a planted graph. Node x >= anchors draws its
/// trusted peers from [0, x). Whenever x->y is emitted, every planted peer of
/// x gets an edge to y first (recursively), so no term of F is zero unless
/// the peer is y itself. Uses
/// O(n^2) memory.
struct PlantedModel {
  std::size_t anchors = 0;
  std::vector<NodePredictor> hidden;  // indexed by node id
  std::vector<SignedEdge> flipped;    // edges whose sign was noise-flipped
};

/// Sign the hidden model assigns to x->y in `g`.
int planted_sign(const SignedGraph& g, const PlantedModel& model, NodeId x,
                 NodeId y);

/// Throws ConfigError on degenerate parameters (zero density, too few nodes).
std::pair<SignedGraph, PlantedModel> generate_planted(const PlantedParams& params,
                                                      std::uint64_t seed);

}  // namespace signpred
