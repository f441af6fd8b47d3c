#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "signpred/graph.hpp"
#include "signpred/opinion.hpp"
#include "signpred/qubo.hpp"

namespace signpred {

enum class SolverKind { Exact, Tabu };

std::string_view to_string(SolverKind s);
SolverKind parse_solver(std::string_view name);

struct TrainConfig {
  PeerPolicy policy;
  std::size_t d = 10;  // candidates per subset
  double lambda_min = 0.1;
  double lambda_max = 0.35;
  double lambda_step = 0.05;
  SolverKind solver = SolverKind::Exact;
  TabuParams tabu;
  double normalizer = 0.0;  // N; 0 uses the subset's distinct peer count
  double test_fraction = 0.1;
  std::uint64_t seed = 1;

  /// Throws ConfigError listing every violated constraint.
  void validate() const;
  /// lambda_min, lambda_min + step, ... up to lambda_max (inclusive).
  std::vector<double> lambda_grid() const;
};

/// One (peer, influence) candidate and its individual training error.
struct RankedCandidate {
  NodeId peer = 0;
  int influence = 1;
  std::size_t error = 0;

  friend bool operator==(const RankedCandidate&, const RankedCandidate&) = default;
};

/// Candidates ordered by error, then peer id, then + before -.
struct CandidateRanking {
  std::vector<RankedCandidate> entries;
};

/// Individual errors e_{v+} / e_{v-} of every peer on the training targets.
/// A target v has no observed edge to counts as an error for both signs.
CandidateRanking individual_errors(const SignedGraph& g,
                                   std::span<const Target> train,
                                   std::span<const NodeId> peers,
                                   OpinionVariant variant);

/// Number of examples the trusted set mispredicts (sign decision, no gate).
std::size_t prediction_errors(const SignedGraph& g,
                              std::span<const TrustedPeer> trusted,
                              std::span<const Target> examples);

struct FitResult {
  std::vector<TrustedPeer> trusted;
  std::size_t validation_error = 0;
  double lambda = 0.0;
  bool selected_on_training = false;  // validation set was empty
};

/// Sweeps lambda over the grid, solving the QUBO restricted to `slice`, and
/// keeps the trusted set with the lowest validation error (earliest lambda
/// on ties).
FitResult fit_subset(const SignedGraph& g, NodeId x,
                     std::span<const RankedCandidate> slice,
                     std::span<const Target> train,
                     std::span<const Target> validation,
                     const TrainConfig& config, std::uint64_t seed);

struct NodeTrainLog {
  NodeId node = 0;
  std::size_t candidates = 0;
  std::size_t slices_fitted = 0;
  std::size_t slices_accepted = 0;
  std::size_t trusted = 0;
  std::vector<double> lambdas;  // chosen lambda of every fitted slice
  std::size_t validation_error = 0;
  bool no_training_data = false;
  bool selected_on_training = false;
};

/// Tab-separated: node candidates slices_fitted slices_accepted trusted
/// lambdas validation_error flags.
std::string format_log_line(const NodeTrainLog& log);
std::string log_header();

struct NodeTrainResult {
  NodePredictor predictor;
  NodeTrainLog log;
};

/**
 * Trains the predictor of node x.
 *
 * Candidates are ranked by individual error and consumed d at a time.
 * Each slice's fitted set is merged into the accumulated set only if the
 * merged set has strictly fewer validation errors; the first slice that
 * fails to improve ends training.
 */
NodeTrainResult train_node(const SignedGraph& g, NodeId x,
                           std::span<const Target> train,
                           std::span<const Target> validation,
                           std::span<const NodeId> peers,
                           const TrainConfig& config);

/// Per-source training and validation examples.
struct NodeExamples {
  std::vector<std::vector<Target>> train;
  std::vector<std::vector<Target>> validation;
};

NodeExamples group_by_source(std::size_t n, std::span<const SignedEdge> train,
                             std::span<const SignedEdge> validation);

struct TrainedModel {
  std::vector<NodePredictor> predictors;  // indexed by node id
  std::vector<NodeTrainLog> logs;         // trained nodes, ascending id
};

/// Called on the calling thread, in completion order.
using NodeResultSink = std::function<void(const NodeTrainResult&)>;

/// Trains `nodes` in parallel. Results reach `sink` one at a time.
void train_nodes(const SignedGraph& g, const NodeExamples& examples,
                 std::span<const NodeId> nodes, const TrainConfig& config,
                 std::size_t workers, const NodeResultSink& sink);

/// Trains every node that is a source in split.train. Other nodes get empty
/// predictors. `g` is the feature graph (see feature_graph).
TrainedModel train_all(const SignedGraph& g, const DatasetSplit& split,
                       const TrainConfig& config, std::size_t workers = 0);

}  // namespace signpred
