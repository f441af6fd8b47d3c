#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "signpred/graph.hpp"
#include "signpred/opinion.hpp"

namespace signpred {

using Bits = std::vector<std::uint8_t>;

/// Which (peer, influence) pair a binary variable stands for.
struct VariableLabel {
  NodeId peer = 0;
  int influence = 1;

  friend bool operator==(const VariableLabel&, const VariableLabel&) = default;
};

/**
 * Minimise  constant + sum_i linear[i] b_i + sum_{i<j} quadratic(i,j) b_i b_j
 * over b in {0,1}^m. Pair coefficients are stored once per unordered pair.
 */
class QuboInstance {
 public:
  QuboInstance() = default;
  explicit QuboInstance(std::size_t m);

  std::size_t size() const noexcept { return linear_.size(); }

  double constant() const noexcept { return constant_; }
  void set_constant(double c) noexcept { constant_ = c; }

  double linear(std::size_t i) const { return linear_[i]; }
  void set_linear(std::size_t i, double v) { linear_[i] = v; }

  /// Symmetric access; i != j.
  double quadratic(std::size_t i, std::size_t j) const {
    return upper_[pair_index(i, j)];
  }
  void set_quadratic(std::size_t i, std::size_t j, double v) {
    upper_[pair_index(i, j)] = v;
  }

  /// Empty for instances not built from a subproblem.
  std::span<const VariableLabel> labels() const noexcept { return labels_; }
  void set_labels(std::vector<VariableLabel> labels);

  /// Sum of absolute coefficients; sets the scale for tie tolerances.
  double magnitude() const;

 private:
  std::size_t pair_index(std::size_t i, std::size_t j) const;

  double constant_ = 0.0;
  std::vector<double> linear_;
  std::vector<double> upper_;
  std::vector<VariableLabel> labels_;
};

struct Assignment {
  Bits bits;
  double objective = 0.0;

  std::size_t set_count() const;
};

/// Full recomputation. Throws InvariantError on a length mismatch.
double evaluate_objective(const QuboInstance& q, std::span<const std::uint8_t> bits);

/**
 * Integer correlation data of one node's training targets.
 *
 * For every distinct peer v among the variables, with s'(v,y) the observed
 * sign of v->y:  C[v][u] = sum_y s'(v,y) s'(u,y)  and
 * L[v] = sum_y s'(v,y) s_y. Building instances for several lambdas reuses
 * these sums.
 */
class SubproblemBuilder {
 public:
  /// Throws InvariantError when `variables` or `targets` is empty.
  SubproblemBuilder(const SignedGraph& g, std::vector<VariableLabel> variables,
                    std::span<const Target> targets);

  /// Expanded objective of
  ///   sum_y ((1/N) sum_i b_i influence_i s'(peer_i, y) - s_y)^2 + lambda |b|.
  QuboInstance build(double lambda, double normalizer) const;

  std::size_t distinct_peers() const noexcept { return peers_; }
  std::span<const VariableLabel> variables() const noexcept { return vars_; }

 private:
  std::vector<VariableLabel> vars_;
  std::vector<std::size_t> peer_of_var_;
  std::size_t peers_ = 0;
  std::size_t targets_ = 0;
  std::vector<std::int64_t> corr_;  // peers_ x peers_
  std::vector<std::int64_t> label_corr_;
};

/// One variable per candidate peer and influence: (v,+1),(v,-1) for the
/// standard variants, (v,+1) only for Simple-adjacent.
std::vector<VariableLabel> expand_peers(std::span<const NodeId> peers,
                                        OpinionVariant variant);

QuboInstance build_subproblem(const SignedGraph& g,
                              std::span<const NodeId> peers,
                              std::span<const Target> targets, double lambda,
                              double normalizer, OpinionVariant variant);

/// Largest instance the exhaustive solver accepts.
inline constexpr std::size_t kMaxExactVariables = 24;

/// Exhaustive minimisation. Among objectives tied within 1e-10 times the
/// instance magnitude, prefers fewest set bits, then the smallest
/// integer sum_i b_i 2^i. Throws ConfigError when m > kMaxExactVariables.
Assignment solve_exact(const QuboInstance& q);

struct TabuParams {
  std::size_t max_iterations = 0;  // 0 selects 200*m
  std::size_t tenure = 0;          // 0 selects max(7, m/4), at most m/2
  std::chrono::milliseconds time_limit{1000};
  std::uint64_t seed = 0;
};

/**
 * Single-flip tabu search from the all-zero assignment.
 *
 * Each step takes the best admissible flip (ties broken by the seeded RNG);
 * a tabu flip is admissible when it improves on the best objective seen.
 * Once the budget is spent the search only continues while its next move
 * still produces a new best, so the result is single-flip locally optimal
 * and never worse for a larger iteration budget.
 */
Assignment solve_tabu(const QuboInstance& q, const TabuParams& params);

/// Clears every (v,+1)/(v,-1) pair that is set together; those opinions
/// cancel, and each cleared pair saves 2*lambda. No-op without labels.
void canonicalize(const QuboInstance& q, Assignment& a);

/// Text dump: `m constant`, then `i linear_i`, then `i j q_ij` (nonzero).
void write_qubo(std::ostream& out, const QuboInstance& q);

}  // namespace signpred
