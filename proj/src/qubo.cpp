#include "signpred/qubo.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include <fmt/format.h>

#include "signpred/error.hpp"

namespace signpred {

QuboInstance::QuboInstance(std::size_t m)
    : linear_(m, 0.0), upper_(m * (m > 0 ? m - 1 : 0) / 2, 0.0) {}

std::size_t QuboInstance::pair_index(std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  const std::size_t m = size();
  return i * (2 * m - i - 1) / 2 + (j - i - 1);
}

void QuboInstance::set_labels(std::vector<VariableLabel> labels) {
  if (!labels.empty() && labels.size() != size())
    throw InvariantError("label count differs from variable count");
  labels_ = std::move(labels);
}

double QuboInstance::magnitude() const {
  double s = std::abs(constant_);
  for (double v : linear_) s += std::abs(v);
  for (double v : upper_) s += std::abs(v);
  return s;
}

std::size_t Assignment::set_count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1));
}

double evaluate_objective(const QuboInstance& q,
                          std::span<const std::uint8_t> bits) {
  if (bits.size() != q.size())
    throw InvariantError(fmt::format("assignment has {} bits, instance has {}",
                                     bits.size(), q.size()));
  double obj = q.constant();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (!bits[i]) continue;
    obj += q.linear(i);
    for (std::size_t j = i + 1; j < bits.size(); ++j)
      if (bits[j]) obj += q.quadratic(i, j);
  }
  return obj;
}

SubproblemBuilder::SubproblemBuilder(const SignedGraph& g,
                                     std::vector<VariableLabel> variables,
                                     std::span<const Target> targets)
    : vars_(std::move(variables)), targets_(targets.size()) {
  if (vars_.empty()) throw InvariantError("subproblem has no candidate peers");
  if (targets.empty()) throw InvariantError("subproblem has no training targets");

  std::map<NodeId, std::size_t> slot;
  std::vector<NodeId> peers;
  peer_of_var_.reserve(vars_.size());
  for (const auto& v : vars_) {
    auto [it, inserted] = slot.try_emplace(v.peer, peers.size());
    if (inserted) peers.push_back(v.peer);
    peer_of_var_.push_back(it->second);
  }
  peers_ = peers.size();

  // opinion columns: s'(v, y) for every peer and target
  std::vector<std::int8_t> column(peers_ * targets_);
  for (std::size_t a = 0; a < peers_; ++a)
    for (std::size_t t = 0; t < targets_; ++t)
      column[a * targets_ + t] =
          static_cast<std::int8_t>(extended_sign(g, peers[a], targets[t].node));

  corr_.assign(peers_ * peers_, 0);
  label_corr_.assign(peers_, 0);
  for (std::size_t a = 0; a < peers_; ++a) {
    const std::int8_t* ca = &column[a * targets_];
    for (std::size_t t = 0; t < targets_; ++t)
      label_corr_[a] += ca[t] * targets[t].sign;
    for (std::size_t b = a; b < peers_; ++b) {
      const std::int8_t* cb = &column[b * targets_];
      std::int64_t c = 0;
      for (std::size_t t = 0; t < targets_; ++t) c += ca[t] * cb[t];
      corr_[a * peers_ + b] = corr_[b * peers_ + a] = c;
    }
  }
}

QuboInstance SubproblemBuilder::build(double lambda, double normalizer) const {
  if (!(normalizer > 0.0))
    throw InvariantError(fmt::format("normalizer {} must be positive", normalizer));
  if (lambda < 0.0) throw InvariantError("lambda must be non-negative");
  const std::size_t m = vars_.size();
  const double n2 = normalizer * normalizer;
  QuboInstance q(m);
  // sum_y s_y^2 with s_y = +-1
  q.set_constant(static_cast<double>(targets_));
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t a = peer_of_var_[i];
    const double sigma = vars_[i].influence;
    // the diagonal of the squared sum folds into the linear term (b^2 = b)
    q.set_linear(i, static_cast<double>(corr_[a * peers_ + a]) / n2 -
                        2.0 * sigma * static_cast<double>(label_corr_[a]) /
                            normalizer +
                        lambda);
    for (std::size_t j = i + 1; j < m; ++j) {
      const std::size_t b = peer_of_var_[j];
      const double tau = vars_[j].influence;
      q.set_quadratic(
          i, j, 2.0 * sigma * tau * static_cast<double>(corr_[a * peers_ + b]) / n2);
    }
  }
  q.set_labels(vars_);
  return q;
}

std::vector<VariableLabel> expand_peers(std::span<const NodeId> peers,
                                        OpinionVariant variant) {
  std::vector<VariableLabel> vars;
  vars.reserve(2 * peers.size());
  for (NodeId v : peers) {
    vars.push_back({v, 1});
    if (uses_influence(variant)) vars.push_back({v, -1});
  }
  return vars;
}

QuboInstance build_subproblem(const SignedGraph& g,
                              std::span<const NodeId> peers,
                              std::span<const Target> targets, double lambda,
                              double normalizer, OpinionVariant variant) {
  return SubproblemBuilder(g, expand_peers(peers, variant), targets)
      .build(lambda, normalizer);
}

void canonicalize(const QuboInstance& q, Assignment& a) {
  const auto labels = q.labels();
  if (labels.empty()) return;
  bool changed = false;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!a.bits[i]) continue;
    for (std::size_t j = i + 1; j < labels.size(); ++j) {
      if (a.bits[j] && labels[j].peer == labels[i].peer &&
          labels[j].influence == -labels[i].influence) {
        a.bits[i] = a.bits[j] = 0;
        changed = true;
        break;
      }
    }
  }
  if (changed) a.objective = evaluate_objective(q, a.bits);
}

void write_qubo(std::ostream& out, const QuboInstance& q) {
  const std::size_t m = q.size();
  out << fmt::format("{} {:.17g}\n", m, q.constant());
  for (std::size_t i = 0; i < m; ++i)
    out << fmt::format("{} {:.17g}\n", i, q.linear(i));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (q.quadratic(i, j) != 0.0)
        out << fmt::format("{} {} {:.17g}\n", i, j, q.quadratic(i, j));
}

}  // namespace signpred
