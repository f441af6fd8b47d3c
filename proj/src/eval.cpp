#include "signpred/eval.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "signpred/error.hpp"
#include "signpred/parallel.hpp"
#include "signpred/random.hpp"

namespace signpred {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

// Test-edge indices grouped by source so each source's peers are found once.
std::vector<std::vector<std::size_t>> by_source(std::span<const SignedEdge> edges) {
  std::vector<std::size_t> order(edges.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return edges[a].src < edges[b].src;
  });
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k == 0 || edges[order[k]].src != edges[order[k - 1]].src)
      groups.emplace_back();
    groups.back().push_back(order[k]);
  }
  return groups;
}

void tally(EvaluationReport& r, int truth, int predicted) {
  if (predicted == 0) {
    ++r.abstained;
    return;
  }
  ++r.tested;
  if (truth > 0) {
    ++r.positive_tested;
    if (predicted < 0) ++r.false_negative;
  } else {
    ++r.negative_tested;
    if (predicted > 0) ++r.false_positive;
  }
  if (predicted == truth) ++r.correct;
}

}  // namespace

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::Raw:
      return "raw";
    case Regime::AveragedResults:
      return "averaged";
    case Regime::BalancedDataset:
      return "balanced";
  }
  return "?";
}

Regime parse_regime(std::string_view name) {
  for (auto r : {Regime::Raw, Regime::AveragedResults, Regime::BalancedDataset})
    if (to_string(r) == name) return r;
  throw ConfigError(fmt::format("unknown regime '{}'", name));
}

double EvaluationReport::accuracy() const { return ratio(correct, tested); }
double EvaluationReport::false_positive_rate() const {
  return ratio(false_positive, negative_tested);
}
double EvaluationReport::false_negative_rate() const {
  return ratio(false_negative, positive_tested);
}

std::string_view report_header() {
  return "regime\ttested\tcorrect\taccuracy\tfpr\tfnr\tabstained";
}

std::string format_report_row(const EvaluationReport& r) {
  return fmt::format("{}\t{}\t{}\t{:.4f}\t{:.4f}\t{:.4f}\t{}", to_string(r.regime),
                     r.tested, r.correct, r.accuracy(), r.false_positive_rate(),
                     r.false_negative_rate(), r.abstained);
}

void write_report_summary(std::ostream& out, const EvaluationReport& r) {
  out << fmt::format(
      "regime:          {}\n"
      "tested edges:    {} ({} positive, {} negative)\n"
      "abstained:       {}\n"
      "accuracy:        {:.2f}%\n"
      "false positive:  {:.2f}% of negative edges\n"
      "false negative:  {:.2f}% of positive edges\n",
      to_string(r.regime), r.tested, r.positive_tested, r.negative_tested,
      r.abstained, 100.0 * r.accuracy(), 100.0 * r.false_positive_rate(),
      100.0 * r.false_negative_rate());
}

std::vector<int> predict_edges(const SignedGraph& g,
                               std::span<const NodePredictor> predictors,
                               std::span<const SignedEdge> test,
                               const PeerPolicy& policy, std::size_t workers) {
  if (predictors.size() != g.node_count())
    throw InvariantError(fmt::format("{} predictors for a graph of {} nodes",
                                     predictors.size(), g.node_count()));
  const auto groups = by_source(test);
  std::vector<int> out(test.size(), 0);
  workers = resolve_workers(workers, groups.size());
  std::vector<PeerFinder> finders;
  finders.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) finders.emplace_back(g);

  parallel_for(groups.size(), workers, [&](std::size_t k, std::size_t w) {
    const NodeId x = test[groups[k].front()].src;
    const NodePredictor& predictor = predictors[x];
    if (predictor.source != x && !predictor.trusted.empty())
      throw InvariantError(fmt::format("predictor slot {} holds node {}", x,
                                       predictor.source));
    const NodePredictor fallback{x, {}};
    const NodePredictor& use = predictor.source == x ? predictor : fallback;
    const auto peers = policy.q > 0 ? finders[w].peers(x, policy)
                                    : std::vector<NodeId>{};
    for (std::size_t idx : groups[k])
      out[idx] = predict(g, use, test[idx].dst, policy.q, peers).value;
  });
  return out;
}

EvaluationReport evaluate(const SignedGraph& g,
                          std::span<const NodePredictor> predictors,
                          std::span<const SignedEdge> test,
                          const PeerPolicy& policy, std::size_t workers) {
  const auto predicted = predict_edges(g, predictors, test, policy, workers);
  EvaluationReport r;
  for (std::size_t i = 0; i < test.size(); ++i) tally(r, test[i].sign, predicted[i]);
  return r;
}

EvaluationReport evaluate_averaged(const SignedGraph& g,
                                   std::span<const NodePredictor> predictors,
                                   std::span<const SignedEdge> test,
                                   const PeerPolicy& policy, std::uint64_t seed,
                                   std::size_t workers) {
  const auto predicted = predict_edges(g, predictors, test, policy, workers);
  EvaluationReport r;
  r.regime = Regime::AveragedResults;
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (predicted[i] == 0) {
      ++r.abstained;
      continue;
    }
    (test[i].sign > 0 ? positives : negatives).push_back(i);
  }
  if (negatives.empty())
    throw DataError("averaged regime needs at least one gated negative edge");
  if (positives.size() < negatives.size())
    throw DataError(fmt::format(
        "averaged regime needs as many gated positives as negatives ({} < {})",
        positives.size(), negatives.size()));

  Rng rng(seed);
  const std::size_t k = negatives.size();
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(
                           uniform_below(rng, positives.size() - i));
    std::swap(positives[i], positives[j]);
  }
  for (std::size_t i : negatives) tally(r, test[i].sign, predicted[i]);
  for (std::size_t s = 0; s < k; ++s)
    tally(r, test[positives[s]].sign, predicted[positives[s]]);
  return r;
}

SignedGraph feature_graph(const SignedGraph& g, const DatasetSplit& split,
                          bool hide_test_signs) {
  return hide_test_signs ? g.with_hidden(split.test) : g;
}

EvaluationReport evaluate_balanced(const SignedGraph& g,
                                   const TrainConfig& config,
                                   std::uint64_t seed, bool hide_test_signs,
                                   std::size_t workers) {
  const auto kept = balance_by_sampling(g.edges(), seed);
  const SignedGraph balanced = g.restricted_to(kept);
  const DatasetSplit split =
      split_dataset(balanced, config.test_fraction, config.seed);
  const SignedGraph features = feature_graph(balanced, split, hide_test_signs);
  const TrainedModel model = train_all(features, split, config, workers);
  EvaluationReport r =
      evaluate(features, model.predictors, split.test, config.policy, workers);
  r.regime = Regime::BalancedDataset;
  return r;
}

std::size_t count_threshold_edges(const SignedGraph& g,
                                  const PeerPolicy& policy,
                                  std::size_t workers) {
  if (policy.q == 0) return g.edge_count();
  std::vector<NodeId> sources;
  for (NodeId x = 0; x < g.node_count(); ++x)
    if (!g.out_arcs(x).empty()) sources.push_back(x);
  workers = resolve_workers(workers, sources.size());
  std::vector<PeerFinder> finders;
  finders.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) finders.emplace_back(g);
  std::vector<std::size_t> passing(sources.size(), 0);
  parallel_for(sources.size(), workers, [&](std::size_t k, std::size_t w) {
    const NodeId x = sources[k];
    const auto peers = finders[w].peers(x, policy);
    if (peers.size() < policy.q) return;
    std::size_t count = 0;
    for (const auto& arc : g.out_arcs(x))
      count += gate_count(g, peers, arc.node) >= policy.q ? 1 : 0;
    passing[k] = count;
  });
  return std::accumulate(passing.begin(), passing.end(), std::size_t{0});
}

int planted_sign(const SignedGraph& g, const PlantedModel& model, NodeId x,
                 NodeId y) {
  return decide(score(g, model.hidden.at(x), y));
}

std::pair<SignedGraph, PlantedModel> generate_planted(const PlantedParams& params,
                                                      std::uint64_t seed) {
  const std::size_t k = params.peers_per_node;
  const std::size_t anchors = params.anchors > 0 ? params.anchors : k;
  if (!(params.density > 0.0 && params.density <= 1.0))
    throw ConfigError("planted density must lie in (0, 1]");
  if (!(params.noise >= 0.0 && params.noise <= 1.0))
    throw ConfigError("planted noise must lie in [0, 1]");
  if (k == 0) throw ConfigError("planted model needs at least one peer per node");
  if (anchors < k || params.n <= anchors)
    throw ConfigError(fmt::format(
        "planted model needs n > anchors >= peers_per_node (n={}, anchors={})",
        params.n, anchors));

  Rng rng(seed);
  const std::size_t n = params.n;
  PlantedModel model;
  model.anchors = anchors;
  model.hidden.resize(n);
  // out_sign[x][y]: emitted sign of x->y, 0 when absent
  std::vector<std::vector<std::int8_t>> out_sign(n, std::vector<std::int8_t>(n, 0));
  std::vector<SignedEdge> edges;

  // Emits z->y, first emitting whatever z's planted peers need so that every
  // term of F is nonzero. Recursion depth is bounded by the id chain.
  auto emit = [&](auto& self, NodeId z, NodeId y) -> int {
    if (out_sign[z][y] != 0) return out_sign[z][y];
    int sign;
    if (z < anchors) {
      sign = uniform_unit(rng) < params.anchor_positive ? 1 : -1;
    } else {
      int f = 0;
      for (const auto& t : model.hidden[z].trusted)
        if (t.peer != y) f += t.influence * self(self, t.peer, y);
      sign = decide(f);
    }
    if (params.noise > 0.0 && uniform_unit(rng) < params.noise) {
      sign = -sign;
      model.flipped.push_back({z, y, sign});
    }
    out_sign[z][y] = static_cast<std::int8_t>(sign);
    edges.push_back({z, y, sign});
    return sign;
  };

  for (NodeId x = 0; x < n; ++x) {
    NodePredictor& hidden = model.hidden[x];
    hidden.source = x;
    if (x < anchors) continue;
    std::vector<NodeId> pool(x);
    std::iota(pool.begin(), pool.end(), NodeId{0});
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::size_t>(uniform_below(rng, pool.size() - i));
      std::swap(pool[i], pool[j]);
      hidden.trusted.push_back(
          {pool[i], uniform_unit(rng) < params.positive_influence ? 1 : -1});
    }
    std::sort(hidden.trusted.begin(), hidden.trusted.end());
  }
  for (NodeId x = 0; x < n; ++x)
    for (NodeId y = 0; y < n; ++y)
      if (y != x && uniform_unit(rng) < params.density) emit(emit, x, y);
  if (edges.empty()) throw ConfigError("planted parameters produced no edges");

  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
  return {SignedGraph::build(std::move(labels), std::move(edges)), std::move(model)};
}

}  // namespace signpred
