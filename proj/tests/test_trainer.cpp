#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>

#include "signpred/error.hpp"
#include "signpred/eval.hpp"
#include "signpred/trainer.hpp"
#include "support.hpp"

using namespace signpred;
using testing::graph_from;

namespace {

std::vector<Target> targets_of(const SignedGraph& g, NodeId x) {
  std::vector<Target> t;
  for (const auto& a : g.out_arcs(x)) t.push_back({a.node, a.sign});
  return t;
}

TrainConfig small_config() {
  TrainConfig c;
  c.policy = {OpinionVariant::StandardPQ, 0, 0};
  return c;
}

}  // namespace

TEST_CASE("default lambda grid has six points") {
  const auto grid = TrainConfig{}.lambda_grid();
  REQUIRE(grid.size() == 6);
  CHECK(grid.front() == doctest::Approx(0.1));
  CHECK(grid.back() == doctest::Approx(0.35));
}

TEST_CASE("config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.d = 25;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.solver = SolverKind::Tabu;
  CHECK_NOTHROW(c.validate());
  c.lambda_min = 0.5;
  c.lambda_step = 0;
  try {
    c.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("lambda-min") != std::string::npos);
    CHECK(msg.find("lambda-step") != std::string::npos);
  }
  CHECK(parse_solver("tabu") == SolverKind::Tabu);
  CHECK_THROWS_AS(parse_solver("anneal"), ConfigError);
}

TEST_CASE("individual errors match a direct count") {
  const auto g = testing::random_graph(20, 0.3, 0.3, 4);
  const auto train = targets_of(g, 0);
  std::vector<NodeId> peers;
  for (NodeId z = 1; z < 20; ++z) peers.push_back(z);
  const auto ranking = individual_errors(g, train, peers, OpinionVariant::StandardPQ);
  REQUIRE(ranking.entries.size() == 2 * peers.size());
  for (const auto& c : ranking.entries) {
    std::size_t err = 0;
    for (const auto& t : train)
      if (c.influence * g.sign(c.peer, t.node) != t.sign) ++err;
    CHECK(c.error == err);
  }
  for (std::size_t i = 1; i < ranking.entries.size(); ++i) {
    const auto& a = ranking.entries[i - 1];
    const auto& b = ranking.entries[i];
    CHECK((a.error < b.error ||
           (a.error == b.error &&
            (a.peer < b.peer || (a.peer == b.peer && a.influence > b.influence)))));
  }
}

TEST_CASE("a target the peer never rated is an error for both signs") {
  const auto g = graph_from(3, {{0, 2, 1}});
  const Target train[] = {{2, 1}};
  const NodeId peers[] = {1};
  const auto r = individual_errors(g, train, peers, OpinionVariant::StandardAdjacent);
  REQUIRE(r.entries.size() == 2);
  CHECK(r.entries[0].error == 1);
  CHECK(r.entries[1].error == 1);
  const auto s = individual_errors(g, train, peers, OpinionVariant::SimpleAdjacent);
  CHECK(s.entries.size() == 1);
}

TEST_CASE("fit over a short candidate list equals the full exhaustive fit") {
  // fewer candidates than d: one subproblem over everything
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto g = testing::random_graph(8, 0.6, 0.3, seed);
    const auto all = targets_of(g, 0);
    if (all.size() < 2) continue;
    const std::vector<Target> train(all.begin(), all.begin() + all.size() / 2 + 1);
    const std::vector<Target> validation(all.begin() + all.size() / 2 + 1, all.end());
    const std::vector<NodeId> peers{1, 2, 3, 4};
    auto config = small_config();
    const auto ranking = individual_errors(g, train, peers, config.policy.variant);
    const auto fit = fit_subset(g, 0, ranking.entries, train, validation, config, 1);

    // oracle: per lambda, enumerate every subset of the 8 variables by the
    // definitional loss, then pick the lambda by held-out sign errors
    std::vector<VariableLabel> vars;
    for (const auto& c : ranking.entries) vars.push_back({c.peer, c.influence});
    const auto& held = validation.empty() ? train : validation;
    std::size_t best_err = SIZE_MAX;
    for (double lambda : config.lambda_grid()) {
      double best = 1e300;
      Bits arg;
      int arg_bits = 99;
      for (std::uint64_t mask = 0; mask < 256; ++mask) {
        const auto b = testing::bits_of(mask, 8);
        const double loss = testing::squared_loss(g, vars, b, train, lambda, 4.0);
        const int count = std::popcount(mask);
        // same preference as the solver: lowest loss, then fewest peers
        if (loss < best - 1e-9 || (loss <= best + 1e-9 && count < arg_bits))
          best = std::min(best, loss), arg = b, arg_bits = count;
      }
      std::vector<TrustedPeer> set;
      for (std::size_t i = 0; i < 8; ++i)
        if (arg[i]) set.push_back({vars[i].peer, vars[i].influence});
      best_err = std::min(best_err, prediction_errors(g, set, held));
    }
    CHECK(fit.validation_error == best_err);
  }
}

TEST_CASE("empty validation selects on the training data") {
  const auto g = graph_from(4, {{1, 2, 1}, {1, 3, -1}, {0, 2, 1}, {0, 3, -1}});
  const auto train = targets_of(g, 0);
  const NodeId peers[] = {1, 2, 3};
  const auto config = small_config();
  const auto ranking = individual_errors(g, train, peers, config.policy.variant);
  const auto fit = fit_subset(g, 0, ranking.entries, train, {}, config, 1);
  CHECK(fit.selected_on_training);
  CHECK(fit.validation_error == 0);
  const auto node = train_node(g, 0, train, {}, peers, config);
  CHECK(node.log.selected_on_training);
  CHECK(node.predictor.trusted == std::vector<TrustedPeer>{{1, 1}});
}

TEST_CASE("lambda above the bound yields an empty fit") {
  const auto g = testing::random_graph(10, 0.5, 0.3, 6);
  const auto train = targets_of(g, 0);
  const NodeId peers[] = {1, 2, 3};
  auto config = small_config();
  const double n = 3.0, td = static_cast<double>(train.size());
  config.lambda_min = config.lambda_max = 2 * td / n + td / (n * n) + 0.01;
  const auto ranking = individual_errors(g, train, peers, config.policy.variant);
  CHECK(fit_subset(g, 0, ranking.entries, train, train, config, 1).trusted.empty());
}

TEST_CASE("greedy training never ends worse than the empty predictor") {
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    const auto g = testing::random_graph(30, 0.3, 0.35, 40 + seed);
    const auto split = split_dataset(g, 0.2, seed);
    auto config = small_config();
    config.d = 6;
    const auto ex = group_by_source(g.node_count(), split.train, split.validation);
    PeerFinder finder(g);
    for (NodeId x = 0; x < 5; ++x) {
      if (ex.train[x].empty()) continue;
      const auto peers = finder.peers(x, config.policy);
      const auto r = train_node(g, x, ex.train[x], ex.validation[x], peers, config);
      const auto& held = ex.validation[x].empty() ? ex.train[x] : ex.validation[x];
      const auto baseline = prediction_errors(g, {}, held);
      CHECK(r.log.validation_error == prediction_errors(g, r.predictor.trusted, held));
      CHECK(r.log.validation_error <= baseline);
      if (r.log.slices_accepted == 0) CHECK(r.predictor.trusted.empty());
      CHECK(r.log.validation_error + r.log.slices_accepted <= baseline);
      CHECK(r.log.slices_fitted <= r.log.slices_accepted + 1);
      CHECK(r.log.lambdas.size() == r.log.slices_fitted);
    }
  }
}

TEST_CASE("perfect first slice stops after the second") {
  // x=0 copies peer 1 exactly; many peers otherwise
  std::vector<SignedEdge> edges;
  const NodeId n = 30;
  std::mt19937_64 rng(3);
  for (NodeId y = 2; y < n; ++y) {
    const int s = rng() % 2 ? 1 : -1;
    edges.push_back({0, y, s});
    edges.push_back({1, y, s});
    for (NodeId z = 2; z < n; ++z)
      if (z != y && rng() % 3 == 0) edges.push_back({z, y, rng() % 2 ? 1 : -1});
  }
  const auto g = graph_from(n, edges);
  const auto train = targets_of(g, 0);
  std::vector<NodeId> peers;
  for (NodeId z = 1; z < n; ++z) peers.push_back(z);
  auto config = small_config();
  config.d = 1;  // the first slice is exactly the copied peer
  const auto r = train_node(g, 0, train, train, peers, config);
  CHECK(r.log.slices_accepted == 1);
  CHECK(r.log.slices_fitted == 2);
  CHECK(r.log.validation_error == 0);
  CHECK(r.predictor.trusted == std::vector<TrustedPeer>{{1, 1}});
}

TEST_CASE("nodes without training edges keep empty predictors") {
  const auto g = graph_from(3, {{0, 1, 1}});
  DatasetSplit split;
  split.validation = {{0, 1, 1}};
  const auto model = train_all(g, split, small_config(), 1);
  CHECK(model.logs.empty());
  for (const auto& p : model.predictors) CHECK(p.trusted.empty());
}

TEST_CASE("per-node training is independent of the other nodes") {
  const auto g = testing::random_graph(25, 0.35, 0.3, 77);
  const auto split = split_dataset(g, 0.1, 2);
  auto config = small_config();
  config.d = 6;
  const auto together = train_all(g, split, config, 3);
  const auto ex = group_by_source(g.node_count(), split.train, split.validation);
  for (NodeId x = 0; x < 25; ++x) {
    if (ex.train[x].empty()) continue;
    std::vector<NodePredictor> alone;
    const NodeId only[] = {x};
    train_nodes(g, ex, only, config, 1,
                [&](const NodeTrainResult& r) { alone.push_back(r.predictor); });
    REQUIRE(alone.size() == 1);
    CHECK(alone[0] == together.predictors[x]);
  }
}

TEST_CASE("training is deterministic across worker counts and solvers agree") {
  const auto g = testing::random_graph(30, 0.3, 0.3, 12);
  const auto split = split_dataset(g, 0.1, 5);
  auto config = small_config();
  config.d = 6;
  const auto a = train_all(g, split, config, 1);
  const auto b = train_all(g, split, config, 4);
  CHECK(a.predictors == b.predictors);
  REQUIRE(a.logs.size() == b.logs.size());
  for (std::size_t i = 0; i < a.logs.size(); ++i)
    CHECK(format_log_line(a.logs[i]) == format_log_line(b.logs[i]));

  config.solver = SolverKind::Tabu;
  const auto t1 = train_all(g, split, config, 1);
  const auto t4 = train_all(g, split, config, 4);
  CHECK(t1.predictors == t4.predictors);
}

TEST_CASE("worker failures propagate") {
  const auto g = graph_from(3, {{0, 1, 1}, {0, 2, 1}});
  NodeExamples ex = group_by_source(3, g.edges(), {});
  const NodeId nodes[] = {0};
  CHECK_THROWS_AS(train_nodes(g, ex, nodes, small_config(), 2,
                              [](const NodeTrainResult&) {
                                throw DataError("sink failed");
                              }),
                  DataError);
}

TEST_CASE("log line format") {
  NodeTrainLog log;
  log.node = 4;
  log.candidates = 10;
  log.slices_fitted = 2;
  log.slices_accepted = 1;
  log.trusted = 3;
  log.lambdas = {0.1, 0.25};
  log.validation_error = 7;
  CHECK(format_log_line(log) == "4\t10\t2\t1\t3\t0.10,0.25\t7\t-");
  log.selected_on_training = true;
  CHECK(format_log_line(log).ends_with("\tselected-on-training"));
  CHECK(log_header().starts_with("node\t"));
}
