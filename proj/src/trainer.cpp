#include "signpred/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include <fmt/format.h>

#include "signpred/error.hpp"
#include "signpred/random.hpp"

namespace signpred {

std::string_view to_string(SolverKind s) {
  return s == SolverKind::Exact ? "exact" : "tabu";
}

SolverKind parse_solver(std::string_view name) {
  if (name == "exact") return SolverKind::Exact;
  if (name == "tabu") return SolverKind::Tabu;
  throw ConfigError(fmt::format("unknown solver '{}'", name));
}

void TrainConfig::validate() const {
  std::vector<std::string> problems;
  if (d < 1) problems.emplace_back("d must be at least 1");
  if (solver == SolverKind::Exact && d > kMaxExactVariables)
    problems.push_back(fmt::format(
        "d={} exceeds the exact solver limit of {}; use --solver tabu", d,
        kMaxExactVariables));
  if (!(lambda_min >= 0.0)) problems.emplace_back("lambda-min must be >= 0");
  if (!(lambda_min <= lambda_max))
    problems.emplace_back("lambda-min must not exceed lambda-max");
  if (!(lambda_step > 0.0)) problems.emplace_back("lambda-step must be > 0");
  if (!(normalizer >= 0.0)) problems.emplace_back("normalizer must be >= 0");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    problems.emplace_back("test fraction must lie in (0, 1)");
  if (tabu.time_limit.count() <= 0)
    problems.emplace_back("tabu time limit must be positive");
  if (problems.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& p : problems) msg += "\n  - " + p;
  throw ConfigError(msg);
}

std::vector<double> TrainConfig::lambda_grid() const {
  std::vector<double> grid;
  for (std::size_t k = 0;; ++k) {
    const double lambda = lambda_min + static_cast<double>(k) * lambda_step;
    if (lambda > lambda_max + 1e-9) break;
    grid.push_back(lambda);
  }
  return grid;
}

CandidateRanking individual_errors(const SignedGraph& g,
                                   std::span<const Target> train,
                                   std::span<const NodeId> peers,
                                   OpinionVariant variant) {
  CandidateRanking ranking;
  ranking.entries.reserve(2 * peers.size());
  const bool both = uses_influence(variant);
  for (NodeId v : peers) {
    std::size_t agree = 0, disagree = 0;
    for (const auto& t : train) {
      const int s = extended_sign(g, v, t.node);
      agree += s == t.sign ? 1 : 0;
      disagree += s == -t.sign ? 1 : 0;
    }
    ranking.entries.push_back({v, 1, train.size() - agree});
    if (both) ranking.entries.push_back({v, -1, train.size() - disagree});
  }
  std::sort(ranking.entries.begin(), ranking.entries.end(),
            [](const RankedCandidate& a, const RankedCandidate& b) {
              if (a.error != b.error) return a.error < b.error;
              if (a.peer != b.peer) return a.peer < b.peer;
              return a.influence > b.influence;
            });
  return ranking;
}

std::size_t prediction_errors(const SignedGraph& g,
                              std::span<const TrustedPeer> trusted,
                              std::span<const Target> examples) {
  std::size_t errors = 0;
  for (const auto& t : examples) {
    int f = 0;
    for (const auto& z : trusted) f += z.influence * extended_sign(g, z.peer, t.node);
    errors += decide(f) != t.sign ? 1 : 0;
  }
  return errors;
}

FitResult fit_subset(const SignedGraph& g, NodeId x,
                     std::span<const RankedCandidate> slice,
                     std::span<const Target> train,
                     std::span<const Target> validation,
                     const TrainConfig& config, std::uint64_t seed) {
  std::vector<VariableLabel> vars;
  vars.reserve(slice.size());
  for (const auto& c : slice) {
    if (c.peer == x) throw InvariantError("source listed among its candidates");
    vars.push_back({c.peer, c.influence});
  }
  const SubproblemBuilder builder(g, std::move(vars), train);
  const double normalizer =
      config.normalizer > 0.0 ? config.normalizer
                              : static_cast<double>(builder.distinct_peers());
  const bool on_training = validation.empty();
  const auto held_out = on_training ? train : validation;

  std::optional<FitResult> best;
  for (double lambda : config.lambda_grid()) {
    const QuboInstance q = builder.build(lambda, normalizer);
    Assignment a;
    if (config.solver == SolverKind::Exact) {
      a = solve_exact(q);
    } else {
      TabuParams params = config.tabu;
      params.seed = seed;
      a = solve_tabu(q, params);
    }
    canonicalize(q, a);

    std::vector<TrustedPeer> trusted;
    const auto labels = q.labels();
    for (std::size_t i = 0; i < a.bits.size(); ++i)
      if (a.bits[i]) trusted.push_back({labels[i].peer, labels[i].influence});
    const std::size_t err = prediction_errors(g, trusted, held_out);
    if (!best || err < best->validation_error) {
      best = FitResult{std::move(trusted), err, lambda, on_training};
    }
  }
  if (!best) throw InvariantError("empty lambda grid");
  return *std::move(best);
}

std::string log_header() {
  return "node\tcandidates\tslices_fitted\tslices_accepted\ttrusted\tlambdas\t"
         "validation_error\tflags";
}

std::string format_log_line(const NodeTrainLog& log) {
  std::string lambdas;
  for (double l : log.lambdas) {
    if (!lambdas.empty()) lambdas += ',';
    lambdas += fmt::format("{:.2f}", l);
  }
  if (lambdas.empty()) lambdas = "-";
  std::string flags;
  if (log.no_training_data) flags = "no-training-data";
  if (log.selected_on_training)
    flags += flags.empty() ? "selected-on-training" : ",selected-on-training";
  if (flags.empty()) flags = "-";
  return fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}", log.node, log.candidates,
                     log.slices_fitted, log.slices_accepted, log.trusted,
                     lambdas, log.validation_error, flags);
}

NodeTrainResult train_node(const SignedGraph& g, NodeId x,
                           std::span<const Target> train,
                           std::span<const Target> validation,
                           std::span<const NodeId> peers,
                           const TrainConfig& config) {
  NodeTrainResult out;
  out.predictor.source = x;
  out.log.node = x;
  const auto held_out = validation.empty() ? train : validation;
  if (train.empty()) {
    out.log.no_training_data = true;
    out.log.validation_error = prediction_errors(g, {}, validation);
    return out;
  }
  out.log.selected_on_training = validation.empty();

  const auto ranking =
      individual_errors(g, train, peers, config.policy.variant);
  const auto& entries = ranking.entries;
  out.log.candidates = entries.size();

  std::vector<TrustedPeer> accumulated;
  std::size_t current_error = prediction_errors(g, accumulated, held_out);
  for (std::size_t start = 0, slice_index = 0; start < entries.size();
       start += config.d, ++slice_index) {
    const auto slice = std::span<const RankedCandidate>(entries).subspan(
        start, std::min(config.d, entries.size() - start));
    const FitResult fit =
        fit_subset(g, x, slice, train, validation, config,
                   mix_seed(mix_seed(config.seed, x), slice_index));
    ++out.log.slices_fitted;
    out.log.lambdas.push_back(fit.lambda);

    std::vector<TrustedPeer> merged = accumulated;
    merged.insert(merged.end(), fit.trusted.begin(), fit.trusted.end());
    merged = make_predictor(x, std::move(merged)).trusted;
    const std::size_t merged_error = prediction_errors(g, merged, held_out);
    if (merged_error >= current_error) break;
    accumulated = std::move(merged);
    current_error = merged_error;
    ++out.log.slices_accepted;
  }

  out.predictor = make_predictor(x, std::move(accumulated));
  out.log.trusted = out.predictor.trusted.size();
  out.log.validation_error = current_error;
  return out;
}

NodeExamples group_by_source(std::size_t n, std::span<const SignedEdge> train,
                             std::span<const SignedEdge> validation) {
  NodeExamples ex;
  ex.train.resize(n);
  ex.validation.resize(n);
  for (const auto& e : train) ex.train.at(e.src).push_back({e.dst, e.sign});
  for (const auto& e : validation)
    ex.validation.at(e.src).push_back({e.dst, e.sign});
  return ex;
}

void train_nodes(const SignedGraph& g, const NodeExamples& examples,
                 std::span<const NodeId> nodes, const TrainConfig& config,
                 std::size_t workers, const NodeResultSink& sink) {
  config.validate();
  if (workers == 0)
    workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(1, nodes.size()));

  std::mutex mu;
  std::condition_variable ready;
  std::deque<NodeTrainResult> done;
  std::exception_ptr failure;
  std::atomic<std::size_t> next{0};
  std::size_t running = workers;

  auto work = [&] {
    PeerFinder finder(g);
    try {
      for (std::size_t k = next++; k < nodes.size(); k = next++) {
        const NodeId x = nodes[k];
        const auto peers = finder.peers(x, config.policy);
        auto result = train_node(g, x, examples.train[x], examples.validation[x],
                                 peers, config);
        std::lock_guard lock(mu);
        done.push_back(std::move(result));
        ready.notify_one();
      }
    } catch (...) {
      std::lock_guard lock(mu);
      if (!failure) failure = std::current_exception();
      next = nodes.size();
    }
    std::lock_guard lock(mu);
    --running;
    ready.notify_one();
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);

  std::unique_lock lock(mu);
  while (true) {
    ready.wait(lock, [&] { return !done.empty() || running == 0; });
    while (!done.empty()) {
      NodeTrainResult r = std::move(done.front());
      done.pop_front();
      lock.unlock();
      sink(r);
      lock.lock();
    }
    if (running == 0) break;
  }
  lock.unlock();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

TrainedModel train_all(const SignedGraph& g, const DatasetSplit& split,
                       const TrainConfig& config, std::size_t workers) {
  const std::size_t n = g.node_count();
  const NodeExamples examples = group_by_source(n, split.train, split.validation);
  std::vector<NodeId> sources;
  for (NodeId x = 0; x < n; ++x)
    if (!examples.train[x].empty()) sources.push_back(x);

  TrainedModel model;
  model.predictors.resize(n);
  for (NodeId x = 0; x < n; ++x) model.predictors[x].source = x;
  train_nodes(g, examples, sources, config, workers,
              [&](const NodeTrainResult& r) {
                model.predictors[r.predictor.source] = r.predictor;
                model.logs.push_back(r.log);
              });
  std::sort(model.logs.begin(), model.logs.end(),
            [](const NodeTrainLog& a, const NodeTrainLog& b) {
              return a.node < b.node;
            });
  return model;
}

}  // namespace signpred
