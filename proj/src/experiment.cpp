#include "signpred/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "signpred/error.hpp"

namespace signpred {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  value = trim(value);
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size())
    throw ConfigError(fmt::format("{}: '{}' is not a valid number", key, value));
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  value = trim(value);
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw ConfigError(fmt::format("{}: '{}' is not a boolean", key, value));
}

std::vector<std::size_t> parse_list(std::string_view key, std::string_view value) {
  std::vector<std::size_t> out;
  while (!value.empty()) {
    const auto comma = value.find(',');
    out.push_back(parse_number<std::size_t>(key, value.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ConfigError(fmt::format("{}: empty list", key));
  return out;
}

std::string lambda_signature(const TrainConfig& t) {
  return fmt::format("{:g}:{:g}:{:g}", t.lambda_min, t.lambda_max, t.lambda_step);
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path));
  return in;
}

std::ofstream open_output(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

void require(bool ok, std::string_view what) {
  if (!ok) throw ConfigError(std::string(what));
}

std::vector<NodePredictor> predictor_table(std::size_t n,
                                           const std::vector<NodePredictor>& list) {
  std::vector<NodePredictor> table(n);
  for (NodeId x = 0; x < n; ++x) table[x].source = x;
  for (const auto& p : list) {
    if (p.source >= n)
      throw DataError(fmt::format("predictor for node {} outside the graph", p.source));
    for (const auto& t : p.trusted)
      if (t.peer >= n)
        throw DataError(fmt::format("trusted peer {} outside the graph", t.peer));
    table[p.source] = p;
  }
  return table;
}

EvaluationReport run_evaluation(const PreparedData& data,
                                std::span<const NodePredictor> predictors,
                                const PeerPolicy& policy, Regime regime,
                                std::uint64_t seed, std::size_t workers) {
  EvaluationReport r;
  if (regime == Regime::AveragedResults) {
    r = evaluate_averaged(data.features, predictors, data.split.test, policy, seed,
                          workers);
  } else {
    r = evaluate(data.features, predictors, data.split.test, policy, workers);
  }
  r.regime = regime;
  return r;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "dataset",      "format",       "rating-threshold", "variant",
      "p",            "q",            "d",                "lambda-min",
      "lambda-max",   "lambda-step",  "solver",           "tabu-iters",
      "tabu-time-ms", "tabu-tenure",  "normalizer",       "test-fraction",
      "seed",         "regime",       "hide-test-signs",  "workers",
      "out",          "predictors",   "p-list",           "q-list",
      "synth-n",      "synth-peers",  "synth-density",    "synth-noise"};
  return keys;
}

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "dataset") {
    dataset = value;
  } else if (key == "format") {
    if (value == "edges") format = DatasetFormat::Edges;
    else if (value == "ratings") format = DatasetFormat::Ratings;
    else throw ConfigError(fmt::format("format: unknown value '{}'", value));
  } else if (key == "rating-threshold") {
    rating_threshold = parse_number<int>(key, value);
  } else if (key == "variant") {
    train.policy.variant = parse_variant(value);
  } else if (key == "p") {
    train.policy.p = parse_number<std::size_t>(key, value);
  } else if (key == "q") {
    train.policy.q = parse_number<std::size_t>(key, value);
  } else if (key == "d") {
    train.d = parse_number<std::size_t>(key, value);
  } else if (key == "lambda-min") {
    train.lambda_min = parse_number<double>(key, value);
  } else if (key == "lambda-max") {
    train.lambda_max = parse_number<double>(key, value);
  } else if (key == "lambda-step") {
    train.lambda_step = parse_number<double>(key, value);
  } else if (key == "solver") {
    train.solver = parse_solver(value);
  } else if (key == "tabu-iters") {
    train.tabu.max_iterations = parse_number<std::size_t>(key, value);
  } else if (key == "tabu-time-ms") {
    train.tabu.time_limit =
        std::chrono::milliseconds(parse_number<std::int64_t>(key, value));
  } else if (key == "tabu-tenure") {
    train.tabu.tenure = parse_number<std::size_t>(key, value);
  } else if (key == "normalizer") {
    train.normalizer = parse_number<double>(key, value);
  } else if (key == "test-fraction") {
    train.test_fraction = parse_number<double>(key, value);
  } else if (key == "seed") {
    train.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "regime") {
    regime = parse_regime(value);
  } else if (key == "hide-test-signs") {
    hide_test_signs = parse_bool(key, value);
  } else if (key == "workers") {
    workers = parse_number<std::size_t>(key, value);
  } else if (key == "out") {
    out = value;
  } else if (key == "predictors") {
    predictors = value;
  } else if (key == "p-list") {
    p_list = parse_list(key, value);
  } else if (key == "q-list") {
    q_list = parse_list(key, value);
  } else if (key == "synth-n") {
    planted.n = parse_number<std::size_t>(key, value);
  } else if (key == "synth-peers") {
    planted.peers_per_node = parse_number<std::size_t>(key, value);
  } else if (key == "synth-density") {
    planted.density = parse_number<double>(key, value);
  } else if (key == "synth-noise") {
    planted.noise = parse_number<double>(key, value);
  } else {
    throw ConfigError(fmt::format("unknown configuration key '{}'", key));
  }
}

void ExperimentConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(std::string_view(line).substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(fmt::format("{}:{}: expected key=value", path, lineno));
    set(trim(body.substr(0, eq)), body.substr(eq + 1));
  }
}

SignedGraph load_dataset(const ExperimentConfig& cfg) {
  require(!cfg.dataset.empty(), "--dataset is required");
  if (!fs::exists(cfg.dataset))
    throw DataError(fmt::format("dataset '{}' does not exist", cfg.dataset));
  auto in = open_input(cfg.dataset);
  LoadStats stats;
  SignedGraph g = cfg.format == DatasetFormat::Ratings
                      ? load_ratings(in, cfg.rating_threshold, &stats)
                      : load_edge_list(in, {}, &stats);
  if (stats.self_loops_dropped > 0)
    std::cerr << fmt::format("warning: dropped {} self-loop(s)\n",
                             stats.self_loops_dropped);
  return g;
}

PredictorFileHeader make_header(const SignedGraph& g, const ExperimentConfig& cfg) {
  PredictorFileHeader h;
  h.graph_hash = g.mapping_hash();
  h.variant = cfg.train.policy.variant;
  h.p = cfg.train.policy.p;
  h.d = cfg.train.d;
  h.solver = to_string(cfg.train.solver);
  h.lambdas = lambda_signature(cfg.train);
  h.seed = cfg.train.seed;
  h.test_fraction = cfg.train.test_fraction;
  h.balanced = cfg.regime == Regime::BalancedDataset;
  h.hide_test_signs = cfg.hide_test_signs;
  return h;
}

void write_header(std::ostream& out, const PredictorFileHeader& h) {
  out << "# signpred predictors v1\n"
      << fmt::format("# graph_hash={:016x}\n", h.graph_hash)
      << "# variant=" << to_string(h.variant) << '\n'
      << "# p=" << h.p << '\n'
      << "# d=" << h.d << '\n'
      << "# solver=" << h.solver << '\n'
      << "# lambdas=" << h.lambdas << '\n'
      << "# seed=" << h.seed << '\n'
      << fmt::format("# test_fraction={:g}\n", h.test_fraction)
      << "# balanced=" << (h.balanced ? 1 : 0) << '\n'
      << "# hide_test_signs=" << (h.hide_test_signs ? 1 : 0) << '\n';
}

PredictorFile read_predictor_file(std::istream& in) {
  PredictorFile file;
  std::string line;
  std::set<std::string> seen;
  bool magic = false;
  while (std::getline(in, line)) {
    std::string_view body = trim(line);
    if (body.empty()) continue;
    if (body.front() != '#') {
      file.predictors.push_back(parse_predictor(body));
      continue;
    }
    body.remove_prefix(1);
    body = trim(body);
    if (body == "signpred predictors v1") {
      magic = true;
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) continue;
    const auto key = body.substr(0, eq);
    const auto value = body.substr(eq + 1);
    try {
      if (key == "graph_hash") {
        auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(),
                                       file.header.graph_hash, 16);
        if (ec != std::errc{}) throw ConfigError("bad hash");
      } else if (key == "variant") {
        file.header.variant = parse_variant(value);
      } else if (key == "p") {
        file.header.p = parse_number<std::size_t>(key, value);
      } else if (key == "d") {
        file.header.d = parse_number<std::size_t>(key, value);
      } else if (key == "solver") {
        file.header.solver = value;
      } else if (key == "lambdas") {
        file.header.lambdas = value;
      } else if (key == "seed") {
        file.header.seed = parse_number<std::uint64_t>(key, value);
      } else if (key == "test_fraction") {
        file.header.test_fraction = parse_number<double>(key, value);
      } else if (key == "balanced") {
        file.header.balanced = parse_bool(key, value);
      } else if (key == "hide_test_signs") {
        file.header.hide_test_signs = parse_bool(key, value);
      } else {
        continue;
      }
    } catch (const ConfigError& e) {
      throw DataError(fmt::format("predictor file header: {}", e.what()));
    }
    seen.emplace(key);
  }
  if (!magic) throw DataError("not a signpred predictor file");
  for (const char* k : {"graph_hash", "variant", "p", "seed", "test_fraction"})
    if (!seen.count(k))
      throw DataError(fmt::format("predictor file header lacks '{}'", k));
  std::sort(file.predictors.begin(), file.predictors.end(),
            [](const NodePredictor& a, const NodePredictor& b) {
              return a.source < b.source;
            });
  for (std::size_t i = 1; i < file.predictors.size(); ++i)
    if (file.predictors[i].source == file.predictors[i - 1].source)
      throw DataError(fmt::format("node {} appears twice in predictor file",
                                  file.predictors[i].source));
  return file;
}

PreparedData prepare_data(const SignedGraph& g, bool balanced,
                          const TrainConfig& train, bool hide_test_signs) {
  PreparedData data;
  data.graph = balanced ? g.restricted_to(balance_by_sampling(g.edges(), train.seed))
                        : g;
  data.split = split_dataset(data.graph, train.test_fraction, train.seed);
  data.features = feature_graph(data.graph, data.split, hide_test_signs);
  return data;
}

int cmd_stats(const ExperimentConfig& cfg, std::ostream& out) {
  write_stats(compute_stats(load_dataset(cfg)), out);
  return 0;
}

int cmd_convert(const ExperimentConfig& cfg, std::ostream& out) {
  ExperimentConfig ratings = cfg;
  ratings.format = DatasetFormat::Ratings;
  const SignedGraph g = load_dataset(ratings);
  if (cfg.out.empty() || cfg.out == "-") {
    write_edge_list(g, out);
  } else {
    auto file = open_output(cfg.out);
    write_edge_list(g, file);
    write_stats(compute_stats(g), out);
  }
  return 0;
}

int cmd_train(const ExperimentConfig& cfg, std::ostream& out) {
  cfg.train.validate();
  require(!cfg.out.empty(), "--out (output directory) is required");
  const SignedGraph g = load_dataset(cfg);
  const bool balanced = cfg.regime == Regime::BalancedDataset;
  const PreparedData data = prepare_data(g, balanced, cfg.train, cfg.hide_test_signs);
  const PredictorFileHeader header = make_header(g, cfg);

  const fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(fmt::format("cannot create '{}': {}", cfg.out, ec.message()));
  const fs::path pred_path = dir / "predictors.txt";
  const fs::path log_path = dir / "train_log.tsv";

  std::map<NodeId, NodePredictor> done;
  std::map<NodeId, std::string> log_lines;
  if (fs::exists(pred_path)) {
    auto in = open_input(pred_path.string());
    PredictorFile existing = read_predictor_file(in);
    if (!(existing.header == header))
      throw ConfigError(fmt::format(
          "'{}' was produced with different settings; remove it or choose another --out",
          pred_path.string()));
    for (auto& p : existing.predictors) done.emplace(p.source, std::move(p));
    if (fs::exists(log_path)) {
      auto log_in = open_input(log_path.string());
      std::string line;
      while (std::getline(log_in, line)) {
        NodeId node = 0;
        auto [p, perr] = std::from_chars(line.data(), line.data() + line.size(), node);
        if (perr == std::errc{} && p != line.data() && done.count(node))
          log_lines[node] = line;
      }
    }
  } else {
    auto fresh = open_output(pred_path);
    write_header(fresh, header);
  }

  const NodeExamples examples =
      group_by_source(g.node_count(), data.split.train, data.split.validation);
  std::vector<NodeId> todo;
  std::size_t skipped = 0;
  for (NodeId x = 0; x < g.node_count(); ++x) {
    if (examples.train[x].empty()) continue;
    if (done.count(x)) ++skipped;
    else todo.push_back(x);
  }

  {
    auto pred_out = open_output(pred_path, std::ios::app);
    auto log_out = open_output(log_path, std::ios::app);
    train_nodes(data.features, examples, todo, cfg.train, cfg.workers,
                [&](const NodeTrainResult& r) {
                  write_predictor(pred_out, r.predictor);
                  pred_out.flush();
                  const std::string line = format_log_line(r.log);
                  log_out << line << '\n';
                  log_out.flush();
                  done[r.predictor.source] = r.predictor;
                  log_lines[r.predictor.source] = line;
                });
  }

  // final rewrite in node order makes reruns byte-identical
  {
    auto pred_out = open_output(pred_path);
    write_header(pred_out, header);
    for (const auto& [node, p] : done) write_predictor(pred_out, p);
    auto log_out = open_output(log_path);
    log_out << log_header() << '\n';
    for (const auto& [node, line] : log_lines) log_out << line << '\n';
  }

  std::size_t trusted = 0;
  for (const auto& [node, p] : done) trusted += p.trusted.size();
  out << fmt::format(
      "trained {} node(s), {} already present; {} trusted peers in total\n"
      "predictors: {}\nlog:        {}\n",
      todo.size(), skipped, trusted, pred_path.string(), log_path.string());
  return 0;
}

int cmd_evaluate(const ExperimentConfig& cfg, std::ostream& out) {
  const std::string path =
      !cfg.predictors.empty()
          ? cfg.predictors
          : (cfg.out.empty() ? std::string()
                             : (fs::path(cfg.out) / "predictors.txt").string());
  require(!path.empty(), "--predictors or --out is required");
  const SignedGraph g = load_dataset(cfg);
  auto in = open_input(path);
  const PredictorFile file = read_predictor_file(in);
  if (file.header.graph_hash != g.mapping_hash())
    throw DataError(fmt::format(
        "predictor file was trained on a different id mapping ({:016x} vs {:016x})",
        file.header.graph_hash, g.mapping_hash()));
  const bool want_balanced = cfg.regime == Regime::BalancedDataset;
  if (want_balanced != file.header.balanced)
    throw ConfigError(want_balanced
                          ? "predictors were not trained on a balanced dataset"
                          : "predictors were trained on a balanced dataset; use --regime balanced");

  TrainConfig train = cfg.train;
  train.seed = file.header.seed;
  train.test_fraction = file.header.test_fraction;
  const PreparedData data =
      prepare_data(g, file.header.balanced, train, file.header.hide_test_signs);
  const auto table = predictor_table(g.node_count(), file.predictors);
  PeerPolicy policy = cfg.train.policy;
  policy.variant = file.header.variant;
  policy.p = file.header.p;

  const EvaluationReport r =
      run_evaluation(data, table, policy, cfg.regime, train.seed, cfg.workers);
  out << report_header() << '\n' << format_report_row(r) << '\n';
  write_report_summary(out, r);
  return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, std::ostream& out) {
  cfg.train.validate();
  require(!cfg.p_list.empty() && !cfg.q_list.empty(),
          "--p-list and --q-list are required");
  const SignedGraph g = load_dataset(cfg);
  const bool balanced = cfg.regime == Regime::BalancedDataset;
  const PreparedData data = prepare_data(g, balanced, cfg.train, cfg.hide_test_signs);
  // p only changes the peer set of the pq variant
  const bool p_matters = cfg.train.policy.variant == OpinionVariant::StandardPQ;

  out << "p\tq\t" << report_header() << '\n';
  std::optional<TrainedModel> shared;
  for (std::size_t p : cfg.p_list) {
    TrainConfig train = cfg.train;
    train.policy.p = p;
    if (p_matters || !shared)
      shared = train_all(data.features, data.split, train, cfg.workers);
    for (std::size_t q : cfg.q_list) {
      PeerPolicy policy = train.policy;
      policy.q = q;
      const EvaluationReport r = run_evaluation(data, shared->predictors, policy,
                                                cfg.regime, train.seed, cfg.workers);
      out << p << '\t' << q << '\t' << format_report_row(r) << '\n';
    }
  }
  return 0;
}

int cmd_synth(const ExperimentConfig& cfg, std::ostream& out) {
  require(!cfg.out.empty(), "--out (edge list path) is required");
  auto [g, model] = generate_planted(cfg.planted, cfg.train.seed);
  {
    auto file = open_output(cfg.out);
    write_edge_list(g, file);
  }
  {
    auto file = open_output(cfg.out + ".model");
    file << "# planted model: hidden trusted peers (dense ids = labels)\n";
    file << "# anchors=" << model.anchors << " flipped=" << model.flipped.size() << '\n';
    for (const auto& p : model.hidden) write_predictor(file, p);
  }
  write_stats(compute_stats(g), out);
  return 0;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Edge sign prediction from learned trusted peers"};
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const ExperimentConfig&, std::ostream&);
  };
  const Command commands[] = {
      {"stats", "Print node/edge counts and sign percentages", cmd_stats},
      {"convert", "Convert ratings (user item rating ts) to a signed edge list", cmd_convert},
      {"train", "Train per-node predictors", cmd_train},
      {"evaluate", "Evaluate a predictor file on the held-out edges", cmd_evaluate},
      {"sweep", "Train and evaluate over a (p, q) grid", cmd_sweep},
      {"synth", "Generate a planted-model graph", cmd_synth},
  };

  static const std::map<std::string, std::string> help = {
      {"dataset", "Input file"},
      {"format", "edges | ratings"},
      {"rating-threshold", "Ratings at or below this become negative (default 3)"},
      {"variant", "simple-adjacent | standard-adjacent | standard-pq"},
      {"p", "Common neighbours a standard-pq peer needs (default 15)"},
      {"q", "Peers that must touch the target before predicting (default 20)"},
      {"d", "Candidates per QUBO subset (default 10)"},
      {"lambda-min", "Smallest sparsity penalty tried (default 0.1)"},
      {"lambda-max", "Largest sparsity penalty tried (default 0.35)"},
      {"lambda-step", "Penalty grid step (default 0.05)"},
      {"solver", "exact | tabu"},
      {"tabu-iters", "Tabu iteration budget (default 200*m)"},
      {"tabu-time-ms", "Tabu time limit per subproblem (default 1000)"},
      {"tabu-tenure", "Tabu tenure (default max(7, m/4), at most m/2)"},
      {"normalizer", "Opinion normaliser N (default: peers in the subset)"},
      {"test-fraction", "Share of edges held out for testing (default 0.1)"},
      {"seed", "Random seed (default 1)"},
      {"regime", "raw | averaged | balanced"},
      {"workers", "Worker threads (default: hardware concurrency)"},
      {"out", "Output directory (train) or file (convert, synth)"},
      {"predictors", "Predictor file for evaluate (default <out>/predictors.txt)"},
      {"p-list", "Comma-separated p values for sweep"},
      {"q-list", "Comma-separated q values for sweep"},
      {"synth-n", "Planted graph size (default 200)"},
      {"synth-peers", "Planted peers per node (default 5)"},
      {"synth-density", "Planted target probability (default 0.5)"},
      {"synth-noise", "Planted sign flip probability (default 0)"},
  };
  std::map<std::string, std::string> values;
  std::map<std::string, std::vector<std::pair<CLI::Option*, CLI::App*>>> options;
  std::string config_path;
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "key=value configuration file");
    for (const auto& key : config_keys()) {
      CLI::Option* opt =
          key == "hide-test-signs"
              ? sub->add_flag("--" + key, "Withhold test-edge signs from the model")
              : sub->add_option("--" + key, values[key], help.at(key));
      options[key].emplace_back(opt, sub);
    }
    subs.emplace_back(sub, &c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    for (const auto& [sub, cmd] : subs) {
      if (!sub->parsed()) continue;
      ExperimentConfig cfg;
      if (!config_path.empty()) cfg.load_file(config_path);
      for (const auto& [key, opts] : options) {
        for (const auto& [opt, owner] : opts) {
          if (owner != sub || opt->count() == 0) continue;
          cfg.set(key, key == "hide-test-signs" ? "1" : values[key]);
        }
      }
      return cmd->run(cfg, out);
    }
    err << app.help();
    return 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 4;
  }
}

}  // namespace signpred
