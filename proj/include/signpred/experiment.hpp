#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "signpred/eval.hpp"
#include "signpred/graph.hpp"
#include "signpred/trainer.hpp"

namespace signpred {

enum class DatasetFormat { Edges, Ratings };

/// Everything a command needs. Populated from a key=value file and/or
/// command-line flags that use the same key names.
struct ExperimentConfig {
  std::string dataset;
  DatasetFormat format = DatasetFormat::Edges;
  int rating_threshold = 3;
  TrainConfig train;
  Regime regime = Regime::Raw;
  bool hide_test_signs = false;
  std::string out;
  std::string predictors;  // evaluate input; defaults to <out>/predictors.txt
  std::size_t workers = 0;
  std::vector<std::size_t> p_list;
  std::vector<std::size_t> q_list;
  PlantedParams planted;

  /// Applies one setting. Throws ConfigError for unknown keys or values.
  void set(std::string_view key, std::string_view value);
  /// Reads `key = value` lines (`#` comments). Throws ConfigError/DataError.
  void load_file(const std::string& path);
};

/// Every key accepted by ExperimentConfig::set, in help order.
const std::vector<std::string>& config_keys();

/// Loads the configured dataset (edge list or ratings).
SignedGraph load_dataset(const ExperimentConfig& cfg);

/// Header fields stored with a predictor file; they pin the split and the
/// id mapping the predictors belong to.
struct PredictorFileHeader {
  std::uint64_t graph_hash = 0;
  OpinionVariant variant = OpinionVariant::StandardPQ;
  std::size_t p = 0;
  std::size_t d = 0;
  std::string solver;
  std::string lambdas;
  std::uint64_t seed = 0;
  double test_fraction = 0.1;
  bool balanced = false;
  bool hide_test_signs = false;

  friend bool operator==(const PredictorFileHeader&,
                         const PredictorFileHeader&) = default;
};

PredictorFileHeader make_header(const SignedGraph& g, const ExperimentConfig& cfg);
void write_header(std::ostream& out, const PredictorFileHeader& h);

struct PredictorFile {
  PredictorFileHeader header;
  std::vector<NodePredictor> predictors;  // ascending source
};

/// Throws DataError on malformed content.
PredictorFile read_predictor_file(std::istream& in);

/// The graph, split and feature view a configuration trains and tests on.
struct PreparedData {
  SignedGraph graph;     // balanced when requested
  DatasetSplit split;
  SignedGraph features;  // what the model observes
};

PreparedData prepare_data(const SignedGraph& g, bool balanced,
                          const TrainConfig& train, bool hide_test_signs);

int cmd_stats(const ExperimentConfig& cfg, std::ostream& out);
int cmd_convert(const ExperimentConfig& cfg, std::ostream& out);
int cmd_train(const ExperimentConfig& cfg, std::ostream& out);
int cmd_evaluate(const ExperimentConfig& cfg, std::ostream& out);
int cmd_sweep(const ExperimentConfig& cfg, std::ostream& out);
int cmd_synth(const ExperimentConfig& cfg, std::ostream& out);

/// Full command-line entry point; returns the process exit code
/// (0 ok, 2 config error, 3 data error, 4 internal invariant failure).
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace signpred
