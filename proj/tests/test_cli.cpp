#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "signpred/error.hpp"
#include "signpred/experiment.hpp"
#include "support.hpp"

using namespace signpred;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "signpred");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("signpred-test-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

// Small planted graph written to disk.
std::string planted_dataset(const TempDir& dir) {
  const auto path = dir / "planted.txt";
  const auto r = cli({"synth", "--out", path, "--synth-n", "60", "--seed", "4"});
  REQUIRE(r.code == 0);
  return path;
}

}  // namespace

TEST_CASE("config keys set the matching fields") {
  ExperimentConfig c;
  c.set("variant", "standard-adjacent");
  c.set("p", "3");
  c.set("q", "4");
  c.set("d", "12");
  c.set("lambda-min", "0.2");
  c.set("solver", "tabu");
  c.set("tabu-iters", "500");
  c.set("regime", "averaged");
  c.set("hide-test-signs", "true");
  c.set("p-list", "1,2,3");
  CHECK(c.train.policy.variant == OpinionVariant::StandardAdjacent);
  CHECK(c.train.policy.p == 3);
  CHECK(c.train.policy.q == 4);
  CHECK(c.train.d == 12);
  CHECK(c.train.lambda_min == 0.2);
  CHECK(c.train.solver == SolverKind::Tabu);
  CHECK(c.train.tabu.max_iterations == 500);
  CHECK(c.regime == Regime::AveragedResults);
  CHECK(c.hide_test_signs);
  CHECK(c.p_list == std::vector<std::size_t>{1, 2, 3});
  CHECK_THROWS_AS(c.set("colour", "red"), ConfigError);
  CHECK_THROWS_AS(c.set("p", "many"), ConfigError);
  CHECK_THROWS_AS(c.set("p", "-1"), ConfigError);
  const std::map<std::string, std::string> samples{
      {"format", "edges"}, {"variant", "simple-adjacent"}, {"solver", "exact"},
      {"regime", "raw"}};
  for (const auto& key : config_keys()) {
    const auto it = samples.find(key);
    CHECK_NOTHROW(ExperimentConfig{}.set(key, it == samples.end() ? "1" : it->second));
  }
}

TEST_CASE("config files use key=value lines") {
  TempDir dir;
  {
    std::ofstream f(dir / "run.cfg");
    f << "# experiment\nd = 8\n\nseed=42  # trailing comment\n";
  }
  ExperimentConfig c;
  c.load_file(dir / "run.cfg");
  CHECK(c.train.d == 8);
  CHECK(c.train.seed == 42);
  {
    std::ofstream f(dir / "bad.cfg");
    f << "d 8\n";
  }
  CHECK_THROWS_AS(c.load_file(dir / "bad.cfg"), ConfigError);
  CHECK_THROWS_AS(c.load_file(dir / "missing.cfg"), ConfigError);
}

TEST_CASE("exit codes") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"train", "--bogus", "1"}).code == 2);
  CHECK(cli({"stats", "--dataset", "/nonexistent/file.txt"}).code == 3);
  TempDir dir;
  const auto data = planted_dataset(dir);
  const auto r = cli({"train", "--dataset", data, "--out", dir / "run", "--d", "25"});
  CHECK(r.code == 2);
  CHECK(r.err.find("exact") != std::string::npos);
  CHECK(cli({"stats", "--help"}).code == 0);
}

TEST_CASE("stats and convert") {
  TempDir dir;
  {
    std::ofstream f(dir / "ratings.txt");
    f << "1 10 5 0\n1 11 2 0\n2 10 4 0\n";
  }
  const auto conv = cli({"convert", "--dataset", dir / "ratings.txt", "--out", dir / "edges.txt"});
  REQUIRE(conv.code == 0);
  CHECK(conv.out == "nodes\tedges\tpos_pct\tneg_pct\n4\t3\t66.7\t33.3\n");
  const auto stats = cli({"stats", "--dataset", dir / "edges.txt"});
  CHECK(stats.out == conv.out);
  const auto direct = cli({"stats", "--dataset", dir / "ratings.txt", "--format", "ratings"});
  CHECK(direct.out == conv.out);
}

TEST_CASE("train then evaluate, reproducibly") {
  TempDir dir;
  const auto data = planted_dataset(dir);
  const std::vector<std::string> train_args{"train", "--dataset", data, "--p", "0",
                                            "--workers", "2", "--out", dir / "a"};
  const auto t = cli(train_args);
  REQUIRE(t.code == 0);
  const auto preds = slurp(dir / "a/predictors.txt");
  CHECK(preds.starts_with("# signpred predictors v1\n"));
  CHECK(slurp(dir / "a/train_log.tsv").starts_with("node\t"));

  SUBCASE("rerun into a fresh directory is byte-identical") {
    auto again = train_args;
    again.back() = dir / "b";
    REQUIRE(cli(again).code == 0);
    CHECK(slurp(dir / "b/predictors.txt") == preds);
    CHECK(slurp(dir / "b/train_log.tsv") == slurp(dir / "a/train_log.tsv"));
  }

  SUBCASE("interrupted run resumes to the same file") {
    // keep the header and the first few predictors only
    std::istringstream in(preds);
    std::ofstream partial(dir / "a/predictors.txt");
    std::string line;
    int body = 0;
    while (std::getline(in, line)) {
      if (!line.starts_with("#") && ++body > 5) break;
      partial << line << '\n';
    }
    partial.close();
    const auto resumed = cli(train_args);
    REQUIRE(resumed.code == 0);
    CHECK(resumed.out.find("5 already present") != std::string::npos);
    CHECK(slurp(dir / "a/predictors.txt") == preds);
  }

  SUBCASE("resuming with other settings is refused") {
    auto other = train_args;
    other.insert(other.end(), {"--d", "7"});
    CHECK(cli(other).code == 2);
  }

  SUBCASE("evaluate reads the predictor file") {
    const auto e = cli({"evaluate", "--dataset", data, "--out", dir / "a", "--q", "0"});
    REQUIRE(e.code == 0);
    CHECK(e.out.starts_with("regime\ttested\tcorrect\taccuracy\tfpr\tfnr\tabstained\nraw\t"));
    const auto avg = cli({"evaluate", "--dataset", data, "--out", dir / "a", "--q", "0",
                          "--regime", "averaged"});
    CHECK(avg.code == 0);
    CHECK(cli({"evaluate", "--dataset", data, "--out", dir / "a", "--regime",
               "balanced"}).code == 2);
  }

  SUBCASE("a different id mapping is rejected") {
    std::ofstream other(dir / "other.txt");
    other << "x y 1\ny z -1\n";
    other.close();
    const auto e = cli({"evaluate", "--dataset", dir / "other.txt", "--predictors",
                        dir / "a/predictors.txt"});
    CHECK(e.code == 3);
  }
}

TEST_CASE("a sweep cell equals train plus evaluate") {
  TempDir dir;
  const auto data = planted_dataset(dir);
  const auto sweep = cli({"sweep", "--dataset", data, "--p-list", "0,30",
                          "--q-list", "0,10"});
  REQUIRE(sweep.code == 0);
  std::istringstream rows(sweep.out);
  std::string header, line;
  std::getline(rows, header);
  CHECK(header == "p\tq\tregime\ttested\tcorrect\taccuracy\tfpr\tfnr\tabstained");
  int cells = 0;
  while (std::getline(rows, line)) {
    ++cells;
    std::istringstream f(line);
    std::string p, q;
    std::getline(f, p, '\t');
    std::getline(f, q, '\t');
    std::string rest;
    std::getline(f, rest);
    const auto out = dir / ("p" + p);
    if (!fs::exists(out))
      REQUIRE(cli({"train", "--dataset", data, "--p", p, "--out", out}).code == 0);
    const auto e = cli({"evaluate", "--dataset", data, "--out", out, "--q", q});
    REQUIRE(e.code == 0);
    std::istringstream er(e.out);
    std::string eh, erow;
    std::getline(er, eh);
    std::getline(er, erow);
    CHECK(erow == rest);
  }
  CHECK(cells == 4);
  CHECK(cli({"sweep", "--dataset", data}).code == 2);
}

TEST_CASE("predictor file header round-trips") {
  PredictorFileHeader h;
  h.graph_hash = 0xdeadbeef12345678ull;
  h.variant = OpinionVariant::SimpleAdjacent;
  h.p = 3;
  h.d = 9;
  h.solver = "tabu";
  h.lambdas = "0.1:0.35:0.05";
  h.seed = 99;
  h.test_fraction = 0.2;
  h.balanced = true;
  std::stringstream buf;
  write_header(buf, h);
  buf << "3 1 1:-\n0 0\n";
  const auto file = read_predictor_file(buf);
  CHECK(file.header == h);
  REQUIRE(file.predictors.size() == 2);
  CHECK(file.predictors[0].source == 0);
  std::istringstream junk("0 0\n");
  CHECK_THROWS_AS(read_predictor_file(junk), DataError);
}

TEST_CASE("synth writes the graph and its model") {
  TempDir dir;
  const auto r = cli({"synth", "--out", dir / "g.txt", "--synth-n", "30",
                      "--synth-noise", "0.1"});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir / "g.txt.model"));
  const auto stats = cli({"stats", "--dataset", dir / "g.txt"});
  CHECK(stats.out == r.out);
  CHECK(cli({"synth", "--out", dir / "h.txt", "--synth-density", "0"}).code == 2);
}
