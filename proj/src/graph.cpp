#include "signpred/graph.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "signpred/error.hpp"
#include "signpred/random.hpp"

namespace signpred {

namespace {

std::uint64_t fnv1a(std::span<const std::string> labels) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (const auto& s : labels) {
    for (unsigned char c : s) feed(c);
    feed(0);
  }
  return h;
}

// Counting sort of (key, arc) pairs into CSR form, arcs sorted by node.
template <class KeyFn, class ArcFn>
void build_csr(std::size_t n, std::span<const SignedEdge> edges,
               std::span<const char> hidden, KeyFn key, ArcFn arc,
               std::vector<std::size_t>& offsets, std::vector<Arc>& arcs) {
  offsets.assign(n + 1, 0);
  for (const auto& e : edges) ++offsets[key(e) + 1];
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  arcs.resize(edges.size());
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    arcs[cursor[key(e)]++] =
        Arc{arc(e), static_cast<std::int8_t>(e.sign), hidden[i] != 0};
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(arcs.begin() + static_cast<std::ptrdiff_t>(offsets[i]),
              arcs.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]),
              [](const Arc& a, const Arc& b) { return a.node < b.node; });
  }
}

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' ||
                               line[i] == '\r'))
      ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' &&
           line[j] != '\r')
      ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool skippable(std::string_view line) {
  for (char c : line) {
    if (c == '#') return true;
    if (c != ' ' && c != '\t' && c != '\r') return false;
  }
  return true;
}

class IdMap {
 public:
  NodeId intern(std::string_view raw) {
    auto [it, inserted] =
        index_.try_emplace(std::string(raw), static_cast<NodeId>(labels_.size()));
    if (inserted) labels_.emplace_back(raw);
    return it->second;
  }
  std::size_t size() const { return labels_.size(); }
  std::vector<std::string>& labels() { return labels_; }

 private:
  std::unordered_map<std::string, NodeId> index_;
  std::vector<std::string> labels_;
};

// Collapses repeated (src,dst) pairs, last sign wins, first position kept.
class EdgeCollector {
 public:
  void add(NodeId src, NodeId dst, int sign, LoadStats* stats) {
    const std::uint64_t key = (std::uint64_t{src} << 32) | dst;
    auto [it, inserted] = slot_.try_emplace(key, edges_.size());
    if (inserted) {
      edges_.push_back({src, dst, sign});
    } else {
      edges_[it->second].sign = sign;
      if (stats) ++stats->duplicates_collapsed;
    }
  }
  std::vector<SignedEdge>& edges() { return edges_; }

 private:
  std::unordered_map<std::uint64_t, std::size_t> slot_;
  std::vector<SignedEdge> edges_;
};

}  // namespace

SignedGraph SignedGraph::build(std::vector<std::string> labels,
                               std::vector<SignedEdge> edges) {
  std::vector<char> hidden(edges.size(), 0);
  SignedGraph g;
  g.labels_ = std::move(labels);
  g.edges_ = std::move(edges);
  const std::size_t n = g.labels_.size();
  g.index_.reserve(n);
  for (NodeId i = 0; i < n; ++i) {
    if (!g.index_.emplace(g.labels_[i], i).second)
      throw InvariantError("duplicate node label '" + g.labels_[i] + "'");
  }
  for (const auto& e : g.edges_) {
    if (e.src >= n || e.dst >= n)
      throw InvariantError(fmt::format("edge {}->{} out of range (n={})",
                                       e.src, e.dst, n));
    if (e.src == e.dst)
      throw InvariantError(fmt::format("self-loop at node {}", e.src));
    if (e.sign != 1 && e.sign != -1)
      throw InvariantError(fmt::format("edge {}->{} has sign {}", e.src, e.dst,
                                       e.sign));
  }
  build_csr(
      n, g.edges_, hidden, [](const SignedEdge& e) { return e.src; },
      [](const SignedEdge& e) { return e.dst; }, g.out_offsets_, g.out_arcs_);
  build_csr(
      n, g.edges_, hidden, [](const SignedEdge& e) { return e.dst; },
      [](const SignedEdge& e) { return e.src; }, g.in_offsets_, g.in_arcs_);

  g.nbr_offsets_.assign(n + 1, 0);
  g.nbrs_.reserve(2 * g.edges_.size());
  std::vector<NodeId> scratch;
  for (NodeId x = 0; x < n; ++x) {
    const auto outs = g.out_arcs(x);
    for (std::size_t i = 1; i < outs.size(); ++i) {
      if (outs[i].node == outs[i - 1].node)
        throw InvariantError(
            fmt::format("repeated edge {}->{}", x, outs[i].node));
    }
    scratch.clear();
    for (const auto& a : outs) scratch.push_back(a.node);
    for (const auto& a : g.in_arcs(x)) scratch.push_back(a.node);
    std::sort(scratch.begin(), scratch.end());
    scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
    g.nbrs_.insert(g.nbrs_.end(), scratch.begin(), scratch.end());
    g.nbr_offsets_[x + 1] = g.nbrs_.size();
  }
  g.mapping_hash_ = fnv1a(g.labels_);
  return g;
}

std::span<const Arc> SignedGraph::out_arcs(NodeId x) const {
  return std::span<const Arc>(out_arcs_).subspan(
      out_offsets_[x], out_offsets_[x + 1] - out_offsets_[x]);
}

std::span<const Arc> SignedGraph::in_arcs(NodeId x) const {
  return std::span<const Arc>(in_arcs_).subspan(
      in_offsets_[x], in_offsets_[x + 1] - in_offsets_[x]);
}

std::span<const NodeId> SignedGraph::neighbours(NodeId x) const {
  return std::span<const NodeId>(nbrs_).subspan(
      nbr_offsets_[x], nbr_offsets_[x + 1] - nbr_offsets_[x]);
}

bool SignedGraph::adjacent(NodeId x, NodeId y) const {
  const auto nb = neighbours(x);
  return std::binary_search(nb.begin(), nb.end(), y);
}

const Arc* SignedGraph::find_out(NodeId src, NodeId dst) const {
  const auto arcs = out_arcs(src);
  auto it = std::lower_bound(
      arcs.begin(), arcs.end(), dst,
      [](const Arc& a, NodeId node) { return a.node < node; });
  if (it == arcs.end() || it->node != dst) return nullptr;
  return &*it;
}

int SignedGraph::sign(NodeId src, NodeId dst) const {
  const Arc* a = find_out(src, dst);
  return a ? a->sign : 0;
}

int SignedGraph::observed_sign(NodeId src, NodeId dst) const {
  const Arc* a = find_out(src, dst);
  return (a && !a->hidden) ? a->sign : 0;
}

bool SignedGraph::is_hidden(NodeId src, NodeId dst) const {
  const Arc* a = find_out(src, dst);
  return a && a->hidden;
}

std::optional<NodeId> SignedGraph::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

SignedGraph SignedGraph::with_hidden(std::span<const SignedEdge> hide) const {
  SignedGraph g = *this;
  for (const auto& e : hide) {
    if (e.src >= node_count() || e.dst >= node_count())
      throw InvariantError("hidden edge out of range");
    auto arcs = std::span<Arc>(g.out_arcs_).subspan(
        out_offsets_[e.src], out_offsets_[e.src + 1] - out_offsets_[e.src]);
    auto it = std::lower_bound(
        arcs.begin(), arcs.end(), e.dst,
        [](const Arc& a, NodeId node) { return a.node < node; });
    if (it == arcs.end() || it->node != e.dst)
      throw InvariantError(
          fmt::format("cannot hide {}->{}: not an edge", e.src, e.dst));
    if (!it->hidden) {
      it->hidden = true;
      ++g.hidden_count_;
    }
  }
  return g;
}

SignedGraph SignedGraph::restricted_to(std::span<const SignedEdge> keep) const {
  for (const auto& e : keep) {
    if (e.src >= node_count() || e.dst >= node_count() ||
        sign(e.src, e.dst) != e.sign)
      throw InvariantError(
          fmt::format("edge {}->{} is not part of the graph", e.src, e.dst));
  }
  return build(labels_, std::vector<SignedEdge>(keep.begin(), keep.end()));
}

SignedGraph load_edge_list(std::istream& in, const EdgeListFormat& format,
                           LoadStats* stats) {
  IdMap ids;
  EdgeCollector edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    const auto tok = split_tokens(line);
    if (tok.size() != 3)
      throw ParseError(lineno, fmt::format("expected 3 fields, found {}",
                                           tok.size()));
    int sign = 0;
    if (std::find(format.positive.begin(), format.positive.end(), tok[2]) !=
        format.positive.end())
      sign = 1;
    else if (std::find(format.negative.begin(), format.negative.end(),
                       tok[2]) != format.negative.end())
      sign = -1;
    else
      throw ParseError(lineno,
                       fmt::format("unrecognized sign token '{}'", tok[2]));
    const NodeId src = ids.intern(tok[0]);
    const NodeId dst = ids.intern(tok[1]);
    if (src == dst) {
      if (stats) ++stats->self_loops_dropped;
      continue;
    }
    edges.add(src, dst, sign, stats);
  }
  if (stats) stats->lines = lineno;
  if (edges.edges().empty()) throw DataError("edge list contains no edges");
  return SignedGraph::build(std::move(ids.labels()), std::move(edges.edges()));
}

SignedGraph load_ratings(std::istream& in, int negative_threshold,
                         LoadStats* stats) {
  IdMap users, items;
  struct Rating {
    NodeId user, item;
    int sign;
  };
  std::vector<Rating> ratings;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    const auto tok = split_tokens(line);
    if (tok.size() != 4)
      throw ParseError(lineno, fmt::format("expected 4 fields, found {}",
                                           tok.size()));
    int rating = 0;
    const auto r = tok[2];
    auto [ptr, ec] = std::from_chars(r.data(), r.data() + r.size(), rating);
    if (ec != std::errc{} || ptr != r.data() + r.size())
      throw ParseError(lineno, fmt::format("bad rating '{}'", r));
    if (rating < 1 || rating > 5)
      throw ParseError(lineno, fmt::format("rating {} outside 1..5", rating));
    ratings.push_back({users.intern(tok[0]), items.intern(tok[1]),
                       rating <= negative_threshold ? -1 : 1});
  }
  if (stats) stats->lines = lineno;
  if (ratings.empty()) throw DataError("ratings file contains no ratings");

  const auto offset = static_cast<NodeId>(users.size());
  std::vector<std::string> labels;
  labels.reserve(users.size() + items.size());
  for (const auto& u : users.labels()) labels.push_back("u" + u);
  for (const auto& i : items.labels()) labels.push_back("i" + i);
  EdgeCollector edges;
  for (const auto& r : ratings) {
    const NodeId item = offset + r.item;
    if (item < offset) throw InvariantError("item id overlaps user range");
    edges.add(r.user, item, r.sign, stats);
  }
  return SignedGraph::build(std::move(labels), std::move(edges.edges()));
}

void write_edge_list(const SignedGraph& g, std::ostream& out) {
  out << "# src\tdst\tsign\n";
  for (const auto& e : g.edges()) {
    out << g.label(e.src) << '\t' << g.label(e.dst) << '\t'
        << (e.sign > 0 ? "1" : "-1") << '\n';
  }
}

double GraphStats::positive_percent() const {
  return edges == 0 ? 0.0 : 100.0 * static_cast<double>(positive) /
                                static_cast<double>(edges);
}

double GraphStats::negative_percent() const {
  return edges == 0 ? 0.0 : 100.0 * static_cast<double>(negative) /
                                static_cast<double>(edges);
}

GraphStats compute_stats(const SignedGraph& g) {
  GraphStats s;
  s.nodes = g.node_count();
  s.edges = g.edge_count();
  for (const auto& e : g.edges()) (e.sign > 0 ? s.positive : s.negative)++;
  return s;
}

void write_stats(const GraphStats& stats, std::ostream& out) {
  out << "nodes\tedges\tpos_pct\tneg_pct\n";
  out << fmt::format("{}\t{}\t{:.1f}\t{:.1f}\n", stats.nodes, stats.edges,
                     stats.positive_percent(), stats.negative_percent());
}

std::size_t common_neighbours(const SignedGraph& g, NodeId u, NodeId v) {
  const auto a = g.neighbours(u);
  const auto b = g.neighbours(v);
  std::size_t count = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      if (*i != u && *i != v) ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

DatasetSplit split_dataset(std::span<const SignedEdge> edges,
                           double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ConfigError(
        fmt::format("test fraction {} must lie in (0, 1)", test_fraction));
  std::vector<SignedEdge> order(edges.begin(), edges.end());
  Rng rng(seed);
  shuffle(std::span<SignedEdge>(order), rng);

  const auto n_test = static_cast<std::size_t>(
      test_fraction * static_cast<double>(order.size()));
  const std::size_t rest = order.size() - n_test;
  const std::size_t n_validation = rest / 2;

  DatasetSplit split;
  split.seed = seed;
  auto first = order.begin();
  split.test.assign(first, first + static_cast<std::ptrdiff_t>(n_test));
  first += static_cast<std::ptrdiff_t>(n_test);
  split.train.assign(first,
                     first + static_cast<std::ptrdiff_t>(rest - n_validation));
  first += static_cast<std::ptrdiff_t>(rest - n_validation);
  split.validation.assign(first, order.end());
  return split;
}

DatasetSplit split_dataset(const SignedGraph& g, double test_fraction,
                           std::uint64_t seed) {
  return split_dataset(g.edges(), test_fraction, seed);
}

std::vector<SignedEdge> balance_by_sampling(std::span<const SignedEdge> edges,
                                            std::uint64_t seed) {
  std::vector<SignedEdge> positives, out;
  for (const auto& e : edges) (e.sign > 0 ? positives : out).push_back(e);
  if (positives.size() < out.size())
    throw DataError(fmt::format(
        "cannot balance: {} positive edges but {} negative", positives.size(),
        out.size()));
  Rng rng(seed);
  // Partial Fisher-Yates picks a uniform sample without replacement.
  const std::size_t k = out.size();
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(
                           uniform_below(rng, positives.size() - i));
    std::swap(positives[i], positives[j]);
    out.push_back(positives[i]);
  }
  shuffle(std::span<SignedEdge>(out), rng);
  return out;
}

}  // namespace signpred
