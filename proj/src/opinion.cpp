#include "signpred/opinion.hpp"

#include <algorithm>
#include <charconv>
#include <ostream>

#include <fmt/format.h>

#include "signpred/error.hpp"

namespace signpred {

std::string_view to_string(OpinionVariant v) {
  switch (v) {
    case OpinionVariant::SimpleAdjacent:
      return "simple-adjacent";
    case OpinionVariant::StandardAdjacent:
      return "standard-adjacent";
    case OpinionVariant::StandardPQ:
      return "standard-pq";
  }
  return "?";
}

OpinionVariant parse_variant(std::string_view name) {
  for (auto v : {OpinionVariant::SimpleAdjacent,
                 OpinionVariant::StandardAdjacent, OpinionVariant::StandardPQ}) {
    if (to_string(v) == name) return v;
  }
  throw ConfigError(fmt::format("unknown opinion variant '{}'", name));
}

NodePredictor make_predictor(NodeId source, std::vector<TrustedPeer> trusted) {
  std::sort(trusted.begin(), trusted.end());
  trusted.erase(std::unique(trusted.begin(), trusted.end()), trusted.end());
  std::vector<TrustedPeer> kept;
  kept.reserve(trusted.size());
  for (std::size_t i = 0; i < trusted.size(); ++i) {
    const auto& t = trusted[i];
    if (t.peer == source)
      throw InvariantError(
          fmt::format("node {} listed as its own trusted peer", source));
    if (t.influence != 1 && t.influence != -1)
      throw InvariantError(fmt::format("influence {} for peer {}", t.influence,
                                       t.peer));
    // Sorted order puts (z,-1) right before (z,+1).
    if (i + 1 < trusted.size() && trusted[i + 1].peer == t.peer) {
      ++i;
      continue;
    }
    kept.push_back(t);
  }
  return NodePredictor{source, std::move(kept)};
}

PeerFinder::PeerFinder(const SignedGraph& g)
    : graph_(&g), counts_(g.node_count(), 0) {}

std::vector<NodeId> PeerFinder::peers(NodeId x, const PeerPolicy& policy) {
  const SignedGraph& g = *graph_;
  std::vector<NodeId> out;
  if (policy.variant != OpinionVariant::StandardPQ) {
    const auto nb = g.neighbours(x);
    out.assign(nb.begin(), nb.end());
    return out;
  }
  if (policy.p == 0) {
    out.reserve(g.node_count() - 1);
    for (NodeId z = 0; z < g.node_count(); ++z)
      if (z != x) out.push_back(z);
    return out;
  }
  touched_.clear();
  for (NodeId w : g.neighbours(x)) {
    for (NodeId z : g.neighbours(w)) {
      if (z == x) continue;
      if (counts_[z]++ == 0) touched_.push_back(z);
    }
  }
  for (NodeId z : touched_) {
    if (counts_[z] >= policy.p) out.push_back(z);
    counts_[z] = 0;
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<NodeId> peers_of(const SignedGraph& g, NodeId x,
                             const PeerPolicy& policy) {
  PeerFinder finder(g);
  return finder.peers(x, policy);
}

int score(const SignedGraph& g, const NodePredictor& predictor, NodeId y) {
  int f = 0;
  for (const auto& t : predictor.trusted)
    f += t.influence * extended_sign(g, t.peer, y);
  return f;
}

std::size_t gate_count(const SignedGraph& g, std::span<const NodeId> peers,
                       NodeId y) {
  const auto nb = g.neighbours(y);
  std::size_t count = 0;
  if (nb.size() * 8 < peers.size()) {
    for (NodeId z : nb)
      count += std::binary_search(peers.begin(), peers.end(), z) ? 1 : 0;
    return count;
  }
  auto i = peers.begin();
  auto j = nb.begin();
  while (i != peers.end() && j != nb.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

Prediction predict(const SignedGraph& g, const NodePredictor& predictor,
                   NodeId y, std::size_t q, std::span<const NodeId> peers) {
  Prediction out;
  out.gate_peers = gate_count(g, peers, y);
  if (out.gate_peers < q) return out;
  out.value = decide(score(g, predictor, y));
  return out;
}

Prediction predict(const SignedGraph& g, const NodePredictor& predictor,
                   NodeId y, const PeerPolicy& policy) {
  const auto peers = peers_of(g, predictor.source, policy);
  return predict(g, predictor, y, policy.q, peers);
}

void write_predictor(std::ostream& out, const NodePredictor& predictor) {
  out << predictor.source << ' ' << predictor.trusted.size();
  for (const auto& t : predictor.trusted)
    out << ' ' << t.peer << ':' << (t.influence > 0 ? '+' : '-');
  out << '\n';
}

NodePredictor parse_predictor(std::string_view line) {
  auto fail = [&](std::string_view why) {
    return DataError(fmt::format("bad predictor line '{}': {}", line, why));
  };
  std::vector<std::string_view> tok;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' &&
           line[j] != '\r')
      ++j;
    if (j > i) tok.push_back(line.substr(i, j - i));
    i = j + 1;
  }
  auto number = [&](std::string_view s) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
      throw fail(fmt::format("'{}' is not a number", s));
    return v;
  };
  if (tok.size() < 2) throw fail("missing fields");
  const auto source = static_cast<NodeId>(number(tok[0]));
  const auto k = number(tok[1]);
  if (tok.size() != k + 2) throw fail("peer count mismatch");
  std::vector<TrustedPeer> trusted;
  for (std::size_t t = 2; t < tok.size(); ++t) {
    const auto s = tok[t];
    if (s.size() < 3 || s[s.size() - 2] != ':' ||
        (s.back() != '+' && s.back() != '-'))
      throw fail(fmt::format("bad peer entry '{}'", s));
    trusted.push_back({static_cast<NodeId>(number(s.substr(0, s.size() - 2))),
                       s.back() == '+' ? 1 : -1});
  }
  try {
    return make_predictor(source, std::move(trusted));
  } catch (const InvariantError& e) {
    throw fail(e.what());
  }
}

}  // namespace signpred
