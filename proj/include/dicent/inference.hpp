#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dicent/errors.hpp"
#include "dicent/hypergraph.hpp"
#include "dicent/packed_graph.hpp"
#include "dicent/tag_codec.hpp"

namespace dicent {

// Scores live in log space, one per hyperedge id.
using EdgeScoreTable = std::vector<double>;

namespace inference_detail {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double logsumexp2(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

inline double logsumexp(const std::vector<double>& xs) {
  double m = kNegInf;
  for (double x : xs) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

inline void require_scores(const PackedGraph& g, const EdgeScoreTable& scores) {
  if (static_cast<int>(scores.size()) != g.num_edges())
    throw LengthMismatch("score table has " + std::to_string(scores.size()) + " entries for " +
                         std::to_string(g.num_edges()) + " edges");
}

}  // namespace inference_detail

// beta(v) = log sum over derivations rooted at v of exp(score); beta(sink) = 0.
inline std::vector<double> inside_values(const PackedGraph& g, const EdgeScoreTable& scores) {
  using namespace inference_detail;
  require_scores(g, scores);
  std::vector<double> beta(static_cast<size_t>(g.num_nodes()), kNegInf);
  std::vector<double> terms;
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (v == g.sink) {
      beta[static_cast<size_t>(v)] = 0;
      continue;
    }
    auto [lo, hi] = g.out[static_cast<size_t>(v)];
    terms.clear();
    for (int e = lo; e < hi; ++e) {
      double t = scores[static_cast<size_t>(e)];
      for (int c : g.edge_children[static_cast<size_t>(e)]) t += beta[static_cast<size_t>(c)];
      terms.push_back(t);
    }
    beta[static_cast<size_t>(v)] = logsumexp(terms);
  }
  return beta;
}

inline double inside_logZ(const PackedGraph& g, const EdgeScoreTable& scores) {
  return inside_values(g, scores)[static_cast<size_t>(g.root)];
}

// d logZ / d score(e): the expected number of times e appears in a derivation.
// On a trellis this is an ordinary edge probability in [0,1]; on a hypergraph
// a node reached from two parents is expanded once per occurrence, so values
// above 1 are possible and correct.
inline std::vector<double> edge_marginals(const PackedGraph& g, const EdgeScoreTable& scores) {
  using namespace inference_detail;
  std::vector<double> beta = inside_values(g, scores);
  std::vector<double> occ(static_cast<size_t>(g.num_nodes()), kNegInf);
  std::vector<double> lmarg(static_cast<size_t>(g.num_edges()), kNegInf);
  occ[static_cast<size_t>(g.root)] = 0;
  for (int v = g.num_nodes() - 1; v >= 0; --v) {
    if (v == g.sink || occ[static_cast<size_t>(v)] == kNegInf ||
        beta[static_cast<size_t>(v)] == kNegInf)
      continue;
    auto [lo, hi] = g.out[static_cast<size_t>(v)];
    for (int e = lo; e < hi; ++e) {
      double t = occ[static_cast<size_t>(v)] + scores[static_cast<size_t>(e)] -
                 beta[static_cast<size_t>(v)];
      for (int c : g.edge_children[static_cast<size_t>(e)]) t += beta[static_cast<size_t>(c)];
      lmarg[static_cast<size_t>(e)] = t;
      for (int c : g.edge_children[static_cast<size_t>(e)])
        occ[static_cast<size_t>(c)] = logsumexp2(occ[static_cast<size_t>(c)], t);
    }
  }
  std::vector<double> out(static_cast<size_t>(g.num_edges()), 0.0);
  for (int e = 0; e < g.num_edges(); ++e)
    out[static_cast<size_t>(e)] = std::exp(lmarg[static_cast<size_t>(e)]);
  return out;
}

struct MapResult {
  std::vector<int> edges;  // one chosen edge per node reachable through the choices
  double score = 0;
};

// Max-sum analogue of the inside pass. Ties prefer an edge whose children
// include the sink, then the lexicographically smallest child set, so the
// all-zero score table yields the empty prediction.
inline MapResult map_decode(const PackedGraph& g, const EdgeScoreTable& scores) {
  using namespace inference_detail;
  require_scores(g, scores);
  const size_t nn = static_cast<size_t>(g.num_nodes());
  std::vector<double> mu(nn, kNegInf);
  std::vector<int> best(nn, -1);
  auto tie_key = [&](int e) {
    std::vector<GNode> kids;
    bool has_x = false;
    for (int c : g.edge_children[static_cast<size_t>(e)]) {
      if (c == g.sink) has_x = true;
      kids.push_back(g.nodes[static_cast<size_t>(c)]);
    }
    std::sort(kids.begin(), kids.end());
    return std::make_pair(!has_x, kids);
  };
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (v == g.sink) {
      mu[static_cast<size_t>(v)] = 0;
      continue;
    }
    auto [lo, hi] = g.out[static_cast<size_t>(v)];
    for (int e = lo; e < hi; ++e) {
      double t = scores[static_cast<size_t>(e)];
      for (int c : g.edge_children[static_cast<size_t>(e)]) t += mu[static_cast<size_t>(c)];
      int& b = best[static_cast<size_t>(v)];
      if (b < 0 || t > mu[static_cast<size_t>(v)] ||
          (t == mu[static_cast<size_t>(v)] && tie_key(e) < tie_key(b))) {
        mu[static_cast<size_t>(v)] = t;
        b = e;
      }
    }
  }
  MapResult res;
  res.score = mu[static_cast<size_t>(g.root)];
  std::vector<int> stack{g.root};
  std::vector<char> seen(nn, 0);
  seen[static_cast<size_t>(g.root)] = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    int e = best[static_cast<size_t>(v)];
    if (e < 0) continue;
    res.edges.push_back(e);
    for (int c : g.edge_children[static_cast<size_t>(e)])
      if (c != g.sink && !seen[static_cast<size_t>(c)]) {
        seen[static_cast<size_t>(c)] = 1;
        stack.push_back(c);
      }
  }
  std::sort(res.edges.begin(), res.edges.end());
  return res;
}

// Expands every derivation tree explicitly and log-sums their scores; the
// reference the memoized inside pass is checked against.
inline double brute_force_logZ(const PackedGraph& g, const EdgeScoreTable& scores) {
  using namespace inference_detail;
  require_scores(g, scores);
  if (g.n > 5) throw InstanceTooLarge("brute-force enumeration is capped at 5 tokens");
  constexpr size_t kMaxDerivations = 4u << 20;
  std::vector<std::vector<double>> memo(static_cast<size_t>(g.num_nodes()));
  for (int v = 0; v < g.num_nodes(); ++v) {
    std::vector<double>& list = memo[static_cast<size_t>(v)];
    if (v == g.sink) {
      list.push_back(0);
      continue;
    }
    auto [lo, hi] = g.out[static_cast<size_t>(v)];
    for (int e = lo; e < hi; ++e) {
      std::vector<double> combo{scores[static_cast<size_t>(e)]};
      for (int c : g.edge_children[static_cast<size_t>(e)]) {
        const std::vector<double>& sub = memo[static_cast<size_t>(c)];
        std::vector<double> next;
        if (combo.size() * sub.size() > kMaxDerivations)
          throw InstanceTooLarge("too many derivations to enumerate");
        next.reserve(combo.size() * sub.size());
        for (double a : combo)
          for (double b : sub) next.push_back(a + b);
        combo = std::move(next);
      }
      list.insert(list.end(), combo.begin(), combo.end());
      if (list.size() > kMaxDerivations)
        throw InstanceTooLarge("too many derivations to enumerate");
    }
  }
  return logsumexp(memo[static_cast<size_t>(g.root)]);
}

// Tag vocabulary for the linear model: O plus six label-qualified kinds per
// label, in label order.
struct TagIndexer {
  std::vector<std::string> labels;

  explicit TagIndexer(std::vector<std::string> ls) : labels(std::move(ls)) {}

  int num_tags() const { return 1 + 6 * static_cast<int>(labels.size()); }

  int index(const Tag& t) const {
    if (t.kind == TagKind::O) return 0;
    auto it = std::find(labels.begin(), labels.end(), t.label);
    if (it == labels.end()) throw ValidationError("label '" + t.label + "' is not in the tag set");
    return 1 + 6 * static_cast<int>(it - labels.begin()) + (static_cast<int>(t.kind) - 1);
  }

  Tag tag(int idx) const {
    if (idx == 0) return Tag{TagKind::O, ""};
    int li = (idx - 1) / 6;
    if (li >= static_cast<int>(labels.size())) throw ValidationError("tag index out of range");
    return Tag{static_cast<TagKind>(1 + (idx - 1) % 6), labels[static_cast<size_t>(li)]};
  }
};

// A continuation tag must extend a tag of the same label: I and ID follow
// their own kind's run or resume after head tags, IH only extends a head run;
// everything else is locally fine (global pairing rules are not Markov).
inline bool valid_transition(const Tag& a, const Tag& b) {
  if (!linear_detail::is_i_variant(b.kind)) return true;
  if (a.kind == TagKind::O || a.label != b.label) return false;
  if (a.kind == TagKind::BH || a.kind == TagKind::IH) return true;
  return linear_detail::tag_role(a.kind) == linear_detail::tag_role(b.kind) &&
         b.kind != TagKind::IH;
}

// Chain trellis as a packed graph: one node per (position, tag), a virtual
// root, and singleton edges; inference then shares the hypergraph code paths.
inline PackedGraph build_tag_trellis(const TagIndexer& ix, int n, bool forbid_invalid = false) {
  if (n < 1) throw ValidationError("sentence length must be >= 1");
  const int M = ix.num_tags();
  PackedGraphBuilder b;
  int sink = b.add_node(GNode{NodeKind::X, -1, 0, 0, 0});
  auto tag_id = [&](int k, int t) { return 1 + (n - 1 - k) * M + t; };
  for (int k = n - 1; k >= 0; --k)
    for (int t = 0; t < M; ++t) b.add_node(GNode{NodeKind::T, k, t, 0, 0});
  int root = b.add_node(GNode{NodeKind::A, -1, 0, 0, 0});
  for (int t = 0; t < M; ++t) b.add_edge(tag_id(n - 1, t), {sink});
  for (int k = n - 2; k >= 0; --k)
    for (int a = 0; a < M; ++a)
      for (int t = 0; t < M; ++t) {
        if (forbid_invalid && !valid_transition(ix.tag(a), ix.tag(t))) continue;
        b.add_edge(tag_id(k, a), {tag_id(k + 1, t)});
      }
  for (int t = 0; t < M; ++t) {
    if (forbid_invalid && linear_detail::is_i_variant(ix.tag(t).kind)) continue;
    b.add_edge(root, {tag_id(0, t)});
  }
  return b.finish(root, sink, n);
}

// Reads a tag per position out of a chosen-edge set (one edge per node on the
// selected path).
inline TagSequence tags_from_trellis_edges(const PackedGraph& g, const TagIndexer& ix,
                                           const std::vector<int>& edges) {
  TagSequence tags(static_cast<size_t>(g.n), Tag{TagKind::O, ""});
  std::vector<char> set(static_cast<size_t>(g.n), 0);
  for (int e : edges) {
    if (e < 0 || e >= g.num_edges()) throw ValidationError("edge id out of range");
    for (int c : g.edge_children[static_cast<size_t>(e)]) {
      const GNode& v = g.nodes[static_cast<size_t>(c)];
      if (v.kind != NodeKind::T) continue;
      tags[static_cast<size_t>(v.k)] = ix.tag(v.t);
      set[static_cast<size_t>(v.k)] = 1;
    }
  }
  for (char s : set)
    if (!s) throw ValidationError("edge set does not cover every position");
  return tags;
}

// Edge ids of one tag sequence's path through the trellis.
inline std::vector<int> trellis_path_edges(const PackedGraph& g, const TagIndexer& ix,
                                           const TagSequence& t) {
  if (static_cast<int>(t.size()) != g.n)
    throw LengthMismatch("tag sequence length " + std::to_string(t.size()) +
                         " does not match trellis length " + std::to_string(g.n));
  auto edge_between = [&](int parent, const GNode& child) {
    int cid = g.find_node(child);
    auto [lo, hi] = g.out[static_cast<size_t>(parent)];
    for (int e = lo; e < hi; ++e)
      if (g.edge_children[static_cast<size_t>(e)].size() == 1 &&
          g.edge_children[static_cast<size_t>(e)][0] == cid)
        return e;
    throw ValidationError("tag sequence uses a transition absent from the trellis");
  };
  std::vector<int> out;
  int prev = g.root;
  for (int k = 0; k < g.n; ++k) {
    GNode node{NodeKind::T, k, ix.index(t[static_cast<size_t>(k)]), 0, 0};
    out.push_back(edge_between(prev, node));
    prev = g.find_node(node);
  }
  out.push_back(edge_between(prev, g.nodes[static_cast<size_t>(g.sink)]));
  return out;
}

}  // namespace dicent
