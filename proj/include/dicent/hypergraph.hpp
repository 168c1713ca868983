#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dicent/core.hpp"
#include "dicent/errors.hpp"
#include "dicent/packed_graph.hpp"

namespace dicent {

enum class SchemaVariant { SHARED, SPLIT };

// SPLIT threads the total component count j through every entity node, so a
// two-component mention and a three-component mention never share B/O nodes.
struct Schema {
  SchemaVariant variant = SchemaVariant::SHARED;
  int max_components = kDefaultMaxComponents;
  std::vector<std::string> labels;
  bool operator==(const Schema&) const = default;
};

inline void validate_schema(const Schema& schema) {
  if (schema.max_components < 1) throw InfeasibleConfig("schema needs max_components >= 1");
  if (schema.labels.empty()) throw InfeasibleConfig("schema needs at least one label");
  for (const std::string& l : schema.labels)
    if (l.empty()) throw InfeasibleConfig("schema labels must be non-empty");
}

// One hyperedge of an entity-encoded subgraph, in structural (node-tuple) form
// so subgraphs compare and serialize independently of any PackedGraph.
struct SubEdge {
  GNode parent;
  std::vector<GNode> children;  // sorted
  auto operator<=>(const SubEdge&) const = default;
};

struct EncodedSubgraph {
  Schema schema;
  int n = 0;
  std::vector<SubEdge> edges;  // sorted by parent; one edge per parent
  bool operator==(const EncodedSubgraph&) const = default;
};

struct SubgraphDecode {
  std::vector<Mention> mentions;
  std::vector<std::string> diagnostics;
};

inline constexpr int kSubgraphMentionCap = 10000;

namespace hyper_detail {

// Node existence bounds. A component i needs i-1 earlier components and gaps
// (2(i-1) tokens); a SPLIT node with j-i components still to come needs
// 2(j-i) tokens after it. O nodes must still reach a B, so they stop at n-2.
inline bool b_exists(const Schema& sc, int n, int k, int i, int j) {
  if (k < 2 * (i - 1) || k > n - 1) return false;
  if (sc.variant == SchemaVariant::SPLIT && k > n - 1 - 2 * (j - i)) return false;
  return true;
}

inline bool o_exists(const Schema& sc, int n, int k, int i, int j) {
  if (k < 2 * i - 3 || k > n - 2) return false;
  if (sc.variant == SchemaVariant::SPLIT && k > n - 2 - 2 * (j - i)) return false;
  return true;
}

inline int label_index(const Schema& sc, const std::string& label) {
  for (size_t t = 0; t < sc.labels.size(); ++t)
    if (sc.labels[t] == label) return static_cast<int>(t);
  throw ValidationError("label '" + label + "' is not in the schema");
}

}  // namespace hyper_detail

// The complete graph over which inference runs: spine, all T choices, and
// every B/O node that both is reachable from the root and can reach X.
inline PackedGraph build_full_graph(const Schema& schema, int n) {
  using namespace hyper_detail;
  validate_schema(schema);
  if (n < 1) throw ValidationError("sentence length must be >= 1");
  const int T = static_cast<int>(schema.labels.size());
  const int K = schema.max_components;
  const bool split = schema.variant == SchemaVariant::SPLIT;

  PackedGraphBuilder b;
  int sink = b.add_node(GNode{NodeKind::X, -1, 0, 0, 0});
  for (int k = n - 1; k >= 0; --k) {
    for (int t = 0; t < T; ++t) {
      for (int j = split ? 1 : 0; j <= (split ? K : 0); ++j) {
        int hi = split ? j : K;
        for (int i = 1; i <= hi; ++i)
          if (b_exists(schema, n, k, i, split ? j : i))
            b.add_node(GNode{NodeKind::B, k, t, i, j});
        for (int i = 2; i <= hi; ++i)
          if (o_exists(schema, n, k, i, split ? j : i))
            b.add_node(GNode{NodeKind::O, k, t, i, j});
      }
    }
    for (int t = 0; t < T; ++t)
      for (int j = split ? 1 : 0; j <= (split ? K : 0); ++j)
        b.add_node(GNode{NodeKind::T, k, t, 0, j});
    b.add_node(GNode{NodeKind::E, k, 0, 0, 0});
    b.add_node(GNode{NodeKind::A, k, 0, 0, 0});
  }

  PackedGraph g = b.finish(0, sink, n);
  PackedGraphBuilder rebuilt;
  // Nodes are final; emit edges parent-by-parent in id order.
  for (const GNode& v : g.nodes) rebuilt.add_node(v);
  for (int id = 0; id < g.num_nodes(); ++id) {
    const GNode& v = g.nodes[static_cast<size_t>(id)];
    auto child = [&](const GNode& c) { return g.find_node(c); };
    switch (v.kind) {
      case NodeKind::X:
        break;
      case NodeKind::B: {
        std::vector<int> universe;
        if (int c = child({NodeKind::B, v.k + 1, v.t, v.i, v.j}); c >= 0) universe.push_back(c);
        int hi = v.j > 0 ? v.j : schema.max_components;
        if (v.i < hi)
          if (int c = child({NodeKind::O, v.k + 1, v.t, v.i + 1, v.j}); c >= 0)
            universe.push_back(c);
        if (!(v.j > 0 && v.i < v.j)) universe.push_back(sink);
        for (unsigned mask = 1; mask < (1u << universe.size()); ++mask) {
          std::vector<int> kids;
          for (size_t u = 0; u < universe.size(); ++u)
            if (mask & (1u << u)) kids.push_back(universe[u]);
          rebuilt.add_edge(id, std::move(kids));
        }
        break;
      }
      case NodeKind::O: {
        std::vector<int> universe;
        if (int c = child({NodeKind::O, v.k + 1, v.t, v.i, v.j}); c >= 0) universe.push_back(c);
        if (int c = child({NodeKind::B, v.k + 1, v.t, v.i, v.j}); c >= 0) universe.push_back(c);
        for (unsigned mask = 1; mask < (1u << universe.size()); ++mask) {
          std::vector<int> kids;
          for (size_t u = 0; u < universe.size(); ++u)
            if (mask & (1u << u)) kids.push_back(universe[u]);
          rebuilt.add_edge(id, std::move(kids));
        }
        break;
      }
      case NodeKind::T: {
        if (int c = child({NodeKind::B, v.k, v.t, 1, v.j}); c >= 0) rebuilt.add_edge(id, {c});
        rebuilt.add_edge(id, {sink});
        break;
      }
      case NodeKind::E: {
        std::vector<int> kids;
        for (int t = 0; t < T; ++t)
          for (int j = split ? 1 : 0; j <= (split ? K : 0); ++j)
            kids.push_back(child({NodeKind::T, v.k, t, 0, j}));
        rebuilt.add_edge(id, std::move(kids));
        break;
      }
      case NodeKind::A: {
        std::vector<int> kids{child({NodeKind::E, v.k, 0, 0, 0})};
        if (v.k + 1 < n) kids.insert(kids.begin(), child({NodeKind::A, v.k + 1, 0, 0, 0}));
        rebuilt.add_edge(id, std::move(kids));
        break;
      }
    }
  }
  return rebuilt.finish(g.num_nodes() - 1, sink, n);
}

inline EncodedSubgraph encode_mentions(const Schema& schema, const AnnotatedSentence& s) {
  using namespace hyper_detail;
  validate_schema(schema);
  const int n = s.size();
  if (n < 1) throw ValidationError("sentence must have at least one token");
  const bool split = schema.variant == SchemaVariant::SPLIT;
  const int T = static_cast<int>(schema.labels.size());
  const int K = schema.max_components;

  for (const Mention& m : s.mentions)
    if (static_cast<int>(m.components.size()) > K)
      throw TooManyComponents("mention " + span_list_str(m.components) + " has " +
                              std::to_string(m.components.size()) + " components (limit " +
                              std::to_string(K) + ")");
  auto issues = validate_sentence(s, K);
  if (!issues.empty()) {
    std::string msg = "sentence fails validation:";
    for (const auto& is : issues) msg += "\n  [" + is.rule + "] " + is.detail;
    throw ValidationError(msg);
  }

  const GNode x{NodeKind::X, -1, 0, 0, 0};
  std::map<GNode, std::set<GNode>> demand;
  std::set<std::pair<int, std::pair<int, int>>> started;  // (k, (t, j))

  for (const Mention& m : s.mentions) {
    int t = label_index(schema, m.label);
    int p = static_cast<int>(m.components.size());
    int j = split ? p : 0;
    const auto& cs = m.components;
    started.insert({cs[0].start, {t, j}});
    demand[GNode{NodeKind::T, cs[0].start, t, 0, j}].insert(GNode{NodeKind::B, cs[0].start, t, 1, j});
    for (int ci = 0; ci < p; ++ci) {
      for (int k = cs[static_cast<size_t>(ci)].start; k < cs[static_cast<size_t>(ci)].end; ++k) {
        GNode bnode{NodeKind::B, k, t, ci + 1, j};
        if (k + 1 < cs[static_cast<size_t>(ci)].end)
          demand[bnode].insert(GNode{NodeKind::B, k + 1, t, ci + 1, j});
        else if (ci + 1 < p)
          demand[bnode].insert(GNode{NodeKind::O, k + 1, t, ci + 2, j});
        else
          demand[bnode].insert(x);
      }
      if (ci + 1 < p)
        for (int k = cs[static_cast<size_t>(ci)].end; k < cs[static_cast<size_t>(ci) + 1].start; ++k) {
          GNode onode{NodeKind::O, k, t, ci + 2, j};
          if (k + 1 < cs[static_cast<size_t>(ci) + 1].start)
            demand[onode].insert(GNode{NodeKind::O, k + 1, t, ci + 2, j});
          else
            demand[onode].insert(GNode{NodeKind::B, k + 1, t, ci + 2, j});
        }
    }
  }

  EncodedSubgraph out;
  out.schema = schema;
  out.n = n;
  for (auto& [parent, kids] : demand)
    out.edges.push_back(SubEdge{parent, {kids.begin(), kids.end()}});
  for (int k = 0; k < n; ++k) {
    for (int t = 0; t < T; ++t)
      for (int j = split ? 1 : 0; j <= (split ? K : 0); ++j)
        if (!started.count({k, {t, j}}))
          out.edges.push_back(SubEdge{GNode{NodeKind::T, k, t, 0, j}, {x}});
    std::vector<GNode> ts;
    for (int t = 0; t < T; ++t)
      for (int j = split ? 1 : 0; j <= (split ? K : 0); ++j)
        ts.push_back(GNode{NodeKind::T, k, t, 0, j});
    std::sort(ts.begin(), ts.end());
    out.edges.push_back(SubEdge{GNode{NodeKind::E, k, 0, 0, 0}, ts});
    std::vector<GNode> as{GNode{NodeKind::E, k, 0, 0, 0}};
    if (k + 1 < n) as.push_back(GNode{NodeKind::A, k + 1, 0, 0, 0});
    std::sort(as.begin(), as.end());
    out.edges.push_back(SubEdge{GNode{NodeKind::A, k, 0, 0, 0}, as});
  }
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

inline std::string subgraph_to_text(const EncodedSubgraph& g) {
  std::string out;
  for (const SubEdge& e : g.edges) {
    out += node_to_string(e.parent) + " ->";
    for (size_t c = 0; c < e.children.size(); ++c) {
      out += c ? "," : " ";
      out += node_to_string(e.children[c]);
    }
    out += "\n";
  }
  return out;
}

namespace hyper_detail {

// Ranks a forward step: uncovered slots first, then the move that finishes
// the mention soonest (X, then layer switch, then run extension).
inline int child_rank(NodeKind parent, NodeKind child) {
  if (child == NodeKind::X) return 0;
  if (parent == NodeKind::B) return child == NodeKind::O ? 1 : 2;
  return child == NodeKind::B ? 1 : 2;
}

struct SubgraphView {
  const EncodedSubgraph* g;
  std::map<GNode, const SubEdge*> by_parent;

  explicit SubgraphView(const EncodedSubgraph& sub) : g(&sub) {
    for (const SubEdge& e : sub.edges)
      if (!by_parent.emplace(e.parent, &e).second)
        throw ValidationError("subgraph has two edges for " + node_to_string(e.parent));
  }
  const SubEdge* edge(const GNode& v) const {
    auto it = by_parent.find(v);
    return it == by_parent.end() ? nullptr : it->second;
  }
};

// Reads the component list off a T -> B/O... node chain.
inline Mention mention_from_chain(const Schema& sc, const std::vector<GNode>& chain) {
  Mention m;
  m.label = sc.labels[static_cast<size_t>(chain.front().t)];
  for (const GNode& v : chain) {
    if (v.kind != NodeKind::B) continue;
    if (!m.components.empty() && m.components.back().end == v.k &&
        static_cast<int>(m.components.size()) == v.i)
      m.components.back().end = v.k + 1;
    else if (static_cast<int>(m.components.size()) + 1 == v.i)
      m.components.push_back({v.k, v.k + 1});
  }
  return m;
}

inline void decode_all(const SubgraphView& view, std::vector<Mention>& mentions,
                       std::vector<std::string>& diags) {
  const Schema& sc = view.g->schema;
  bool truncated = false;
  std::vector<GNode> chain;
  std::function<void(const GNode&)> walk = [&](const GNode& v) {
    if (truncated) return;
    chain.push_back(v);
    const SubEdge* e = view.edge(v);
    if (!e) {
      diags.push_back("dead end at " + node_to_string(v));
    } else {
      for (const GNode& c : e->children) {
        if (truncated) break;
        if (c.kind == NodeKind::X) {
          if (static_cast<int>(mentions.size()) >= kSubgraphMentionCap) {
            truncated = true;
            break;
          }
          mentions.push_back(mention_from_chain(sc, chain));
        } else if ((c.kind == NodeKind::B || c.kind == NodeKind::O) && c.t == v.t && c.j == v.j) {
          walk(c);
        }
      }
    }
    chain.pop_back();
  };
  for (const SubEdge& e : view.g->edges) {
    if (e.parent.kind != NodeKind::T) continue;
    for (const GNode& c : e.children)
      if (c.kind == NodeKind::B && !truncated) {
        chain.assign(1, e.parent);
        walk(c);
      }
  }
  if (truncated)
    diags.push_back("mention output truncated at " + std::to_string(kSubgraphMentionCap));
  canonicalize_mentions(mentions);
}

inline void decode_enough(const SubgraphView& view, std::vector<Mention>& mentions,
                          std::vector<std::string>& diags) {
  const Schema& sc = view.g->schema;
  struct Slot {
    const SubEdge* e;
    size_t child;
  };
  std::vector<Slot> slots;
  for (const SubEdge& e : view.g->edges) {
    if (e.parent.kind != NodeKind::B && e.parent.kind != NodeKind::O &&
        e.parent.kind != NodeKind::T)
      continue;
    for (size_t c = 0; c < e.children.size(); ++c) {
      if (e.parent.kind == NodeKind::T && e.children[c].kind != NodeKind::B) continue;
      slots.push_back({&e, c});
    }
  }
  // g.edges is sorted by parent tuple; refine to position-major order.
  std::stable_sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
    if (a.e->parent.k != b.e->parent.k) return a.e->parent.k < b.e->parent.k;
    if (a.e->parent != b.e->parent) return a.e->parent < b.e->parent;
    return a.e->children[a.child] < b.e->children[b.child];
  });
  std::map<std::pair<const SubEdge*, size_t>, bool> covered;
  for (const Slot& s : slots) covered[{s.e, s.child}] = false;
  auto is_covered = [&](const SubEdge* e, size_t c) {
    auto it = covered.find({e, c});
    return it == covered.end() || it->second;
  };

  std::set<Mention> out;
  for (size_t next = 0; next < slots.size();) {
    if (is_covered(slots[next].e, slots[next].child)) {
      ++next;
      continue;
    }
    const Slot& seed = slots[next];
    covered[{seed.e, seed.child}] = true;

    // Backward to the mention start, preferring the step that starts the
    // current component (or gap) right here.
    std::vector<GNode> chain{seed.e->parent};
    bool ok = true;
    while (chain.front().kind != NodeKind::T) {
      GNode v = chain.front();
      std::vector<GNode> preds;
      if (v.kind == NodeKind::B && v.i == 1) {
        preds.push_back(GNode{NodeKind::T, v.k, v.t, 0, v.j});
        preds.push_back(GNode{NodeKind::B, v.k - 1, v.t, v.i, v.j});
      } else if (v.kind == NodeKind::B) {
        preds.push_back(GNode{NodeKind::O, v.k - 1, v.t, v.i, v.j});
        preds.push_back(GNode{NodeKind::B, v.k - 1, v.t, v.i, v.j});
      } else {
        preds.push_back(GNode{NodeKind::B, v.k - 1, v.t, v.i - 1, v.j});
        preds.push_back(GNode{NodeKind::O, v.k - 1, v.t, v.i, v.j});
      }
      const SubEdge* pe = nullptr;
      size_t pc = 0;
      for (const GNode& p : preds) {
        const SubEdge* cand = view.edge(p);
        if (!cand) continue;
        for (size_t c = 0; c < cand->children.size(); ++c)
          if (cand->children[c] == v) {
            pe = cand;
            pc = c;
            break;
          }
        if (pe) break;
      }
      if (!pe) {
        diags.push_back("no path to a mention start from " + node_to_string(v));
        ok = false;
        break;
      }
      covered[{pe, pc}] = true;
      chain.insert(chain.begin(), pe->parent);
    }
    if (!ok) continue;

    // Forward from the seed slot, preferring uncovered slots, then the
    // soonest mention end.
    GNode cur = seed.e->children[seed.child];
    while (cur.kind != NodeKind::X) {
      chain.push_back(cur);
      const SubEdge* e = view.edge(cur);
      if (!e) {
        diags.push_back("dead end at " + node_to_string(cur));
        ok = false;
        break;
      }
      size_t best = e->children.size();
      for (size_t c = 0; c < e->children.size(); ++c) {
        const GNode& cand = e->children[c];
        if (cand.kind != NodeKind::X && (cand.t != cur.t || cand.j != cur.j)) continue;
        if (best == e->children.size()) {
          best = c;
          continue;
        }
        auto key = [&](size_t idx) {
          return std::make_tuple(is_covered(e, idx) ? 1 : 0,
                                 child_rank(cur.kind, e->children[idx].kind), e->children[idx]);
        };
        if (key(c) < key(best)) best = c;
      }
      if (best == e->children.size()) {
        diags.push_back("dead end at " + node_to_string(cur));
        ok = false;
        break;
      }
      covered[{e, best}] = true;
      cur = e->children[best];
    }
    if (!ok) continue;
    out.insert(mention_from_chain(sc, chain));
  }
  mentions.assign(out.begin(), out.end());
}

}  // namespace hyper_detail

inline SubgraphDecode decode_subgraph(const EncodedSubgraph& g, Heuristic heuristic) {
  using namespace hyper_detail;
  SubgraphDecode result;
  SubgraphView view(g);
  if (heuristic == Heuristic::ALL)
    decode_all(view, result.mentions, result.diagnostics);
  else
    decode_enough(view, result.mentions, result.diagnostics);
  return result;
}

// Looks up each structural edge in a packed graph, for gold feature counts.
inline std::vector<int> match_edges(const PackedGraph& g, const EncodedSubgraph& sub) {
  std::vector<int> ids;
  for (const SubEdge& e : sub.edges) {
    int parent = g.find_node(e.parent);
    if (parent < 0) throw ValidationError("node " + node_to_string(e.parent) + " not in graph");
    std::vector<GNode> want = e.children;
    std::sort(want.begin(), want.end());
    int found = -1;
    for (int id = g.out[static_cast<size_t>(parent)].first;
         id < g.out[static_cast<size_t>(parent)].second; ++id) {
      std::vector<GNode> got;
      for (int c : g.edge_children[static_cast<size_t>(id)])
        got.push_back(g.nodes[static_cast<size_t>(c)]);
      std::sort(got.begin(), got.end());
      if (got == want) {
        found = id;
        break;
      }
    }
    if (found < 0)
      throw ValidationError("edge from " + node_to_string(e.parent) + " not in graph");
    ids.push_back(found);
  }
  return ids;
}

// Reassembles an EncodedSubgraph from chosen edge ids (e.g. a MAP selection).
inline EncodedSubgraph subgraph_from_edges(const PackedGraph& g, const Schema& schema,
                                           const std::vector<int>& edge_ids) {
  EncodedSubgraph out;
  out.schema = schema;
  out.n = g.n;
  for (int id : edge_ids) {
    SubEdge e;
    e.parent = g.nodes[static_cast<size_t>(g.edge_parent[static_cast<size_t>(id)])];
    for (int c : g.edge_children[static_cast<size_t>(id)])
      e.children.push_back(g.nodes[static_cast<size_t>(c)]);
    std::sort(e.children.begin(), e.children.end());
    out.edges.push_back(std::move(e));
  }
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

}  // namespace dicent
