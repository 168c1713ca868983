#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dicent/errors.hpp"

namespace dicent {

// Kind values are ordered so that, within one position, nodes can be laid out
// in dependency order (B/O first, then T, E, A).
enum class NodeKind : uint8_t { X, B, O, T, E, A };

inline const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::X: return "X";
    case NodeKind::B: return "B";
    case NodeKind::O: return "O";
    case NodeKind::T: return "T";
    case NodeKind::E: return "E";
    case NodeKind::A: return "A";
  }
  return "?";
}

// One node of a packed graph. k is the token position (-1 for the positionless
// sink and the trellis root), t a label or tag index, i a component index, and
// j the total-component index (0 when the schema does not track it).
struct GNode {
  NodeKind kind = NodeKind::X;
  int k = -1;
  int t = 0;
  int i = 0;
  int j = 0;
  auto operator<=>(const GNode&) const = default;
};

struct GNodeHash {
  size_t operator()(const GNode& v) const {
    size_t h = static_cast<size_t>(v.kind);
    for (int x : {v.k, v.t, v.i, v.j}) h = h * 1000003u + static_cast<size_t>(x + 1);
    return h;
  }
};

inline std::string node_to_string(const GNode& v) {
  switch (v.kind) {
    case NodeKind::X: return "X";
    case NodeKind::A: return "A(" + std::to_string(v.k) + ")";
    case NodeKind::E: return "E(" + std::to_string(v.k) + ")";
    default: break;
  }
  std::string s = node_kind_name(v.kind);
  s += "(" + std::to_string(v.k) + "," + std::to_string(v.t);
  if (v.kind != NodeKind::T) s += "," + std::to_string(v.i);
  if (v.j > 0) s += "," + std::to_string(v.j);
  s += ")";
  return s;
}

// A hypergraph (or trellis) in topological layout: every edge's children have
// smaller ids than its parent, so one left-to-right sweep computes inside
// quantities and one right-to-left sweep computes outside quantities.
struct PackedGraph {
  std::vector<GNode> nodes;
  std::vector<int> edge_parent;
  std::vector<std::vector<int>> edge_children;
  std::vector<std::pair<int, int>> out;  // per node: [begin,end) into edge arrays
  int root = -1;
  int sink = -1;
  int n = 0;
  std::unordered_map<GNode, int, GNodeHash> index;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_edges() const { return static_cast<int>(edge_parent.size()); }

  int find_node(const GNode& v) const {
    auto it = index.find(v);
    return it == index.end() ? -1 : it->second;
  }
};

// Builds a PackedGraph from nodes added in dependency order (children first)
// and per-parent edge lists added in node order.
class PackedGraphBuilder {
 public:
  int add_node(const GNode& v) {
    auto [it, fresh] = g_.index.emplace(v, g_.num_nodes());
    if (fresh) g_.nodes.push_back(v);
    return it->second;
  }

  // Edges must be added grouped by parent, parents in ascending id order.
  void add_edge(int parent, std::vector<int> children) {
    for (int c : children)
      if (c >= parent) throw ValidationError("edge child does not precede its parent");
    if (g_.out.size() < g_.nodes.size()) g_.out.resize(g_.nodes.size(), {0, 0});
    int id = g_.num_edges();
    auto& range = g_.out[static_cast<size_t>(parent)];
    if (range.second == range.first) range = {id, id + 1};
    else if (range.second == id) range.second = id + 1;
    else throw ValidationError("edges for a parent must be contiguous");
    g_.edge_parent.push_back(parent);
    g_.edge_children.push_back(std::move(children));
  }

  PackedGraph finish(int root, int sink, int n) {
    g_.out.resize(g_.nodes.size(), {0, 0});
    g_.root = root;
    g_.sink = sink;
    g_.n = n;
    return std::move(g_);
  }

 private:
  PackedGraph g_;
};

}  // namespace dicent
