#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "dicent/core.hpp"
#include "dicent/errors.hpp"
#include "dicent/inference.hpp"

namespace dicent {

// One extractor instance. `kind` selects the extractor, the other fields are
// its parameters; `name` keys the template's output inside feature strings.
struct FeatureTemplate {
  std::string name;
  std::string kind;    // word | word_pair | word_ngram | attr | attr_ngram |
                       // prefix | suffix | shape | sattr | cluster_prefix
  std::string column;  // attribute name for attr/attr_ngram/sattr/cluster_prefix
  int offset = 0;      // anchor-relative position (window start for n-grams)
  int size = 0;        // n-gram length or affix length

  bool operator==(const FeatureTemplate&) const = default;
};

// The stock inventory: neighbouring words with relative position, word pairs,
// word n-grams through the anchor, per-column attribute unigrams and n-grams,
// affixes 1-4, word shape, sentence attributes, and cluster-id prefixes.
inline std::vector<FeatureTemplate> default_templates(
    const std::vector<std::string>& token_columns = {},
    const std::vector<std::string>& sentence_columns = {},
    const std::string& cluster_column = "") {
  std::vector<FeatureTemplate> ts;
  auto add = [&](std::string name, std::string kind, std::string column, int offset, int size) {
    ts.push_back({std::move(name), std::move(kind), std::move(column), offset, size});
  };
  for (int o = -3; o <= 3; ++o) add("w[" + std::to_string(o) + "]", "word", "", o, 0);
  for (int o = -3; o <= 3; ++o)
    if (o != 0) add("w[" + std::to_string(o) + "]w[0]", "word_pair", "", o, 0);
  for (int n = 2; n <= 3; ++n)
    for (int start = 1 - n; start <= 0; ++start)
      add("w" + std::to_string(n) + "[" + std::to_string(start) + "]", "word_ngram", "", start, n);
  for (const std::string& col : token_columns) {
    for (int o = -2; o <= 2; ++o) add(col + "[" + std::to_string(o) + "]", "attr", col, o, 0);
    for (int n = 2; n <= 3; ++n)
      for (int start = 1 - n; start <= 0; ++start)
        add(col + std::to_string(n) + "[" + std::to_string(start) + "]", "attr_ngram", col, start, n);
  }
  for (int l = 1; l <= 4; ++l) add("pre" + std::to_string(l), "prefix", "", 0, l);
  for (int l = 1; l <= 4; ++l) add("suf" + std::to_string(l), "suffix", "", 0, l);
  add("shape", "shape", "", 0, 0);
  for (const std::string& col : sentence_columns) add("s:" + col, "sattr", col, 0, 0);
  if (!cluster_column.empty()) add("clp", "cluster_prefix", cluster_column, 0, 0);
  return ts;
}

// Bidirectional feature-string <-> dense-id map. Ids are assigned first-seen;
// a frozen index never grows and reports unseen strings as -1.
class FeatureIndex {
 public:
  int add_or_get(const std::string& s) {
    auto it = ids_.find(s);
    if (it != ids_.end()) return it->second;
    if (frozen_) return -1;
    int id = static_cast<int>(strings_.size());
    ids_.emplace(s, id);
    strings_.push_back(s);
    return id;
  }

  int lookup(const std::string& s) const {
    auto it = ids_.find(s);
    return it == ids_.end() ? -1 : it->second;
  }

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  int size() const { return static_cast<int>(strings_.size()); }
  const std::string& feature(int id) const { return strings_.at(static_cast<size_t>(id)); }
  const std::vector<std::string>& strings() const { return strings_; }

  // Rebuilds the map side, for deserialized models.
  static FeatureIndex from_strings(std::vector<std::string> strings, bool frozen) {
    FeatureIndex ix;
    ix.strings_ = std::move(strings);
    for (size_t i = 0; i < ix.strings_.size(); ++i) {
      if (!ix.ids_.emplace(ix.strings_[i], static_cast<int>(i)).second)
        throw ValidationError("duplicate feature string '" + ix.strings_[i] + "'");
    }
    ix.frozen_ = frozen;
    return ix;
  }

 private:
  std::vector<std::string> strings_;
  std::unordered_map<std::string, int> ids_;
  bool frozen_ = false;
};

namespace feature_detail {

inline const std::string& token_at(const AnnotatedSentence& s, int k) {
  static const std::string bos = "<BOS>", eos = "<EOS>";
  if (k < 0) return bos;
  if (k >= s.size()) return eos;
  return s.tokens[static_cast<size_t>(k)];
}

inline const std::vector<std::string>& column(const AnnotatedSentence& s, const std::string& name) {
  auto it = s.attrs.find(name);
  if (it == s.attrs.end()) throw UnknownAttribute("no token attribute column '" + name + "'");
  return it->second;
}

inline const std::string& attr_at(const AnnotatedSentence& s, const std::string& name, int k) {
  static const std::string bos = "<BOS>", eos = "<EOS>";
  const std::vector<std::string>& col = column(s, name);
  if (k < 0) return bos;
  if (k >= static_cast<int>(col.size())) return eos;
  return col[static_cast<size_t>(k)];
}

// Character-class string (X upper, x lower, d digit, other chars verbatim),
// with long shapes elided to first three classes + "..." + last.
inline std::string shape_of(const std::string& w) {
  std::string cls;
  for (unsigned char c : w) {
    if (c >= 'A' && c <= 'Z') cls += 'X';
    else if (c >= 'a' && c <= 'z') cls += 'x';
    else if (c >= '0' && c <= '9') cls += 'd';
    else cls += static_cast<char>(c);
  }
  if (cls.size() <= 4) return cls;
  return cls.substr(0, 3) + "..." + cls.back();
}

}  // namespace feature_detail

// Applies every template at anchor position k and conjoins each output with
// the edge signature. Appends ids to `out`; when the index is frozen, unseen
// feature strings are dropped.
inline void edge_features(const AnnotatedSentence& s, int k, const std::string& signature,
                          const std::vector<FeatureTemplate>& templates, FeatureIndex& index,
                          std::vector<int>& out) {
  using namespace feature_detail;
  std::string buf;
  auto emit = [&](const FeatureTemplate& t, const std::string& value) {
    buf.assign(signature);
    buf += '|';
    buf += t.name;
    buf += '=';
    buf += value;
    int id = index.add_or_get(buf);
    if (id >= 0) out.push_back(id);
  };
  for (const FeatureTemplate& t : templates) {
    if (t.kind == "word") {
      emit(t, token_at(s, k + t.offset));
    } else if (t.kind == "word_pair") {
      emit(t, token_at(s, k + t.offset) + "_" + token_at(s, k));
    } else if (t.kind == "word_ngram") {
      std::string v = token_at(s, k + t.offset);
      for (int i = 1; i < t.size; ++i) v += "_" + token_at(s, k + t.offset + i);
      emit(t, v);
    } else if (t.kind == "attr") {
      emit(t, attr_at(s, t.column, k + t.offset));
    } else if (t.kind == "attr_ngram") {
      std::string v = attr_at(s, t.column, k + t.offset);
      for (int i = 1; i < t.size; ++i) v += "_" + attr_at(s, t.column, k + t.offset + i);
      emit(t, v);
    } else if (t.kind == "prefix") {
      const std::string& w = token_at(s, k);
      emit(t, w.substr(0, static_cast<size_t>(t.size)));
    } else if (t.kind == "suffix") {
      const std::string& w = token_at(s, k);
      size_t l = std::min(w.size(), static_cast<size_t>(t.size));
      emit(t, w.substr(w.size() - l));
    } else if (t.kind == "shape") {
      emit(t, shape_of(token_at(s, k)));
    } else if (t.kind == "sattr") {
      auto it = s.sattrs.find(t.column);
      if (it == s.sattrs.end())
        throw UnknownAttribute("no sentence attribute '" + t.column + "'");
      emit(t, it->second);
    } else if (t.kind == "cluster_prefix") {
      const std::string& v = attr_at(s, t.column, k);
      for (size_t l = 1; l <= v.size(); ++l) emit(t, v.substr(0, l));
    } else {
      throw ValidationError("unknown feature template kind '" + t.kind + "'");
    }
  }
}

inline std::vector<int> edge_features(const AnnotatedSentence& s, int k,
                                      const std::string& signature,
                                      const std::vector<FeatureTemplate>& templates,
                                      FeatureIndex& index) {
  std::vector<int> out;
  edge_features(s, k, signature, templates, index, out);
  return out;
}

// Every edge is anchored at its parent's position; the positionless trellis
// root anchors at 0.
inline std::vector<int> edge_anchors(const PackedGraph& g) {
  std::vector<int> anchors(static_cast<size_t>(g.num_edges()));
  for (int e = 0; e < g.num_edges(); ++e) {
    int k = g.nodes[static_cast<size_t>(g.edge_parent[static_cast<size_t>(e)])].k;
    anchors[static_cast<size_t>(e)] = std::max(k, 0);
  }
  return anchors;
}

// Structural identity of each hyperedge: parent kind with its label and
// component indices (j only under SPLIT, which is exactly what separates the
// two parameterizations), plus the sorted kinds of its children.
inline std::vector<std::string> hyper_edge_signatures(const PackedGraph& g, const Schema& sc) {
  validate_schema(sc);
  const bool split = sc.variant == SchemaVariant::SPLIT;
  std::vector<std::string> sigs(static_cast<size_t>(g.num_edges()));
  for (int e = 0; e < g.num_edges(); ++e) {
    const GNode& p = g.nodes[static_cast<size_t>(g.edge_parent[static_cast<size_t>(e)])];
    std::string s;
    switch (p.kind) {
      case NodeKind::B:
      case NodeKind::O:
        s = node_kind_name(p.kind);
        s += ":" + sc.labels.at(static_cast<size_t>(p.t)) + ":" + std::to_string(p.i);
        if (split) s += ":" + std::to_string(p.j);
        break;
      case NodeKind::T:
        s = "T:" + sc.labels.at(static_cast<size_t>(p.t));
        if (split) s += ":" + std::to_string(p.j);
        break;
      default:
        s = node_kind_name(p.kind);
        break;
    }
    std::vector<std::string> kids;
    for (int c : g.edge_children[static_cast<size_t>(e)])
      kids.push_back(node_kind_name(g.nodes[static_cast<size_t>(c)].kind));
    std::sort(kids.begin(), kids.end());
    s += ">";
    for (size_t i = 0; i < kids.size(); ++i) s += (i ? "," : "") + kids[i];
    sigs[static_cast<size_t>(e)] = std::move(s);
  }
  return sigs;
}

// Trellis edges carry the full transition: source tag (or ^ at the root) and
// destination tag (or X past the last position).
inline std::vector<std::string> trellis_edge_signatures(const PackedGraph& g,
                                                        const TagIndexer& ix) {
  std::vector<std::string> sigs(static_cast<size_t>(g.num_edges()));
  for (int e = 0; e < g.num_edges(); ++e) {
    const GNode& p = g.nodes[static_cast<size_t>(g.edge_parent[static_cast<size_t>(e)])];
    std::string s = p.kind == NodeKind::T ? "T:" + tag_to_string(ix.tag(p.t), true) : "^";
    s += ">";
    const std::vector<int>& kids = g.edge_children[static_cast<size_t>(e)];
    const GNode& c = g.nodes[static_cast<size_t>(kids.at(0))];
    s += c.kind == NodeKind::T ? "T:" + tag_to_string(ix.tag(c.t), true) : "X";
    sigs[static_cast<size_t>(e)] = std::move(s);
  }
  return sigs;
}

// One model family's inference graph for one sentence length, with the
// per-edge anchors and signatures extraction needs. Graphs depend only on
// (family, schema, n), so bundles are shared across sentences.
struct GraphBundle {
  PackedGraph graph;
  std::vector<int> anchors;
  std::vector<std::string> signatures;
};

inline GraphBundle make_graph_bundle(ModelFamily family, const Schema& schema, int n) {
  GraphBundle b;
  if (family == ModelFamily::LINEAR) {
    // The chain model is a standard CRF: the partition function ranges over
    // all 7^n tag sequences and transition structure is learned, not imposed.
    TagIndexer ix(schema.labels);
    b.graph = build_tag_trellis(ix, n, false);
    b.signatures = trellis_edge_signatures(b.graph, ix);
  } else {
    Schema sc = schema;
    sc.variant = family == ModelFamily::SHARED ? SchemaVariant::SHARED : SchemaVariant::SPLIT;
    b.graph = build_full_graph(sc, n);
    b.signatures = hyper_edge_signatures(b.graph, sc);
  }
  b.anchors = edge_anchors(b.graph);
  return b;
}

class GraphCache {
 public:
  GraphCache(ModelFamily family, Schema schema) : family_(family), schema_(std::move(schema)) {}

  const GraphBundle& get(int n) {
    auto it = by_n_.find(n);
    if (it == by_n_.end()) it = by_n_.emplace(n, make_graph_bundle(family_, schema_, n)).first;
    return it->second;
  }

  ModelFamily family() const { return family_; }
  const Schema& schema() const { return schema_; }

 private:
  ModelFamily family_;
  Schema schema_;
  std::map<int, GraphBundle> by_n_;
};

// The gold structure's edge ids in the bundle's graph. Returns false (with a
// reason) when the sentence cannot be encoded under this family.
inline bool gold_edges(ModelFamily family, const Schema& schema, const GraphBundle& b,
                       const AnnotatedSentence& s, std::vector<int>& out,
                       std::string* why = nullptr) {
  try {
    if (family == ModelFamily::LINEAR) {
      TagIndexer ix(schema.labels);
      out = trellis_path_edges(b.graph, ix, encode_linear(s, schema.max_components));
    } else {
      Schema sc = schema;
      sc.variant = family == ModelFamily::SHARED ? SchemaVariant::SHARED : SchemaVariant::SPLIT;
      out = match_edges(b.graph, encode_mentions(sc, s));
    }
    return true;
  } catch (const Error& e) {
    if (why) *why = e.what();
    return false;
  }
}

// All feature-id lists for one sentence over one graph, edge id order.
inline std::vector<std::vector<int>> featurize_edges(const AnnotatedSentence& s,
                                                     const GraphBundle& b,
                                                     const std::vector<FeatureTemplate>& templates,
                                                     FeatureIndex& index) {
  std::vector<std::vector<int>> feats(static_cast<size_t>(b.graph.num_edges()));
  for (int e = 0; e < b.graph.num_edges(); ++e)
    edge_features(s, b.anchors[static_cast<size_t>(e)], b.signatures[static_cast<size_t>(e)],
                  templates, index, feats[static_cast<size_t>(e)]);
  return feats;
}

// First-seen index over every graph edge of every encodable sentence (the
// gold edges are a subset, so scoring never meets a dangling id). Sentences
// the family cannot encode contribute nothing, matching the trainer's skips.
inline FeatureIndex build_index(const Corpus& corpus, const std::vector<FeatureTemplate>& templates,
                                ModelFamily family, const Schema& schema) {
  FeatureIndex index;
  GraphCache cache(family, schema);
  std::vector<int> gold, scratch;
  for (const AnnotatedSentence& s : corpus.sentences) {
    if (s.size() < 1) continue;
    const GraphBundle& b = cache.get(s.size());
    if (!gold_edges(family, schema, b, s, gold)) continue;
    for (int e = 0; e < b.graph.num_edges(); ++e) {
      scratch.clear();
      edge_features(s, b.anchors[static_cast<size_t>(e)], b.signatures[static_cast<size_t>(e)],
                    templates, index, scratch);
    }
  }
  return index;
}

}  // namespace dicent
