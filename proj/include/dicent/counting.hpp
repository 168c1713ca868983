#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dicent/errors.hpp"
#include "dicent/hypergraph.hpp"
#include "dicent/inference.hpp"
#include "dicent/tag_codec.hpp"

namespace dicent {

using BigCount = boost::multiprecision::cpp_int;

inline BigCount binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  BigCount r = 1;
  for (int i = 0; i < k; ++i) {
    r *= n - i;
    r /= i + 1;
  }
  return r;
}

// Number of mention combinations: a k-component mention is a choice of 2k
// boundaries out of n+1, and a combination is any subset of the universe.
inline BigCount count_combinations_exponent(int n, int K) {
  if (n < 1 || K < 1) throw ValidationError("need n >= 1 and K >= 1");
  BigCount e = 0;
  for (int i = 1; i <= K; ++i) e += binomial(n + 1, 2 * i);
  return e;
}

inline BigCount count_combinations(int n, int K) {
  BigCount e = count_combinations_exponent(n, K);
  if (e > 1u << 24) throw InstanceTooLarge("2^" + e.str() + " does not fit in memory");
  return BigCount(1) << static_cast<unsigned>(e);
}

namespace counting_detail {

// One entity-node slot per position; j stays 0 for SHARED.
struct Slot {
  NodeKind kind;
  int i, j;
};

// SHARED couples all component indices through its shared gap nodes; SPLIT
// never mixes total-component threads, so each thread counts independently.
inline std::vector<Slot> thread_slots(const Schema& sc, int j) {
  std::vector<Slot> out;
  int hi = sc.variant == SchemaVariant::SPLIT ? j : sc.max_components;
  for (int i = 1; i <= hi; ++i) out.push_back({NodeKind::B, i, j});
  for (int i = 2; i <= hi; ++i) out.push_back({NodeKind::O, i, j});
  return out;
}

inline int slot_index(const std::vector<Slot>& slots, NodeKind kind, int i, int j) {
  for (size_t s = 0; s < slots.size(); ++s)
    if (slots[s].kind == kind && slots[s].i == i && slots[s].j == j)
      return static_cast<int>(s);
  return -1;
}

inline bool slot_exists(const Schema& sc, int n, int k, const Slot& s) {
  int jj = sc.variant == SchemaVariant::SPLIT ? s.j : s.i;
  return s.kind == NodeKind::B ? hyper_detail::b_exists(sc, n, k, s.i, jj)
                               : hyper_detail::o_exists(sc, n, k, s.i, jj);
}

inline unsigned exist_mask(const Schema& sc, int n, int k, const std::vector<Slot>& slots) {
  if (k >= n) return 0;
  unsigned m = 0;
  for (size_t s = 0; s < slots.size(); ++s)
    if (slot_exists(sc, n, k, slots[s])) m |= 1u << s;
  return m;
}

// Ways an active slot can pick one hyperedge, grouped by which entity nodes
// of the next position it activates. A present sink option doubles every
// nonempty activation and allows the empty one.
inline std::vector<std::pair<unsigned, std::uint64_t>> slot_choices(const Schema& sc,
                                                                    const std::vector<Slot>& slots,
                                                                    const Slot& s,
                                                                    unsigned exist_next) {
  const bool split = sc.variant == SchemaVariant::SPLIT;
  unsigned universe = 0;
  bool x_allowed = true;
  if (s.kind == NodeKind::B) {
    int hi = split ? s.j : sc.max_components;
    if (int c = slot_index(slots, NodeKind::B, s.i, s.j); c >= 0) universe |= 1u << c;
    if (s.i < hi)
      if (int c = slot_index(slots, NodeKind::O, s.i + 1, s.j); c >= 0) universe |= 1u << c;
    x_allowed = !(split && s.i < s.j);
  } else {
    if (int c = slot_index(slots, NodeKind::O, s.i, s.j); c >= 0) universe |= 1u << c;
    if (int c = slot_index(slots, NodeKind::B, s.i, s.j); c >= 0) universe |= 1u << c;
    x_allowed = false;
  }
  universe &= exist_next;
  std::vector<std::pair<unsigned, std::uint64_t>> out;
  for (unsigned c = universe;; c = (c - 1) & universe) {
    if (c != 0)
      out.push_back({c, x_allowed ? 2u : 1u});
    else if (x_allowed)
      out.push_back({0u, 1u});
    if (c == 0) break;
  }
  return out;
}

// mat[S][S'] = number of distinct local edge-choice sets taking active
// combination S at position k to combination S' at k+1, including the
// entity-start choices of the T nodes.
inline std::vector<std::vector<std::uint64_t>> transition_matrix(const Schema& sc, int n, int k,
                                                                 const std::vector<Slot>& slots) {
  const unsigned dim = 1u << slots.size();
  unsigned ek = exist_mask(sc, n, k, slots);
  unsigned en = exist_mask(sc, n, k + 1, slots);
  unsigned starts = 0;
  for (size_t s = 0; s < slots.size(); ++s)
    if (slots[s].kind == NodeKind::B && slots[s].i == 1 && (ek & (1u << s))) starts |= 1u << s;
  std::vector<std::vector<std::pair<unsigned, std::uint64_t>>> choices(slots.size());
  for (size_t s = 0; s < slots.size(); ++s)
    if (ek & (1u << s)) choices[s] = slot_choices(sc, slots, slots[s], en);

  std::vector<std::vector<std::uint64_t>> mat(dim, std::vector<std::uint64_t>(dim, 0));
  std::vector<std::uint64_t> cur(dim), next(dim);
  for (unsigned S = ek;; S = (S - 1) & ek) {
    for (unsigned tau = starts;; tau = (tau - 1) & starts) {
      unsigned active = S | tau;
      std::fill(cur.begin(), cur.end(), 0);
      cur[0] = 1;
      for (size_t s = 0; s < slots.size(); ++s) {
        if (!(active & (1u << s))) continue;
        std::fill(next.begin(), next.end(), 0);
        for (unsigned m = 0; m < dim; ++m) {
          if (!cur[m]) continue;
          for (auto [c, w] : choices[s]) next[m | c] += cur[m] * w;
        }
        cur.swap(next);
      }
      for (unsigned m = 0; m < dim; ++m) mat[S][m] += cur[m];
      if (tau == 0) break;
    }
    if (S == 0) break;
  }
  return mat;
}

inline BigCount thread_count(const Schema& sc, int n, const std::vector<Slot>& slots) {
  const unsigned dim = 1u << slots.size();
  std::vector<BigCount> f(dim);
  f[0] = 1;
  std::vector<std::vector<std::uint64_t>> mat;
  unsigned prev_ek = 0, prev_en = 0;
  for (int k = 0; k < n; ++k) {
    unsigned ek = exist_mask(sc, n, k, slots);
    unsigned en = exist_mask(sc, n, k + 1, slots);
    if (mat.empty() || ek != prev_ek || en != prev_en) {
      mat = transition_matrix(sc, n, k, slots);
      prev_ek = ek;
      prev_en = en;
    }
    std::vector<BigCount> g(dim);
    for (unsigned s = 0; s < dim; ++s) {
      if (f[s] == 0) continue;
      for (unsigned t = 0; t < dim; ++t)
        if (mat[s][t]) g[t] += f[s] * mat[s][t];
    }
    f = std::move(g);
  }
  return f[0];
}

inline double log_big(const BigCount& x) {
  if (x <= 0) throw ValidationError("log of a non-positive count");
  std::size_t bits = boost::multiprecision::msb(x);
  if (bits < 900) return std::log(x.convert_to<double>());
  BigCount top = x >> (bits - 64);
  return std::log(top.convert_to<double>()) + static_cast<double>(bits - 64) * std::log(2.0);
}

}  // namespace counting_detail

// Distinct entity-encoded subgraphs for one label; with T labels the entity
// layers choose independently, giving the T-fold product.
inline BigCount count_encodings_dp(const Schema& schema, int n) {
  using namespace counting_detail;
  validate_schema(schema);
  if (n < 1) throw ValidationError("sentence length must be >= 1");
  BigCount one_label = 1;
  if (schema.variant == SchemaVariant::SHARED) {
    one_label = thread_count(schema, n, thread_slots(schema, 0));
  } else {
    for (int j = 1; j <= schema.max_components; ++j)
      one_label *= thread_count(schema, n, thread_slots(schema, j));
  }
  BigCount r = 1;
  for (size_t t = 0; t < schema.labels.size(); ++t) r *= one_label;
  return r;
}

// Reference count: one outgoing hyperedge per node reached from the root,
// enumerated recursively; distinct assignments are distinct subgraphs.
inline BigCount count_encodings_bruteforce(const Schema& schema, int n) {
  validate_schema(schema);
  if (n < 1) throw ValidationError("sentence length must be >= 1");
  if (n > 4) throw InstanceTooLarge("brute-force subgraph enumeration is capped at 4 tokens");
  PackedGraph g = build_full_graph(schema, n);
  std::vector<int> pending;
  std::vector<char> state(static_cast<size_t>(g.num_nodes()), 0);  // 1 pending, 2 decided
  BigCount total = 0;
  auto rec = [&](auto&& self) -> void {
    int pick = -1;
    for (int v : pending)
      if (state[static_cast<size_t>(v)] == 1) {
        pick = v;
        break;
      }
    if (pick < 0) {
      ++total;
      return;
    }
    state[static_cast<size_t>(pick)] = 2;
    auto [lo, hi] = g.out[static_cast<size_t>(pick)];
    for (int e = lo; e < hi; ++e) {
      std::vector<int> added;
      for (int c : g.edge_children[static_cast<size_t>(e)])
        if (c != g.sink && state[static_cast<size_t>(c)] == 0) {
          state[static_cast<size_t>(c)] = 1;
          pending.push_back(c);
          added.push_back(c);
        }
      self(self);
      for (int c : added) {
        state[static_cast<size_t>(c)] = 0;
        pending.pop_back();
      }
    }
    state[static_cast<size_t>(pick)] = 1;
  };
  pending.push_back(g.root);
  state[static_cast<size_t>(g.root)] = 1;
  rec(rec);
  return total;
}

// Tag sequences that the linear encoder can actually produce: a valid
// sequence is canonical exactly when re-encoding its minimal reading yields
// the sequence itself.
inline BigCount count_linear_canonical(int n) {
  if (n < 1) throw ValidationError("sentence length must be >= 1");
  if (n > 6) throw InstanceTooLarge("canonical tag counting enumerates 7^n sequences; n <= 6");
  const std::string label = "D";
  std::vector<Tag> palette;
  for (int k = 0; k < 7; ++k)
    palette.push_back(Tag{static_cast<TagKind>(k), k == 0 ? "" : label});
  AnnotatedSentence s;
  s.tokens = std::vector<std::string>(static_cast<size_t>(n), "w");
  BigCount total = 0;
  TagSequence t(static_cast<size_t>(n), palette[0]);
  std::vector<int> odo(static_cast<size_t>(n), 0);
  while (true) {
    if (is_valid_sequence(t)) {
      LinearDecode dec = decode_linear(t, Heuristic::ENOUGH);
      s.mentions = dec.mentions;
      if (encode_linear(s) == t) ++total;
    }
    int pos = 0;
    while (pos < n && odo[static_cast<size_t>(pos)] == 6) {
      odo[static_cast<size_t>(pos)] = 0;
      t[static_cast<size_t>(pos)] = palette[0];
      ++pos;
    }
    if (pos == n) break;
    ++odo[static_cast<size_t>(pos)];
    t[static_cast<size_t>(pos)] = palette[static_cast<size_t>(odo[static_cast<size_t>(pos)])];
  }
  return total;
}

// Three-level grid walked right to left: a node combination is a 3-bit state
// (top level most significant). Interior nodes offer right and down-right
// edges, bottom nodes only the right edge, and an active node picks any
// nonempty subset. The empty combination counts nothing.
inline std::vector<std::vector<std::uint64_t>> grid_transition_counts() {
  std::vector<std::vector<std::uint64_t>> t(8, std::vector<std::uint64_t>(8, 0));
  const std::vector<std::vector<unsigned>> options = {
      {1u},            // level 0: to level 0
      {2u, 1u, 3u},    // level 1: to level 1, level 0, or both
      {4u, 2u, 6u},    // level 2: to level 2, level 1, or both
  };
  for (unsigned s = 1; s < 8; ++s) {
    std::vector<std::uint64_t> cur(8, 0);
    cur[0] = 1;
    for (unsigned lvl = 0; lvl < 3; ++lvl) {
      if (!(s & (1u << lvl))) continue;
      std::vector<std::uint64_t> next(8, 0);
      for (unsigned m = 0; m < 8; ++m) {
        if (!cur[m]) continue;
        for (unsigned c : options[lvl]) next[m | c] += cur[m];
      }
      cur.swap(next);
    }
    for (unsigned m = 0; m < 8; ++m) t[s][m] = cur[m];
  }
  return t;
}

inline std::vector<std::vector<double>> grid_transition_matrix() {
  auto counts = grid_transition_counts();
  std::vector<std::vector<double>> t(8, std::vector<double>(8, 0.0));
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) t[static_cast<size_t>(a)][static_cast<size_t>(b)] = static_cast<double>(counts[static_cast<size_t>(a)][static_cast<size_t>(b)]);
  return t;
}

// Connected DAGs from the top-left to the bottom-right node of the grid with
// n positions.
inline BigCount count_grid_dags(int n) {
  if (n < 3) throw ValidationError("the grid walk needs at least 3 positions");
  auto t = grid_transition_counts();
  std::vector<BigCount> f(8);
  f[1] = 1;  // only the bottom-right node at position 1
  for (int step = 1; step < n; ++step) {
    std::vector<BigCount> g(8);
    for (int s = 0; s < 8; ++s)
      for (int p = 0; p < 8; ++p)
        if (t[static_cast<size_t>(s)][static_cast<size_t>(p)])
          g[static_cast<size_t>(s)] += f[static_cast<size_t>(p)] * t[static_cast<size_t>(s)][static_cast<size_t>(p)];
    f = std::move(g);
  }
  return f[4];  // sources = top-left node only
}

// Per-position combination states of a schema with the bulk transition
// matrix, oriented left to right: matrix[s][s'] counts local choice sets
// taking state s at position k to s' at position k+1.
struct CountStateSpace {
  Schema schema;
  std::vector<GNode> slots;
  std::vector<std::vector<BigCount>> matrix;
  int empty_state = 0;
};

inline CountStateSpace build_count_state_space(const Schema& schema) {
  using namespace counting_detail;
  validate_schema(schema);
  std::vector<Slot> slots;
  if (schema.variant == SchemaVariant::SHARED) {
    slots = thread_slots(schema, 0);
  } else {
    for (int j = 1; j <= schema.max_components; ++j)
      for (const Slot& s : thread_slots(schema, j)) slots.push_back(s);
  }
  const int K = schema.max_components;
  const int n_bulk = 8 * K + 8, k_bulk = 4 * K + 4;
  auto mat = transition_matrix(schema, n_bulk, k_bulk, slots);
  CountStateSpace out;
  out.schema = schema;
  for (const Slot& s : slots) out.slots.push_back(GNode{s.kind, -1, 0, s.i, s.j});
  out.matrix.assign(mat.size(), std::vector<BigCount>(mat.size()));
  for (size_t a = 0; a < mat.size(); ++a)
    for (size_t b = 0; b < mat.size(); ++b) out.matrix[a][b] = mat[a][b];
  return out;
}

// Dominant eigenvalue by power iteration on the L1-normalized vector.
inline double dominant_growth(const std::vector<std::vector<double>>& m) {
  const size_t dim = m.size();
  if (dim == 0) throw ValidationError("empty matrix");
  for (const auto& row : m)
    if (row.size() != dim) throw ValidationError("matrix must be square");
  std::vector<double> v(dim, 1.0 / static_cast<double>(dim)), w(dim);
  double prev = std::numeric_limits<double>::quiet_NaN();
  double ratio = prev;
  for (int iter = 0; iter < 10000; ++iter) {
    double norm = 0;
    for (size_t a = 0; a < dim; ++a) {
      double acc = 0;
      for (size_t b = 0; b < dim; ++b) acc += m[a][b] * v[b];
      w[a] = acc;
      norm += std::abs(acc);
    }
    if (norm == 0) return 0.0;
    prev = ratio;
    ratio = norm;
    for (size_t a = 0; a < dim; ++a) v[a] = w[a] / norm;
    if (!std::isnan(prev) && std::abs(ratio - prev) <= 1e-9 * std::max(1.0, std::abs(ratio)))
      return ratio;
  }
  throw NonConvergence("power iteration did not settle; last ratios " + std::to_string(prev) +
                       " and " + std::to_string(ratio));
}

inline double dominant_growth(const Schema& schema) {
  CountStateSpace space = build_count_state_space(schema);
  std::vector<std::vector<double>> m(space.matrix.size(),
                                     std::vector<double>(space.matrix.size(), 0.0));
  for (size_t a = 0; a < m.size(); ++a)
    for (size_t b = 0; b < m.size(); ++b) m[a][b] = space.matrix[a][b].convert_to<double>();
  return dominant_growth(m);
}

// How many readings one encoding carries in model B per reading in model A,
// as a ratio of log total-encoding counts over sentences up to n_max. The
// linear model's count is replaced by its 2^(3n) upper bound past the
// enumerable lengths, making the returned value conservative.
inline double relative_ambiguity_estimate(ModelFamily a, ModelFamily b, int n_max,
                                          int max_components = 3) {
  using namespace counting_detail;
  if (n_max < 1) throw ValidationError("n_max must be >= 1");
  auto log_sum = [&](ModelFamily fam) -> double {
    if (fam == ModelFamily::LINEAR) {
      if (n_max <= 6) {
        BigCount s = 0;
        for (int i = 1; i <= n_max; ++i) s += count_linear_canonical(i);
        return log_big(s);
      }
      return 3.0 * n_max * std::log(2.0);
    }
    Schema sc{fam == ModelFamily::SHARED ? SchemaVariant::SHARED : SchemaVariant::SPLIT,
              max_components,
              {"D"}};
    BigCount s = 0;
    for (int i = 1; i <= n_max; ++i) s += count_encodings_dp(sc, i);
    return log_big(s);
  };
  return log_sum(b) / log_sum(a);
}

// Number of derivation trees of a packed graph (every occurrence of a node
// expands independently); exceeds the subgraph count whenever subgraphs can
// share nodes.
inline BigCount derivation_count(const PackedGraph& g) {
  std::vector<BigCount> d(static_cast<size_t>(g.num_nodes()));
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (v == g.sink) {
      d[static_cast<size_t>(v)] = 1;
      continue;
    }
    auto [lo, hi] = g.out[static_cast<size_t>(v)];
    for (int e = lo; e < hi; ++e) {
      BigCount p = 1;
      for (int c : g.edge_children[static_cast<size_t>(e)]) p *= d[static_cast<size_t>(c)];
      d[static_cast<size_t>(v)] += p;
    }
  }
  return d[static_cast<size_t>(g.root)];
}

}  // namespace dicent
