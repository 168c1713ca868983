#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <set>
#include <string>

#include "dicent/counting.hpp"

using namespace dicent;
using Catch::Approx;

namespace {

Schema shared_schema(int k = 3) { return Schema{SchemaVariant::SHARED, k, {"D"}}; }
Schema split_schema(int k = 3) { return Schema{SchemaVariant::SPLIT, k, {"D"}}; }

std::vector<Mention> mention_universe(int n, int maxc, const std::string& label) {
  std::vector<Span> iv;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b <= n; ++b) iv.push_back({a, b});
  std::vector<Mention> out;
  std::vector<Span> picked;
  std::function<void(size_t)> rec = [&](size_t from) {
    if (!picked.empty()) out.push_back(Mention{label, picked});
    if (static_cast<int>(picked.size()) == maxc) return;
    for (size_t i = from; i < iv.size(); ++i) {
      if (!picked.empty() && iv[i].start < picked.back().end + 1) continue;
      picked.push_back(iv[i]);
      rec(i + 1);
      picked.pop_back();
    }
  };
  rec(0);
  std::sort(out.begin(), out.end());
  return out;
}

// Counts grid DAGs directly over edge subsets: keep a subset iff every edge
// leaves a node reachable from the top-left and every reachable node except
// the bottom-right keeps at least one outgoing edge.
long long grid_dags_oracle(int n) {
  struct Edge {
    int from_level, from_pos, to_level, to_pos;
  };
  std::vector<Edge> edges;
  for (int j = n; j >= 2; --j) {
    edges.push_back({2, j, 2, j - 1});
    edges.push_back({2, j, 1, j - 1});
    edges.push_back({1, j, 1, j - 1});
    edges.push_back({1, j, 0, j - 1});
    edges.push_back({0, j, 0, j - 1});
  }
  auto node_id = [&](int level, int pos) { return 3 * (pos - 1) + level; };
  const int nodes = 3 * n;
  long long count = 0;
  for (unsigned long long mask = 1; mask < (1ull << edges.size()); ++mask) {
    std::vector<std::vector<int>> out(static_cast<size_t>(nodes));
    for (size_t e = 0; e < edges.size(); ++e)
      if (mask & (1ull << e))
        out[static_cast<size_t>(node_id(edges[e].from_level, edges[e].from_pos))].push_back(
            node_id(edges[e].to_level, edges[e].to_pos));
    std::vector<char> reach(static_cast<size_t>(nodes), 0);
    std::vector<int> stack{node_id(2, n)};
    reach[static_cast<size_t>(node_id(2, n))] = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int c : out[static_cast<size_t>(v)])
        if (!reach[static_cast<size_t>(c)]) {
          reach[static_cast<size_t>(c)] = 1;
          stack.push_back(c);
        }
    }
    bool ok = true;
    for (size_t e = 0; e < edges.size() && ok; ++e)
      if ((mask & (1ull << e)) &&
          !reach[static_cast<size_t>(node_id(edges[e].from_level, edges[e].from_pos))])
        ok = false;
    for (int v = 0; v < nodes && ok; ++v) {
      if (!reach[static_cast<size_t>(v)] || v == node_id(0, 1)) continue;
      if (out[static_cast<size_t>(v)].empty()) ok = false;
    }
    if (ok) ++count;
  }
  return count;
}

}  // namespace

TEST_CASE("entity combination counts") {
  CHECK(count_combinations(1, 3) == 2);
  CHECK(count_combinations(2, 3) == 8);
  CHECK(count_combinations(3, 3) == 128);
  CHECK(count_combinations(4, 3) == 32768);
  CHECK(count_combinations(5, 3) == BigCount(2147483648LL));
  // With unrestricted component count the exponent collapses to 2^n - 1.
  for (int n = 1; n <= 4; ++n) {
    int k = (n + 1) / 2;
    CHECK(count_combinations_exponent(n, k) == (BigCount(1) << n) - 1);
  }
  CHECK(count_combinations_exponent(4, 3) == 15);
  CHECK(mention_universe(4, 3, "D").size() == 15);
  CHECK_THROWS_AS(count_combinations(30, 15), InstanceTooLarge);
}

TEST_CASE("encoding counts reproduce the published table") {
  const std::vector<BigCount> shared = {2, 8, 80, 3584, 533504};
  const std::vector<BigCount> split = {2, 8, 80, 6656, 2367488};
  for (int n = 1; n <= 5; ++n) {
    CHECK(count_encodings_dp(shared_schema(), n) == shared[static_cast<size_t>(n - 1)]);
    CHECK(count_encodings_dp(split_schema(), n) == split[static_cast<size_t>(n - 1)]);
  }
}

TEST_CASE("state DP agrees with subgraph enumeration") {
  for (int k = 1; k <= 3; ++k)
    for (int n = 1; n <= 4; ++n) {
      CHECK(count_encodings_dp(shared_schema(k), n) == count_encodings_bruteforce(shared_schema(k), n));
      CHECK(count_encodings_dp(split_schema(k), n) == count_encodings_bruteforce(split_schema(k), n));
    }
  // Two labels choose independently, so counts multiply.
  Schema two{SchemaVariant::SHARED, 3, {"A", "B"}};
  CHECK(count_encodings_dp(two, 2) == 64);
  CHECK(count_encodings_bruteforce(two, 2) == 64);
  CHECK_THROWS_AS(count_encodings_bruteforce(shared_schema(), 5), InstanceTooLarge);
}

TEST_CASE("canonical tag sequence counts") {
  CHECK(count_linear_canonical(1) == 2);
  CHECK(count_linear_canonical(2) == 8);
  CHECK(count_linear_canonical(3) == 46);
  CHECK(count_linear_canonical(4) == 310);
  CHECK(count_linear_canonical(5) == 2049);
  CHECK(count_linear_canonical(6) == 12663);
  BigCount p7 = 1;
  for (int n = 1; n <= 6; ++n) {
    p7 *= 7;
    CHECK(count_linear_canonical(n) < p7);
  }
  CHECK_THROWS_AS(count_linear_canonical(7), InstanceTooLarge);
}

TEST_CASE("canonical tag counting equals the encoder image") {
  for (int n = 1; n <= 4; ++n) {
    auto universe = mention_universe(n, 3, "D");
    AnnotatedSentence s;
    s.tokens = std::vector<std::string>(static_cast<size_t>(n), "w");
    std::set<std::string> image;
    for (size_t mask = 0; mask < (size_t{1} << universe.size()); ++mask) {
      std::vector<Mention> ms;
      for (size_t i = 0; i < universe.size(); ++i)
        if (mask & (size_t{1} << i)) ms.push_back(universe[i]);
      s.mentions = std::move(ms);
      image.insert(format_tagged(s.tokens, encode_linear(s), true));
    }
    CHECK(BigCount(image.size()) == count_linear_canonical(n));
  }
}

TEST_CASE("grid transition matrix matches the worked example") {
  const int want[8][8] = {
      {0, 0, 0, 0, 0, 0, 0, 0},
      {0, 1, 0, 0, 0, 0, 0, 0},
      {0, 1, 1, 1, 0, 0, 0, 0},
      {0, 1, 0, 2, 0, 0, 0, 0},
      {0, 0, 1, 0, 1, 0, 1, 0},
      {0, 0, 0, 1, 0, 1, 0, 1},
      {0, 0, 1, 2, 0, 1, 2, 3},
      {0, 0, 0, 3, 0, 1, 0, 5},
  };
  auto got = grid_transition_matrix();
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) CHECK(got[static_cast<size_t>(a)][static_cast<size_t>(b)] == want[a][b]);
}

TEST_CASE("grid DAG counts match enumeration and the closed form") {
  CHECK(count_grid_dags(3) == 1);
  CHECK(count_grid_dags(4) == 7);
  for (int n = 3; n <= 5; ++n) CHECK(count_grid_dags(n) == BigCount(grid_dags_oracle(n)));
  const long double r5 = std::sqrt(5.0L);
  for (int n = 3; n <= 18; ++n) {
    long double f = std::pow(3.0L + r5, n - 1) / (4.0L * r5 + 10.0L) -
                    std::pow(3.0L - r5, n - 1) / (4.0L * r5 - 10.0L) - 1.0L;
    CHECK(count_grid_dags(n) == BigCount(llroundl(f)));
  }
  double r40 = (count_grid_dags(41).convert_to<double>()) / (count_grid_dags(40).convert_to<double>());
  CHECK(r40 == Approx(3.0 + std::sqrt(5.0)).margin(1e-6));
  CHECK_THROWS_AS(count_grid_dags(2), ValidationError);
}

TEST_CASE("dominant growth rates") {
  CHECK(dominant_growth(grid_transition_matrix()) == Approx(3.0 + std::sqrt(5.0)).margin(1e-6));
  std::vector<std::vector<double>> id(3, std::vector<double>(3, 0.0));
  for (int i = 0; i < 3; ++i) id[static_cast<size_t>(i)][static_cast<size_t>(i)] = 1.0;
  CHECK(dominant_growth(id) == Approx(1.0).margin(1e-9));
  CHECK(dominant_growth({{0.0}}) == 0.0);
  CHECK_THROWS_AS(dominant_growth({{0.0, 2.0}, {0.5, 0.0}}), NonConvergence);

  double sh2 = dominant_growth(shared_schema(2));
  CHECK(sh2 == Approx(80.61).epsilon(0.01));
  double sh3 = dominant_growth(shared_schema(3));
  CHECK(sh3 == Approx(1261.86).epsilon(0.01));
  CHECK(sh3 > 1024.0);
}

TEST_CASE("count ratios converge to the dominant growth rate") {
  for (const Schema& sc : {shared_schema(2), shared_schema(3), split_schema(3)}) {
    double lam = dominant_growth(sc);
    double ratio = (count_encodings_dp(sc, 41).convert_to<double>()) /
                   (count_encodings_dp(sc, 40).convert_to<double>());
    CHECK(ratio == Approx(lam).epsilon(0.01));
  }
}

TEST_CASE("shared encodings dominate the linear tag space") {
  BigCount p7 = 7 * 7 * 7;
  for (int n = 4; n <= 20; ++n) {
    p7 *= 7;
    CHECK(count_encodings_dp(shared_schema(), n) > p7);
  }
}

TEST_CASE("splitting the component thread only adds encodings") {
  for (int n = 1; n <= 12; ++n) {
    BigCount sh = count_encodings_dp(shared_schema(), n);
    BigCount sp = count_encodings_dp(split_schema(), n);
    CHECK(sp >= sh);
    if (n >= 4) CHECK(sp > sh);
  }
  for (int n = 1; n <= 5; ++n) {
    BigCount cap = count_combinations(n, 3);
    CHECK(count_encodings_dp(shared_schema(), n) <= cap);
    CHECK(count_encodings_dp(split_schema(), n) <= cap);
  }
}

TEST_CASE("relative ambiguity estimates") {
  double lin_sh = relative_ambiguity_estimate(ModelFamily::LINEAR, ModelFamily::SHARED, 30);
  CHECK(lin_sh > 1.0);
  CHECK(lin_sh > 3.0);
  CHECK(relative_ambiguity_estimate(ModelFamily::SHARED, ModelFamily::SHARED, 10) ==
        Approx(1.0).margin(1e-12));
  CHECK(relative_ambiguity_estimate(ModelFamily::SHARED, ModelFamily::SPLIT, 30) > 1.0);
}

TEST_CASE("derivations outnumber subgraphs exactly where sharing occurs") {
  TagIndexer ix({"D"});
  BigCount p7 = 1;
  for (int n = 1; n <= 6; ++n) {
    p7 *= 7;
    CHECK(derivation_count(build_tag_trellis(ix, n)) == p7);
  }
  PackedGraph g = build_full_graph(shared_schema(), 3);
  CHECK(derivation_count(g) == 128);
  CHECK(count_encodings_dp(shared_schema(), 3) == 80);
  for (int n = 1; n <= 4; ++n) {
    for (const Schema& sc : {shared_schema(), split_schema()}) {
      PackedGraph full = build_full_graph(sc, n);
      CHECK(derivation_count(full) >= count_encodings_dp(sc, n));
    }
  }
}

TEST_CASE("state space construction exposes the bulk matrix") {
  CountStateSpace space = build_count_state_space(shared_schema(2));
  CHECK(space.slots.size() == 3);
  CHECK(space.matrix.size() == 8);
  CHECK(space.empty_state == 0);
  for (const auto& row : space.matrix)
    for (const BigCount& x : row) CHECK(x >= 0);
  CountStateSpace sp = build_count_state_space(split_schema(3));
  CHECK(sp.slots.size() == 9);
  CHECK(sp.matrix.size() == 512);
}
