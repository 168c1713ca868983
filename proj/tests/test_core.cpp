#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "dicent/core.hpp"

using namespace dicent;

TEST_CASE("spans order by start then end") {
  CHECK(Span{0, 2} < Span{1, 2});
  CHECK(Span{0, 1} < Span{0, 2});
  CHECK(Span{1, 3} == Span{1, 3});
}

TEST_CASE("normalize_mention sorts spans") {
  Mention m = normalize_mention("D", {{5, 7}, {1, 3}});
  CHECK(m.label == "D");
  CHECK(m.components == std::vector<Span>{{1, 3}, {5, 7}});
}

TEST_CASE("normalize_mention merges touching spans") {
  Mention m = normalize_mention("D", {{0, 2}, {2, 4}});
  CHECK(m.components == std::vector<Span>{{0, 4}});

  Mention chain = normalize_mention("D", {{2, 3}, {0, 1}, {1, 2}});
  CHECK(chain.components == std::vector<Span>{{0, 3}});
}

TEST_CASE("normalize_mention rejects overlap") {
  CHECK_THROWS_AS(normalize_mention("D", {{0, 2}, {1, 3}}), OverlapWithinMention);
  CHECK_THROWS_AS(normalize_mention("D", {{0, 5}, {1, 2}}), OverlapWithinMention);
  CHECK_THROWS_AS(normalize_mention("D", {{0, 2}, {0, 2}}), OverlapWithinMention);
}

TEST_CASE("normalize_mention enforces the component limit") {
  CHECK_THROWS_AS(normalize_mention("D", {{0, 1}, {2, 3}, {4, 5}, {6, 7}}), TooManyComponents);
  CHECK_THROWS_AS(normalize_mention("D", {{0, 1}, {2, 3}}, 1), TooManyComponents);
  // Merging can bring the count back under the limit.
  Mention m = normalize_mention("D", {{0, 1}, {1, 2}}, 1);
  CHECK(m.components == std::vector<Span>{{0, 2}});
}

TEST_CASE("normalize_mention rejects malformed input") {
  CHECK_THROWS_AS(normalize_mention("D", {}), std::invalid_argument);
  CHECK_THROWS_AS(normalize_mention("D", {{2, 2}}), std::invalid_argument);
  CHECK_THROWS_AS(normalize_mention("D", {{3, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(normalize_mention("D", {{-1, 2}}), std::invalid_argument);
}

// Oracle: a span multiset overlaps iff some token is covered twice; otherwise
// the canonical components are the maximal runs of the covered token set.
TEST_CASE("normalize_mention agrees with a token-coverage oracle") {
  std::mt19937 rng(20260819);
  for (int trial = 0; trial < 2000; ++trial) {
    int nspans = 1 + static_cast<int>(rng() % 4);
    std::vector<Span> spans;
    std::vector<int> covered(10, 0);
    for (int i = 0; i < nspans; ++i) {
      int a = static_cast<int>(rng() % 8);
      int b = a + 1 + static_cast<int>(rng() % 3);
      spans.push_back({a, b});
      for (int t = a; t < b; ++t) ++covered[static_cast<size_t>(t)];
    }
    bool overlap = false;
    for (int c : covered) overlap = overlap || c > 1;
    std::vector<Span> runs;
    for (int t = 0; t < 10; ++t) {
      if (covered[static_cast<size_t>(t)] == 0) continue;
      if (!runs.empty() && runs.back().end == t)
        runs.back().end = t + 1;
      else
        runs.push_back({t, t + 1});
    }
    if (overlap) {
      CHECK_THROWS_AS(normalize_mention("X", spans, 10), OverlapWithinMention);
    } else if (static_cast<int>(runs.size()) > kDefaultMaxComponents) {
      CHECK_THROWS_AS(normalize_mention("X", spans), TooManyComponents);
    } else {
      CHECK(normalize_mention("X", spans).components == runs);
    }
  }
}

TEST_CASE("mentions order by label then component list") {
  Mention a{"A", {{3, 4}}};
  Mention b{"B", {{0, 1}}};
  CHECK(a < b);

  Mention prefix{"A", {{0, 1}}};
  Mention longer{"A", {{0, 1}, {2, 3}}};
  CHECK(prefix < longer);

  Mention early_gap{"A", {{0, 1}, {3, 4}}};
  Mention contig{"A", {{0, 2}}};
  CHECK(early_gap < contig);
}

TEST_CASE("canonicalize_mentions sorts and deduplicates") {
  std::vector<Mention> ms{{"B", {{0, 1}}}, {"A", {{2, 3}}}, {"B", {{0, 1}}}, {"A", {{0, 1}, {2, 3}}}};
  canonicalize_mentions(ms);
  REQUIRE(ms.size() == 3);
  CHECK(ms[0] == Mention{"A", {{0, 1}, {2, 3}}});
  CHECK(ms[1] == Mention{"A", {{2, 3}}});
  CHECK(ms[2] == Mention{"B", {{0, 1}}});
}

static AnnotatedSentence five_token_sentence() {
  AnnotatedSentence s;
  s.tokens = {"a", "b", "c", "d", "e"};
  return s;
}

TEST_CASE("validate_sentence accepts a well-formed sentence") {
  AnnotatedSentence s = five_token_sentence();
  s.attrs["pos"] = {"N", "N", "V", "N", "N"};
  s.sattrs["domain"] = "test";
  s.mentions = {{"D", {{0, 1}, {2, 3}}}, {"D", {{4, 5}}}};
  CHECK(validate_sentence(s).empty());
}

TEST_CASE("validate_sentence flags attribute length mismatch") {
  AnnotatedSentence s = five_token_sentence();
  s.attrs["pos"] = {"N", "N"};
  auto issues = validate_sentence(s);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].rule == "attr-length");
  CHECK(issues[0].mention_index == -1);
}

TEST_CASE("validate_sentence flags bad mention geometry") {
  AnnotatedSentence s = five_token_sentence();
  s.mentions = {{"D", {{3, 6}}}};
  CHECK(validate_sentence(s)[0].rule == "out-of-bounds");

  s.mentions = {{"D", {{2, 2}}}};
  CHECK(validate_sentence(s)[0].rule == "empty-span");

  s.mentions = {{"D", {{0, 2}, {1, 3}}}};
  CHECK(validate_sentence(s)[0].rule == "component-overlap");

  s.mentions = {{"D", {{0, 2}, {2, 3}}}};
  CHECK(validate_sentence(s)[0].rule == "component-touch");

  s.mentions = {{"D", {{3, 2}, {0, 1}}}};
  auto issues = validate_sentence(s);
  CHECK(!issues.empty());

  s.mentions = {{"", {{0, 1}}}};
  CHECK(validate_sentence(s)[0].rule == "empty-label");

  s.mentions = {{"D", {}}};
  CHECK(validate_sentence(s)[0].rule == "no-components");
}

TEST_CASE("validate_sentence respects the component limit argument") {
  AnnotatedSentence s;
  s.tokens = std::vector<std::string>(9, "t");
  s.mentions = {{"D", {{0, 1}, {2, 3}, {4, 5}, {6, 7}}}};
  auto issues = validate_sentence(s);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].rule == "too-many-components");
  CHECK(validate_sentence(s, 4).empty());
  CHECK(validate_sentence(s, 3).size() == 1);
}

TEST_CASE("validate_sentence flags ordering and duplicates") {
  AnnotatedSentence s = five_token_sentence();
  s.mentions = {{"D", {{2, 3}}}, {"D", {{0, 1}}}};
  CHECK(validate_sentence(s)[0].rule == "unordered-mentions");

  s.mentions = {{"D", {{0, 1}}}, {"D", {{0, 1}}}};
  CHECK(validate_sentence(s)[0].rule == "duplicate-mention");
}

TEST_CASE("validate_sentence aggregates multiple issues") {
  AnnotatedSentence s = five_token_sentence();
  s.attrs["pos"] = {"N"};
  s.mentions = {{"D", {{3, 6}}}, {"", {{0, 1}}}};
  auto issues = validate_sentence(s);
  // attr length, out-of-bounds span, empty label, out-of-order mentions
  CHECK(issues.size() == 4);
}

TEST_CASE("corpus label set is the sorted union") {
  Corpus c;
  AnnotatedSentence s1 = five_token_sentence();
  s1.mentions = {{"D", {{0, 1}}}, {"A", {{1, 2}}}};
  AnnotatedSentence s2 = five_token_sentence();
  s2.mentions = {{"C", {{0, 1}}}, {"A", {{2, 3}}}};
  c.sentences = {s1, s2};
  CHECK(c.label_set() == std::vector<std::string>{"A", "C", "D"});
  CHECK(Corpus{}.label_set().empty());
}
