#include <catch2/catch_amalgamated.hpp>

#include <functional>
#include <random>

#include "dicent/tag_codec.hpp"

using namespace dicent;

namespace {

AnnotatedSentence sentence(int n, std::vector<Mention> ms) {
  AnnotatedSentence s;
  s.tokens = std::vector<std::string>(static_cast<size_t>(n), "w");
  canonicalize_mentions(ms);
  s.mentions = std::move(ms);
  return s;
}

TagSequence tags_of(const std::string& compact, const std::string& label = "D") {
  // compact: space-separated kinds, e.g. "BH O BD ID O BD"
  TagSequence out;
  size_t pos = 0;
  while (pos < compact.size()) {
    size_t sp = compact.find(' ', pos);
    std::string k = compact.substr(pos, sp == std::string::npos ? sp : sp - pos);
    pos = sp == std::string::npos ? compact.size() : sp + 1;
    Tag t;
    if (k == "O") t = {TagKind::O, ""};
    else if (k == "B") t = {TagKind::B, label};
    else if (k == "I") t = {TagKind::I, label};
    else if (k == "BD") t = {TagKind::BD, label};
    else if (k == "ID") t = {TagKind::ID, label};
    else if (k == "BH") t = {TagKind::BH, label};
    else if (k == "IH") t = {TagKind::IH, label};
    out.push_back(t);
  }
  return out;
}

std::string render(const TagSequence& t) {
  std::string out;
  for (size_t j = 0; j < t.size(); ++j) {
    if (j) out += " ";
    out += kind_name(t[j].kind);
  }
  return out;
}

// Every mention with <= maxc pairwise gap-separated components inside [0, n).
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

std::vector<Mention> decode_mentions(const TagSequence& t, Heuristic h) {
  return decode_linear(t, h).mentions;
}

bool superset(const std::vector<Mention>& big, const std::vector<Mention>& small) {
  for (const Mention& m : small)
    if (std::find(big.begin(), big.end(), m) == big.end()) return false;
  return true;
}

const std::vector<std::string> kFig1Tokens = {
    "EGD", "showed",   "hiatal", "hernia",  "and", "vertical", "laceration", "in", "distal",
    "esophagus", "with", "blood", "in", "stomach", "and", "overlying", "lac", "."};

const std::vector<Mention> kFig1Mentions = {
    {"D", {{2, 4}}}, {"D", {{6, 7}, {9, 10}}}, {"D", {{11, 14}}}, {"D", {{13, 14}, {16, 17}}}};

AnnotatedSentence fig1() {
  AnnotatedSentence s;
  s.tokens = kFig1Tokens;
  s.mentions = kFig1Mentions;
  canonicalize_mentions(s.mentions);
  return s;
}

AnnotatedSentence infarctions() {
  return sentence(6, {{"D", {{0, 1}}}, {"D", {{0, 1}, {2, 4}}}, {"D", {{0, 1}, {5, 6}}}});
}

}  // namespace

TEST_CASE("encode matches the hiatal hernia sentence") {
  TagSequence t = encode_linear(fig1());
  CHECK(render(t) == "O O B I O O BD O O BD O B I BH O O BD O");
}

TEST_CASE("encode matches the Infarctions sentence") {
  TagSequence t = encode_linear(infarctions());
  CHECK(render(t) == "BH O BD ID O BD");
}

TEST_CASE("encode gives all O for an empty mention set") {
  TagSequence t = encode_linear(sentence(4, {}));
  CHECK(render(t) == "O O O O");
  CHECK(t[0] == Tag{TagKind::O, ""});
}

TEST_CASE("encode marks overlap-extension tokens after a head") {
  // {[0,1), [0,2)}: token 0 is shared, token 1 continues the longer mention.
  CHECK(render(encode_linear(sentence(2, {{"D", {{0, 1}}}, {"D", {{0, 2}}}}))) == "BH I");
  CHECK(render(encode_linear(sentence(2, {{"D", {{0, 2}}}, {"D", {{1, 2}}}}))) == "B BH");
  // Nested: {[0,3), [1,2)}.
  CHECK(render(encode_linear(sentence(3, {{"D", {{0, 3}}}, {"D", {{1, 2}}}}))) == "B BH I");
}

TEST_CASE("encode starts a fresh component after an interior head") {
  // [11,14) with shared token 13 gives B I BH; seen in the full sentence too.
  AnnotatedSentence s = sentence(5, {{"D", {{0, 3}}}, {"D", {{2, 3}, {4, 5}}}});
  CHECK(render(encode_linear(s)) == "B I BH O BD");
}

TEST_CASE("encode separates touching components of different mentions") {
  AnnotatedSentence s = sentence(6, {{"D", {{0, 1}, {3, 4}}}, {"D", {{1, 2}, {5, 6}}}});
  CHECK(render(encode_linear(s)) == "BD BD O BD O BD");
}

TEST_CASE("encode handles fully shared runs") {
  // One spanning mention keeps the second head token at a fresh BH; a
  // continued head needs two mentions crossing the same boundary.
  CHECK(render(encode_linear(sentence(2, {{"D", {{0, 2}}}, {"D", {{0, 1}}}, {"D", {{1, 2}}}}))) ==
        "BH BH");
  CHECK(render(encode_linear(sentence(3, {{"D", {{0, 2}}}, {"D", {{0, 3}}}, {"D", {{1, 3}}}}))) ==
        "BH IH IH");
}

TEST_CASE("encode rejects cross-label token sharing") {
  CHECK_THROWS_AS(encode_linear(sentence(3, {{"A", {{0, 2}}}, {"B", {{1, 3}}}})),
                  MultiLabelConflict);
  // Distinct labels on disjoint tokens are fine.
  TagSequence t = encode_linear(sentence(4, {{"A", {{0, 1}}}, {"B", {{2, 3}}}}));
  CHECK(t[0] == Tag{TagKind::B, "A"});
  CHECK(t[2] == Tag{TagKind::B, "B"});
}

TEST_CASE("encode rejects invalid sentences") {
  CHECK_THROWS_AS(encode_linear(sentence(2, {{"D", {{0, 3}}}})), ValidationError);
}

TEST_CASE("tag rendering") {
  CHECK(tag_to_string({TagKind::BD, "D"}, false) == "BD");
  CHECK(tag_to_string({TagKind::BD, "D"}, true) == "BD-D");
  CHECK(tag_to_string({TagKind::O, ""}, true) == "O");
  CHECK(format_tagged({"a", "b"}, tags_of("BH O"), false) == "a/BH b/O");
  CHECK(format_tagged({"a", "b"}, tags_of("BH O"), true) == "a/BH-D b/O");
  CHECK_THROWS_AS(format_tagged({"a"}, tags_of("BH O"), false), LengthMismatch);
}

TEST_CASE("validity accepts and rejects the documented shapes") {
  CHECK(is_valid_sequence(tags_of("B I O")));
  CHECK_FALSE(is_valid_sequence(tags_of("O O BD")));
  CHECK_FALSE(is_valid_sequence(tags_of("O ID O")));
  CHECK_FALSE(is_valid_sequence(tags_of("I O")));
  CHECK(is_valid_sequence(tags_of("BH B")));
  // A continued head needs two mentions crossing the boundary; a lone short
  // head run with nothing adjacent cannot be doubly covered.
  CHECK_FALSE(is_valid_sequence(tags_of("BH IH")));
  CHECK(is_valid_sequence(tags_of("BH IH IH")));
  CHECK_FALSE(is_valid_sequence(tags_of("O BH O")));
  CHECK(is_valid_sequence(tags_of("BD O BD")));
  CHECK(is_valid_sequence(tags_of("BH O BD ID O BD")));
  CHECK(is_valid_sequence(tags_of("BD BH IH B")));
  CHECK(is_valid_sequence({}));
  // Validity is a cheap necessary filter: these pass it even though no
  // mention set produces them, and decoding reports the trouble instead.
  CHECK(is_valid_sequence(tags_of("BH BD")));
  CHECK(is_valid_sequence(tags_of("BD BD")));
}

TEST_CASE("validity requires matching labels across a run") {
  TagSequence t{{TagKind::B, "A"}, {TagKind::I, "B"}};
  CHECK_FALSE(is_valid_sequence(t));
  TagSequence ok{{TagKind::B, "A"}, {TagKind::I, "A"}};
  CHECK(is_valid_sequence(ok));
}

TEST_CASE("ALL decodes the Infarctions sequence to the full combination set") {
  auto got = decode_mentions(tags_of("BH O BD ID O BD"), Heuristic::ALL);
  std::vector<Mention> want = {
      {"D", {{0, 1}}},
      {"D", {{0, 1}, {2, 4}}},
      {"D", {{0, 1}, {2, 4}, {5, 6}}},
      {"D", {{0, 1}, {5, 6}}},
      {"D", {{2, 4}, {5, 6}}},
  };
  std::sort(want.begin(), want.end());
  CHECK(got == want);
}

TEST_CASE("ALL respects run boundaries") {
  CHECK(decode_mentions(tags_of("B I"), Heuristic::ALL) ==
        std::vector<Mention>{{"D", {{0, 2}}}});
  // A continuation may reach back across the shared token; a fresh B after
  // a head stays its own mention.
  CHECK(decode_mentions(tags_of("BH I"), Heuristic::ALL) ==
        std::vector<Mention>{{"D", {{0, 1}}}, {"D", {{0, 2}}}});
  CHECK(decode_mentions(tags_of("BH B"), Heuristic::ALL) ==
        std::vector<Mention>{{"D", {{0, 1}}}, {"D", {{1, 2}}}});
  CHECK(decode_mentions(tags_of("O O O"), Heuristic::ALL).empty());
  CHECK(decode_mentions(tags_of("B B"), Heuristic::ALL) ==
        std::vector<Mention>{{"D", {{0, 1}}}, {"D", {{1, 2}}}});
}

TEST_CASE("ALL respects the component limit") {
  auto k2 = decode_linear(tags_of("BH O BD ID O BD"), Heuristic::ALL, 2).mentions;
  for (const Mention& m : k2) CHECK(m.components.size() <= 2);
  CHECK(k2.size() == 4);
}

TEST_CASE("ALL reports unpairable discontiguous components") {
  auto res = decode_linear(tags_of("O O BD"), Heuristic::ALL);
  CHECK(res.mentions.empty());
  REQUIRE(res.diagnostics.size() == 1);
  CHECK(res.diagnostics[0].find("no gap-separated partner") != std::string::npos);
}

TEST_CASE("ALL truncates enormous outputs and says so") {
  TagSequence t;
  for (int i = 0; i < 40; ++i) {
    t.push_back({TagKind::BH, "D"});
    t.push_back({TagKind::O, ""});
  }
  auto res = decode_linear(t, Heuristic::ALL);
  CHECK(res.mentions.size() == 10000);
  REQUIRE_FALSE(res.diagnostics.empty());
  CHECK(res.diagnostics.back().find("truncated") != std::string::npos);
}

TEST_CASE("ENOUGH decodes the Infarctions sequence to exactly two mentions") {
  auto got = decode_mentions(tags_of("BH O BD ID O BD"), Heuristic::ENOUGH);
  std::vector<Mention> want = {{"D", {{0, 1}, {2, 4}}}, {"D", {{0, 1}, {5, 6}}}};
  CHECK(got == want);
}

TEST_CASE("ENOUGH recovers the hiatal hernia gold mentions") {
  TagSequence t = encode_linear(fig1());
  auto got = decode_mentions(t, Heuristic::ENOUGH);
  std::vector<Mention> want = kFig1Mentions;
  std::sort(want.begin(), want.end());
  CHECK(got == want);
}

TEST_CASE("ENOUGH pairs plain bodies") {
  CHECK(decode_mentions(tags_of("BD O BD"), Heuristic::ENOUGH) ==
        std::vector<Mention>{{"D", {{0, 1}, {2, 3}}}});
  CHECK(decode_mentions(tags_of("BD O BD O BD"), Heuristic::ENOUGH) ==
        std::vector<Mention>{{"D", {{0, 1}, {2, 3}, {4, 5}}}});
  // Touching bodies split across interleaved mentions.
  CHECK(decode_mentions(tags_of("BD BD O BD O BD"), Heuristic::ENOUGH) ==
        std::vector<Mention>{{"D", {{0, 1}, {3, 4}}}, {"D", {{1, 2}, {5, 6}}}});
}

TEST_CASE("ENOUGH drops a lone body and reports it") {
  auto res = decode_linear(tags_of("O O BD"), Heuristic::ENOUGH);
  CHECK(res.mentions.empty());
  REQUIRE(res.diagnostics.size() == 1);
  CHECK(res.diagnostics[0].find("dropped") != std::string::npos);
}

TEST_CASE("ENOUGH supports heads from neighbouring material") {
  // The entity left of the head extends across it and the head run itself
  // is added to reach two covers.
  CHECK(decode_mentions(tags_of("B BH B"), Heuristic::ENOUGH) ==
        std::vector<Mention>{{"D", {{0, 2}}}, {"D", {{1, 2}}}, {"D", {{2, 3}}}});
  CHECK(decode_mentions(tags_of("B BH I"), Heuristic::ENOUGH) ==
        std::vector<Mention>{{"D", {{0, 3}}}, {"D", {{1, 2}}}});
  // A component pairs with the far part of the head run it resumes from,
  // and the run gains its spanning support mentions.
  auto got = decode_mentions(tags_of("BD BH IH IH"), Heuristic::ENOUGH);
  std::vector<Mention> want = {{"D", {{0, 1}, {2, 4}}}, {"D", {{1, 3}}}, {"D", {{1, 4}}}};
  CHECK(got == want);
  TagSequence back = encode_linear(sentence(4, got));
  CHECK(render(back) == "BD BH IH IH");
}

TEST_CASE("ENOUGH reports an unsupportable bare head") {
  auto res = decode_linear(tags_of("O BH O"), Heuristic::ENOUGH);
  CHECK(res.mentions == std::vector<Mention>{{"D", {{1, 2}}}});
  REQUIRE_FALSE(res.diagnostics.empty());
  CHECK(res.diagnostics[0].find("head run") != std::string::npos);
}

TEST_CASE("ENOUGH degrades gracefully on sequences no mention set produces") {
  // Nothing can cover the head twice without disturbing the B token.
  auto res = decode_linear(tags_of("BH B"), Heuristic::ENOUGH);
  CHECK(res.mentions == std::vector<Mention>{{"D", {{0, 1}}}, {"D", {{1, 2}}}});
  REQUIRE_FALSE(res.diagnostics.empty());
  CHECK(res.diagnostics[0].find("cannot be fully supported") != std::string::npos);
  // A two-token run wants two boundary spanners but only one span exists.
  auto run = decode_linear(tags_of("BH IH"), Heuristic::ENOUGH);
  CHECK(run.mentions == std::vector<Mention>{{"D", {{0, 2}}}});
  REQUIRE_FALSE(run.diagnostics.empty());
}

TEST_CASE("mention universe sizes are as expected") {
  CHECK(mention_universe(1, 3, "D").size() == 1);
  CHECK(mention_universe(2, 3, "D").size() == 3);
  CHECK(mention_universe(3, 3, "D").size() == 7);
  CHECK(mention_universe(4, 3, "D").size() == 15);
}

static void check_roundtrip(int n, const std::vector<Mention>& ms) {
  AnnotatedSentence s = sentence(n, std::vector<Mention>(ms));
  TagSequence t = encode_linear(s);
  INFO("n=" << n << " tags=" << render(t));
  CHECK(is_valid_sequence(t));

  auto all = decode_linear(t, Heuristic::ALL);
  CHECK(superset(all.mentions, s.mentions));

  auto enough = decode_linear(t, Heuristic::ENOUGH);
  CHECK(enough.diagnostics.empty());
  CHECK(all.mentions.size() >= enough.mentions.size());
  AnnotatedSentence back = sentence(n, enough.mentions);
  TagSequence t2 = encode_linear(back);
  CHECK(render(t2) == render(t));

  // Encoding is a function of the mention set: re-encoding ALL's superset is
  // not required to match, but re-encoding the gold set again must.
  CHECK(render(encode_linear(s)) == render(t));
}

TEST_CASE("exhaustive round-trip properties up to n=4") {
  for (int n = 1; n <= 4; ++n) {
    auto universe = mention_universe(n, 3, "D");
    size_t total = size_t{1} << universe.size();
    for (size_t mask = 0; mask < total; ++mask) {
      std::vector<Mention> ms;
      for (size_t i = 0; i < universe.size(); ++i)
        if (mask & (size_t{1} << i)) ms.push_back(universe[i]);
      check_roundtrip(n, ms);
    }
  }
}

TEST_CASE("random round-trip properties up to n=8") {
  std::mt19937 rng(77);
  for (int trial = 0; trial < 1500; ++trial) {
    int n = 2 + static_cast<int>(rng() % 7);
    auto universe = mention_universe(n, 3, "D");
    int count = 1 + static_cast<int>(rng() % 5);
    std::vector<Mention> ms;
    for (int c = 0; c < count; ++c) ms.push_back(universe[rng() % universe.size()]);
    canonicalize_mentions(ms);
    check_roundtrip(n, ms);
  }
}

TEST_CASE("random multi-label round trips") {
  std::mt19937 rng(78);
  // Disjoint halves: label A on the left, label B on the right.
  for (int trial = 0; trial < 300; ++trial) {
    int n = 4 + static_cast<int>(rng() % 5);
    int half = 2 + static_cast<int>(rng() % (n - 3));
    auto ua = mention_universe(half, 3, "A");
    auto ub = mention_universe(n - half, 3, "B");
    std::vector<Mention> ms;
    for (int c = 0; c < 1 + static_cast<int>(rng() % 2); ++c)
      ms.push_back(ua[rng() % ua.size()]);
    for (int c = 0; c < 1 + static_cast<int>(rng() % 2); ++c) {
      Mention m = ub[rng() % ub.size()];
      for (Span& sp : m.components) {
        sp.start += half;
        sp.end += half;
      }
      ms.push_back(m);
    }
    canonicalize_mentions(ms);
    check_roundtrip(n, ms);
  }
  // Interleaved draws, rejecting the ones that share a token across labels.
  int done = 0;
  for (int trial = 0; trial < 400; ++trial) {
    int n = 3 + static_cast<int>(rng() % 6);
    auto ua = mention_universe(n, 3, "A");
    auto ub = mention_universe(n, 3, "B");
    std::vector<Mention> ms{ua[rng() % ua.size()], ub[rng() % ub.size()]};
    canonicalize_mentions(ms);
    AnnotatedSentence s = sentence(n, std::vector<Mention>(ms));
    try {
      encode_linear(s);
    } catch (const MultiLabelConflict&) {
      continue;
    }
    check_roundtrip(n, ms);
    ++done;
  }
  CHECK(done > 20);
}
