#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dicent/core.hpp"
#include "dicent/errors.hpp"

namespace dicent {

// Knobs for the generated corpus: lengths, how many mentions per sentence,
// how many components per mention (index i weights i+1 components), and how
// often a mention is forced to share a token with an earlier same-label one.
struct SynthConfig {
  std::uint64_t seed = 7;
  int sentences = 100;
  int min_len = 6;
  int max_len = 12;
  int max_components = kDefaultMaxComponents;
  std::vector<std::string> labels = {"D"};
  std::vector<double> mention_count_weights = {0.10, 0.60, 0.30};
  std::vector<double> component_count_weights = {0.46, 0.48, 0.06};
  double overlap_prob = 0.0;
  double interleave_prob = 0.0;  // let a discontiguous mention weave through others
  double long_component_prob = 0.35;  // first component covers two tokens
  int filler_vocab = 25;
  int cue_vocab = 6;

  bool operator==(const SynthConfig&) const = default;
};

namespace synth_detail {

// All sampling goes through these fixed-width helpers; std::<distribution>
// implementations vary across standard libraries, mt19937_64 does not.
struct Rng {
  std::mt19937_64 g;
  explicit Rng(std::uint64_t seed) : g(seed) {}
  std::uint64_t next() { return g(); }
  int below(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }
  int in(int lo, int hi) { return lo + below(hi - lo + 1); }
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  int categorical(const std::vector<double>& w) {
    double total = 0;
    for (double x : w) total += x;
    double u = unit() * total;
    for (size_t i = 0; i < w.size(); ++i) {
      u -= w[i];
      if (u < 0) return static_cast<int>(i);
    }
    return static_cast<int>(w.size()) - 1;
  }
};

inline void check_weights(const std::vector<double>& w, const std::string& what) {
  if (w.empty()) throw InfeasibleConfig(what + " must not be empty");
  double total = 0;
  for (double x : w) {
    if (x < 0) throw InfeasibleConfig(what + " must be non-negative");
    total += x;
  }
  if (total <= 0) throw InfeasibleConfig(what + " must have positive total weight");
}

}  // namespace synth_detail

inline void validate_synth_config(const SynthConfig& cfg) {
  using namespace synth_detail;
  if (cfg.sentences < 0) throw InfeasibleConfig("sentence count must be >= 0");
  if (cfg.min_len < 1) throw InfeasibleConfig("min_len must be >= 1");
  if (cfg.max_len < cfg.min_len) throw InfeasibleConfig("max_len must be >= min_len");
  if (cfg.max_components < 1) throw InfeasibleConfig("max_components must be >= 1");
  if (cfg.labels.empty()) throw InfeasibleConfig("labels must not be empty");
  for (const std::string& l : cfg.labels)
    if (l.empty()) throw InfeasibleConfig("labels must be non-empty strings");
  check_weights(cfg.mention_count_weights, "mention_count_weights");
  check_weights(cfg.component_count_weights, "component_count_weights");
  if (cfg.overlap_prob < 0 || cfg.overlap_prob > 1)
    throw InfeasibleConfig("overlap_prob must be in [0,1]");
  if (cfg.long_component_prob < 0 || cfg.long_component_prob > 1)
    throw InfeasibleConfig("long_component_prob must be in [0,1]");
  if (cfg.filler_vocab < 1 || cfg.cue_vocab < 1)
    throw InfeasibleConfig("vocabulary sizes must be >= 1");
  int cmax = 0;
  for (size_t i = 0; i < cfg.component_count_weights.size(); ++i)
    if (cfg.component_count_weights[i] > 0) cmax = static_cast<int>(i) + 1;
  if (cmax > cfg.max_components)
    throw InfeasibleConfig("component_count_weights ask for " + std::to_string(cmax) +
                           " components with max_components " +
                           std::to_string(cfg.max_components));
  if (2 * cmax - 1 > cfg.max_len)
    throw InfeasibleConfig("sentences of length <= " + std::to_string(cfg.max_len) +
                           " cannot hold " + std::to_string(cmax) +
                           " gap-separated components");
}

// Deterministic given the seed. Mention tokens are label- and
// component-indexed cue words ("Dc0_3"), fillers are drawn from a separate
// vocabulary, so the gold structure is learnable from the words alone.
// Without the overlap branch mentions occupy disjoint token ranges.
inline Corpus generate_synthetic(const SynthConfig& cfg) {
  using namespace synth_detail;
  validate_synth_config(cfg);
  Rng rng(cfg.seed);
  Corpus corpus;

  for (int si = 0; si < cfg.sentences; ++si) {
    int L = rng.in(cfg.min_len, cfg.max_len);
    AnnotatedSentence s;
    for (int k = 0; k < L; ++k) s.tokens.push_back("f" + std::to_string(rng.below(cfg.filler_vocab)));

    std::vector<int> token_label(static_cast<size_t>(L), -1);
    struct Placed {
      int label;
      std::vector<Span> spans;
    };
    std::vector<Placed> placed;

    auto cover = [&](int li, int ci, Span sp) {
      for (int k = sp.start; k < sp.end; ++k) {
        if (token_label[static_cast<size_t>(k)] == -1) {
          s.tokens[static_cast<size_t>(k)] = cfg.labels[static_cast<size_t>(li)] + "c" +
                                             std::to_string(ci) + "_" +
                                             std::to_string(rng.below(cfg.cue_vocab));
          token_label[static_cast<size_t>(k)] = li;
        }
      }
    };

    int want = rng.categorical(cfg.mention_count_weights);
    for (int mi = 0; mi < want; ++mi) {
      int li = rng.below(static_cast<int>(cfg.labels.size()));
      int c = rng.categorical(cfg.component_count_weights) + 1;
      while (2 * c - 1 > L) --c;

      bool overlap = rng.unit() < cfg.overlap_prob;
      int share = -1;  // token the new mention must contain
      if (overlap) {
        std::vector<int> same;
        for (size_t p = 0; p < placed.size(); ++p)
          if (placed[p].label == li) same.push_back(static_cast<int>(p));
        if (!same.empty()) {
          const Placed& host = placed[static_cast<size_t>(same[rng.below(
              static_cast<int>(same.size()))])];
          share = host.spans[static_cast<size_t>(rng.below(
                                 static_cast<int>(host.spans.size())))].start;
        }
      }

      std::vector<Span> spans;
      for (int attempt = 0; attempt < 60 && spans.empty(); ++attempt) {
        std::vector<int> lens(static_cast<size_t>(c), 1);
        if (rng.unit() < cfg.long_component_prob) lens[0] = 2;
        std::vector<int> starts;
        if (share >= 0) {
          lens[0] = 1;
          starts.push_back(share);
          for (int i = 1; i < c; ++i) starts.push_back(rng.below(L));
        } else {
          for (int i = 0; i < c; ++i) starts.push_back(rng.below(L));
        }
        std::sort(starts.begin(), starts.end());
        if (share >= 0 && starts.front() != share) continue;
        bool ok = true;
        for (int i = 0; i < c && ok; ++i) {
          if (starts[static_cast<size_t>(i)] + lens[static_cast<size_t>(i)] > L) ok = false;
          if (i > 0 && starts[static_cast<size_t>(i)] <
                           starts[static_cast<size_t>(i - 1)] + lens[static_cast<size_t>(i - 1)] + 1)
            ok = false;
        }
        if (!ok) continue;
        if (share < 0) {
          // Fresh mentions claim untouched tokens and keep their whole extent
          // clear of every earlier mention, so they decode back exactly.
          int lo = starts.front();
          int hi = starts[static_cast<size_t>(c - 1)] + lens[static_cast<size_t>(c - 1)] - 1;
          for (const Placed& p : placed) {
            int plo = p.spans.front().start, phi = p.spans.back().end - 1;
            if (lo <= phi && plo <= hi) ok = false;
          }
          for (int i = 0; i < c && ok; ++i)
            for (int k = starts[static_cast<size_t>(i)];
                 k < starts[static_cast<size_t>(i)] + lens[static_cast<size_t>(i)]; ++k)
              if (token_label[static_cast<size_t>(k)] != -1) ok = false;
        } else {
          // Shared-token mentions may weave through the host, but never touch
          // tokens of another label.
          for (int i = 0; i < c && ok; ++i)
            for (int k = starts[static_cast<size_t>(i)];
                 k < starts[static_cast<size_t>(i)] + lens[static_cast<size_t>(i)]; ++k)
              if (token_label[static_cast<size_t>(k)] != -1 &&
                  token_label[static_cast<size_t>(k)] != li)
                ok = false;
        }
        if (!ok) continue;
        for (int i = 0; i < c; ++i)
          spans.push_back(
              {starts[static_cast<size_t>(i)],
               starts[static_cast<size_t>(i)] + lens[static_cast<size_t>(i)]});
      }
      if (spans.empty()) continue;
      for (int i = 0; i < static_cast<int>(spans.size()); ++i) cover(li, i, spans[static_cast<size_t>(i)]);
      placed.push_back({li, spans});
      s.mentions.push_back(
          normalize_mention(cfg.labels[static_cast<size_t>(li)], spans, cfg.max_components));
    }

    canonicalize_mentions(s.mentions);
    auto issues = validate_sentence(s, cfg.max_components);
    if (!issues.empty())
      throw ValidationError("generator produced an invalid sentence: " + issues.front().detail);
    corpus.sentences.push_back(std::move(s));
  }
  return corpus;
}

inline nlohmann::json synth_config_to_json(const SynthConfig& cfg) {
  return nlohmann::json{{"seed", cfg.seed},
                        {"sentences", cfg.sentences},
                        {"min_len", cfg.min_len},
                        {"max_len", cfg.max_len},
                        {"max_components", cfg.max_components},
                        {"labels", cfg.labels},
                        {"mention_count_weights", cfg.mention_count_weights},
                        {"component_count_weights", cfg.component_count_weights},
                        {"overlap_prob", cfg.overlap_prob},
                        {"long_component_prob", cfg.long_component_prob},
                        {"filler_vocab", cfg.filler_vocab},
                        {"cue_vocab", cfg.cue_vocab}};
}

// Missing keys keep their defaults; unknown keys are rejected as typos.
inline SynthConfig synth_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("synth config must be a JSON object");
  SynthConfig cfg;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "sentences") cfg.sentences = value.get<int>();
      else if (key == "min_len") cfg.min_len = value.get<int>();
      else if (key == "max_len") cfg.max_len = value.get<int>();
      else if (key == "max_components") cfg.max_components = value.get<int>();
      else if (key == "labels") cfg.labels = value.get<std::vector<std::string>>();
      else if (key == "mention_count_weights")
        cfg.mention_count_weights = value.get<std::vector<double>>();
      else if (key == "component_count_weights")
        cfg.component_count_weights = value.get<std::vector<double>>();
      else if (key == "overlap_prob") cfg.overlap_prob = value.get<double>();
      else if (key == "long_component_prob") cfg.long_component_prob = value.get<double>();
      else if (key == "filler_vocab") cfg.filler_vocab = value.get<int>();
      else if (key == "cue_vocab") cfg.cue_vocab = value.get<int>();
      else throw ValidationError("unknown synth config key '" + key + "'");
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("bad synth config value for '" + key + "': " + e.what());
    }
  }
  return cfg;
}

}  // namespace dicent
