#pragma once

#include <chrono>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dicent/core.hpp"
#include "dicent/eval.hpp"
#include "dicent/features.hpp"
#include "dicent/hypergraph.hpp"
#include "dicent/synth.hpp"
#include "dicent/tag_codec.hpp"
#include "dicent/train.hpp"

namespace dicent {

// How much of the gold annotation survives a round trip through one family's
// encoding and one decode heuristic, with weights out of the picture.
struct AmbiguityRow {
  ModelFamily family = ModelFamily::LINEAR;
  Heuristic heuristic = Heuristic::ENOUGH;
  double precision_error = 0;  // 1 - precision of the round-tripped mentions
  double recall_error = 0;     // 1 - recall
  long long predicted = 0;
  long long gold = 0;
  int skipped = 0;  // sentences this family cannot encode
};

inline std::vector<AmbiguityRow> ambiguity_experiment(const Corpus& corpus, Schema base) {
  validate_schema(base);
  std::vector<AmbiguityRow> rows;
  for (ModelFamily family : {ModelFamily::LINEAR, ModelFamily::SHARED, ModelFamily::SPLIT}) {
    Schema sc = base;
    sc.variant = family == ModelFamily::SPLIT ? SchemaVariant::SPLIT : SchemaVariant::SHARED;
    for (Heuristic h : {Heuristic::ENOUGH, Heuristic::ALL}) {
      Corpus kept;
      std::vector<std::vector<Mention>> pred;
      int skipped = 0;
      for (const AnnotatedSentence& s : corpus.sentences) {
        if (s.size() < 1) continue;
        try {
          std::vector<Mention> got;
          if (family == ModelFamily::LINEAR) {
            TagSequence t = encode_linear(s, sc.max_components);
            got = decode_linear(t, h, sc.max_components).mentions;
          } else {
            got = decode_subgraph(encode_mentions(sc, s), h).mentions;
          }
          kept.sentences.push_back(s);
          pred.push_back(std::move(got));
        } catch (const Error&) {
          ++skipped;
        }
      }
      PRF prf = evaluate(kept, pred);
      rows.push_back({family, h, 1.0 - prf.precision, 1.0 - prf.recall, prf.tp + prf.fp,
                      prf.tp + prf.fn, skipped});
    }
  }
  return rows;
}

// Wall-clock cost of one objective-plus-gradient pass as the label set grows.
// The trellis transition set is quadratic in the number of types; the
// hypergraphs grow linearly, which is the point of the comparison.
struct BenchRow {
  ModelFamily family = ModelFamily::LINEAR;
  int types = 1;
  long long edges = 0;          // graph edges summed over the instances
  double seconds_per_pass = 0;  // best of the repeats
  double relative = 1.0;        // vs the first type count in the list
};

inline std::vector<BenchRow> bench_types(const std::vector<int>& type_counts, int sentences = 40,
                                         int repeats = 3) {
  if (type_counts.empty()) throw ValidationError("need at least one type count");
  for (int t : type_counts)
    if (t < 1) throw ValidationError("type counts must be >= 1");
  if (sentences < 1 || repeats < 1) throw ValidationError("sentences and repeats must be >= 1");

  std::vector<BenchRow> rows;
  for (ModelFamily family : {ModelFamily::LINEAR, ModelFamily::SHARED, ModelFamily::SPLIT}) {
    double base = -1;
    for (int T : type_counts) {
      SynthConfig cfg;
      cfg.seed = 11;
      cfg.sentences = sentences;
      cfg.labels.clear();
      for (int t = 0; t < T; ++t) cfg.labels.push_back("L" + std::to_string(t));
      Corpus corpus = generate_synthetic(cfg);

      Schema sc;
      sc.labels = cfg.labels;
      sc.max_components = cfg.max_components;
      sc.variant = family == ModelFamily::SPLIT ? SchemaVariant::SPLIT : SchemaVariant::SHARED;

      std::vector<FeatureTemplate> templates = default_templates();
      FeatureIndex index = build_index(corpus, templates, family, sc);
      index.freeze();
      GraphCache cache(family, sc);
      auto prepared = train_detail::prepare_instances(corpus, cache, templates, index, nullptr);

      std::vector<double> w(static_cast<size_t>(index.size()), 0.01);
      std::vector<double> grad;
      double best = std::numeric_limits<double>::infinity();
      for (int r = 0; r < repeats; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        train_detail::corpus_value_grad(prepared, w, 0.125, 1, grad);
        std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        best = std::min(best, dt.count());
      }
      long long edges = 0;
      for (const auto& pi : prepared) edges += pi.bundle->graph.num_edges();
      if (base < 0) base = best;
      rows.push_back({family, T, edges, best, best / base});
    }
  }
  return rows;
}

}  // namespace dicent
