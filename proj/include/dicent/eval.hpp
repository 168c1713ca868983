#pragma once

#include <algorithm>
#include <vector>

#include "dicent/core.hpp"
#include "dicent/errors.hpp"

namespace dicent {

// Exact-match mention scoring. With no predictions precision is 1, with no
// gold mentions recall is 1; F1 is 0 when both P and R are 0.
struct PRF {
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
  long long tp = 0, fp = 0, fn = 0;
};

inline PRF prf_from_counts(long long tp, long long fp, long long fn) {
  PRF r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  r.recall = tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  r.f1 = r.precision + r.recall == 0 ? 0.0
                                     : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

// A predicted mention is a true positive iff the identical (label, component
// list) mention appears in the same sentence's gold set. Duplicates within a
// side collapse first: mentions are sets.
inline PRF evaluate(const Corpus& gold, std::vector<std::vector<Mention>> pred) {
  if (gold.sentences.size() != pred.size())
    throw LengthMismatch("gold has " + std::to_string(gold.sentences.size()) +
                         " sentences, predictions have " + std::to_string(pred.size()));
  long long tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    canonicalize_mentions(pred[i]);
    const std::vector<Mention>& g = gold.sentences[i].mentions;
    long long hits = 0;
    for (const Mention& m : pred[i])
      if (std::binary_search(g.begin(), g.end(), m)) ++hits;
    tp += hits;
    fp += static_cast<long long>(pred[i].size()) - hits;
    fn += static_cast<long long>(g.size()) - hits;
  }
  return prf_from_counts(tp, fp, fn);
}

inline PRF evaluate(const Corpus& gold, const Corpus& pred) {
  std::vector<std::vector<Mention>> ms;
  ms.reserve(pred.sentences.size());
  for (const AnnotatedSentence& s : pred.sentences) ms.push_back(s.mentions);
  return evaluate(gold, std::move(ms));
}

}  // namespace dicent
