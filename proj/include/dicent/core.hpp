#pragma once

#include <algorithm>
#include <compare>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dicent/errors.hpp"

namespace dicent {

// Half-open token interval [start, end).
struct Span {
  int start = 0;
  int end = 0;

  friend auto operator<=>(const Span&, const Span&) = default;
};

// An entity mention: one label plus one or more ordered, pairwise
// gap-separated components.  A contiguous mention has exactly one component.
struct Mention {
  std::string label;
  std::vector<Span> components;

  friend auto operator<=>(const Mention&, const Mention&) = default;
};

constexpr int kDefaultMaxComponents = 3;

// The three model families: the 7-tag chain and the two hypergraph schemas.
enum class ModelFamily { LINEAR, SHARED, SPLIT };

// Decoding policy when a prediction is structurally ambiguous: ENOUGH picks a
// minimal set that explains every predicted piece; ALL enumerates every
// reading.
enum class Heuristic { ENOUGH, ALL };

inline std::string span_list_str(const std::vector<Span>& spans) {
  std::string s = "[";
  for (size_t i = 0; i < spans.size(); ++i) {
    if (i) s += ", ";
    s += "[" + std::to_string(spans[i].start) + "," + std::to_string(spans[i].end) + ")";
  }
  return s + "]";
}

// Canonicalizes a raw span list into a mention: sorts the spans, merges
// adjacent (touching) ones, and rejects overlap or too many components.
// Spans must be non-empty and individually well formed (start < end).
inline Mention normalize_mention(const std::string& label, std::vector<Span> spans,
                                 int max_components = kDefaultMaxComponents) {
  if (spans.empty()) throw std::invalid_argument("normalize_mention: empty span list");
  for (const Span& sp : spans) {
    if (sp.start < 0 || sp.end <= sp.start)
      throw std::invalid_argument("normalize_mention: malformed span " + span_list_str({sp}));
  }
  std::sort(spans.begin(), spans.end());
  std::vector<Span> merged;
  merged.push_back(spans[0]);
  for (size_t i = 1; i < spans.size(); ++i) {
    Span& last = merged.back();
    if (spans[i].start < last.end)
      throw OverlapWithinMention("overlapping spans in mention '" + label + "' " + span_list_str(spans));
    if (spans[i].start == last.end)
      last.end = spans[i].end;
    else
      merged.push_back(spans[i]);
  }
  if (static_cast<int>(merged.size()) > max_components)
    throw TooManyComponents("mention '" + label + "' " + span_list_str(merged) + " has " +
                            std::to_string(merged.size()) + " components, limit " +
                            std::to_string(max_components));
  return Mention{label, std::move(merged)};
}

// Sorts mentions into the canonical total order and drops duplicates.
inline void canonicalize_mentions(std::vector<Mention>& ms) {
  std::sort(ms.begin(), ms.end());
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
}

struct AnnotatedSentence {
  std::vector<std::string> tokens;
  std::map<std::string, std::vector<std::string>> attrs;  // per-token columns
  std::map<std::string, std::string> sattrs;              // sentence-level attributes
  std::vector<Mention> mentions;                          // canonical order, no duplicates

  int size() const { return static_cast<int>(tokens.size()); }

  friend bool operator==(const AnnotatedSentence&, const AnnotatedSentence&) = default;
};

struct ValidationIssue {
  int mention_index = -1;  // -1 for sentence-level issues
  std::string rule;
  std::string detail;
};

// Checks structural constraints on a sentence as stored.  Returns one issue
// per violated rule; an empty result means the sentence is valid.
inline std::vector<ValidationIssue> validate_sentence(const AnnotatedSentence& s,
                                                      int max_components = kDefaultMaxComponents) {
  std::vector<ValidationIssue> issues;
  int n = s.size();
  for (const auto& [name, col] : s.attrs) {
    if (static_cast<int>(col.size()) != n)
      issues.push_back({-1, "attr-length",
                        "attribute '" + name + "' has " + std::to_string(col.size()) +
                            " values for " + std::to_string(n) + " tokens"});
  }
  for (int mi = 0; mi < static_cast<int>(s.mentions.size()); ++mi) {
    const Mention& m = s.mentions[mi];
    if (m.label.empty()) issues.push_back({mi, "empty-label", "mention has empty label"});
    if (m.components.empty()) {
      issues.push_back({mi, "no-components", "mention has no components"});
      continue;
    }
    bool spans_ok = true;
    for (const Span& sp : m.components) {
      if (sp.end <= sp.start) {
        issues.push_back({mi, "empty-span", "span " + span_list_str({sp}) + " is empty or reversed"});
        spans_ok = false;
      }
      if (sp.start < 0 || sp.end > n) {
        issues.push_back({mi, "out-of-bounds",
                          "span " + span_list_str({sp}) + " outside sentence of length " +
                              std::to_string(n)});
        spans_ok = false;
      }
    }
    if (!spans_ok) continue;
    for (size_t i = 1; i < m.components.size(); ++i) {
      if (m.components[i].start < m.components[i - 1].end)
        issues.push_back({mi, "component-overlap",
                          "components overlap in " + span_list_str(m.components)});
      else if (m.components[i].start == m.components[i - 1].end)
        issues.push_back({mi, "component-touch",
                          "components touch in " + span_list_str(m.components) +
                              "; touching spans must be merged"});
    }
    if (static_cast<int>(m.components.size()) > max_components)
      issues.push_back({mi, "too-many-components",
                        "mention has " + std::to_string(m.components.size()) +
                            " components, limit " + std::to_string(max_components)});
  }
  for (size_t i = 1; i < s.mentions.size(); ++i) {
    if (s.mentions[i] < s.mentions[i - 1])
      issues.push_back({static_cast<int>(i), "unordered-mentions", "mentions not in canonical order"});
    else if (s.mentions[i] == s.mentions[i - 1])
      issues.push_back({static_cast<int>(i), "duplicate-mention", "duplicate mention"});
  }
  return issues;
}

struct Corpus {
  std::vector<AnnotatedSentence> sentences;

  friend bool operator==(const Corpus&, const Corpus&) = default;

  // Sorted union of mention labels across all sentences.
  std::vector<std::string> label_set() const {
    std::set<std::string> labels;
    for (const AnnotatedSentence& s : sentences)
      for (const Mention& m : s.mentions) labels.insert(m.label);
    return {labels.begin(), labels.end()};
  }
};

}  // namespace dicent
