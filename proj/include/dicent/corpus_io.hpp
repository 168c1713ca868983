#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dicent/core.hpp"
#include "dicent/errors.hpp"

namespace dicent {

// JSONL corpus format, one sentence object per line:
//   {"tokens":["a","b"],"attrs":{"pos":["N","V"]},"sattrs":{"id":"s1"},
//    "mentions":[{"label":"D","spans":[[0,1]]}]}
// "attrs" and "sattrs" are omitted when empty; "mentions" is always present.
// The writer emits keys alphabetically and spans sorted, so canonical files
// round-trip byte for byte.

namespace detail {

inline nlohmann::json parse_line(const std::string& line, int lineno) {
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(lineno, e.what());
  }
}

inline void require(bool ok, int lineno, const std::string& msg) {
  if (!ok) throw ParseError(lineno, msg);
}

}  // namespace detail

inline AnnotatedSentence sentence_from_json(const std::string& line, int lineno,
                                            int max_components, std::vector<std::string>* issues) {
  using detail::require;
  nlohmann::json j = detail::parse_line(line, lineno);
  require(j.is_object(), lineno, "sentence must be a JSON object");

  AnnotatedSentence s;
  require(j.contains("tokens") && j["tokens"].is_array(), lineno, "missing 'tokens' array");
  for (const auto& t : j["tokens"]) {
    require(t.is_string(), lineno, "'tokens' entries must be strings");
    s.tokens.push_back(t.get<std::string>());
  }
  int n = s.size();

  if (j.contains("attrs")) {
    require(j["attrs"].is_object(), lineno, "'attrs' must be an object");
    for (const auto& [name, col] : j["attrs"].items()) {
      require(col.is_array(), lineno, "attribute '" + name + "' must be an array");
      std::vector<std::string> values;
      for (const auto& v : col) {
        require(v.is_string(), lineno, "attribute '" + name + "' entries must be strings");
        values.push_back(v.get<std::string>());
      }
      if (static_cast<int>(values.size()) != n && issues)
        issues->push_back("line " + std::to_string(lineno) + ": attribute '" + name + "' has " +
                          std::to_string(values.size()) + " values for " + std::to_string(n) +
                          " tokens");
      s.attrs[name] = std::move(values);
    }
  }

  if (j.contains("sattrs")) {
    require(j["sattrs"].is_object(), lineno, "'sattrs' must be an object");
    for (const auto& [name, v] : j["sattrs"].items()) {
      require(v.is_string(), lineno, "sentence attribute '" + name + "' must be a string");
      s.sattrs[name] = v.get<std::string>();
    }
  }

  if (j.contains("mentions")) {
    require(j["mentions"].is_array(), lineno, "'mentions' must be an array");
    for (const auto& jm : j["mentions"]) {
      require(jm.is_object(), lineno, "mention must be an object");
      require(jm.contains("label") && jm["label"].is_string(), lineno, "mention needs a 'label' string");
      require(jm.contains("spans") && jm["spans"].is_array(), lineno, "mention needs a 'spans' array");
      std::string label = jm["label"].get<std::string>();
      std::vector<Span> spans;
      bool spans_ok = !jm["spans"].empty();
      if (!spans_ok && issues)
        issues->push_back("line " + std::to_string(lineno) + ": mention '" + label +
                          "' has no spans");
      for (const auto& js : jm["spans"]) {
        require(js.is_array() && js.size() == 2 && js[0].is_number_integer() && js[1].is_number_integer(),
                lineno, "span must be a [start,end] integer pair");
        Span sp{js[0].get<int>(), js[1].get<int>()};
        if (sp.start < 0 || sp.end <= sp.start || sp.end > n) {
          spans_ok = false;
          if (issues)
            issues->push_back("line " + std::to_string(lineno) + ": mention '" + label + "' span " +
                              span_list_str({sp}) + " invalid for sentence of length " +
                              std::to_string(n));
        }
        spans.push_back(sp);
      }
      if (label.empty() && issues) {
        issues->push_back("line " + std::to_string(lineno) + ": mention with empty label");
        spans_ok = false;
      }
      if (!spans_ok) continue;
      try {
        s.mentions.push_back(normalize_mention(label, spans, max_components));
      } catch (const Error& e) {
        if (issues) issues->push_back("line " + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  canonicalize_mentions(s.mentions);
  return s;
}

inline Corpus read_corpus(std::istream& in, int max_components = kDefaultMaxComponents) {
  Corpus corpus;
  std::vector<std::string> issues;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    corpus.sentences.push_back(sentence_from_json(line, lineno, max_components, &issues));
  }
  if (!issues.empty()) {
    std::string msg = std::to_string(issues.size()) + " validation issue(s):";
    for (const std::string& i : issues) msg += "\n  " + i;
    throw ValidationError(msg);
  }
  return corpus;
}

inline Corpus read_corpus_file(const std::string& path, int max_components = kDefaultMaxComponents) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Data, "cannot open corpus file: " + path);
  return read_corpus(in, max_components);
}

inline std::string sentence_to_json(const AnnotatedSentence& s) {
  nlohmann::json j;
  j["tokens"] = s.tokens;
  if (!s.attrs.empty()) j["attrs"] = s.attrs;
  if (!s.sattrs.empty()) j["sattrs"] = s.sattrs;
  j["mentions"] = nlohmann::json::array();
  for (const Mention& m : s.mentions) {
    nlohmann::json jm;
    jm["label"] = m.label;
    jm["spans"] = nlohmann::json::array();
    for (const Span& sp : m.components) jm["spans"].push_back({sp.start, sp.end});
    j["mentions"].push_back(std::move(jm));
  }
  return j.dump();
}

inline void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const AnnotatedSentence& s : corpus.sentences) out << sentence_to_json(s) << "\n";
}

inline void write_corpus_file(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Data, "cannot open file for writing: " + path);
  write_corpus(out, corpus);
}

}  // namespace dicent
