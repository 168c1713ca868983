#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dicent/core.hpp"
#include "dicent/errors.hpp"

namespace dicent {

// Linear-chain encoding over seven tag kinds.  Per label, token roles are:
// head (in >= 2 mentions) -> BH/IH, body (in one discontiguous mention) ->
// BD/ID, contiguous (in one single-component mention) -> B/I, else O.
// IH continues a head run only while at least two common mentions span the
// adjacent token pair, and the plain B variants mark the literal first token
// of a component or mention.  A component whose first token is shared
// therefore resumes with I/ID directly after the head tokens.

enum class TagKind { O, B, I, BD, ID, BH, IH };

struct Tag {
  TagKind kind = TagKind::O;
  std::string label;  // empty for O

  friend auto operator<=>(const Tag&, const Tag&) = default;
};

using TagSequence = std::vector<Tag>;


struct LinearDecode {
  std::vector<Mention> mentions;
  std::vector<std::string> diagnostics;
};

inline const char* kind_name(TagKind k) {
  switch (k) {
    case TagKind::O: return "O";
    case TagKind::B: return "B";
    case TagKind::I: return "I";
    case TagKind::BD: return "BD";
    case TagKind::ID: return "ID";
    case TagKind::BH: return "BH";
    case TagKind::IH: return "IH";
  }
  return "O";
}

// with_label=false is the single-type rendering (bare kind); O is always bare.
inline std::string tag_to_string(const Tag& t, bool with_label) {
  if (t.kind == TagKind::O || !with_label || t.label.empty()) return kind_name(t.kind);
  return std::string(kind_name(t.kind)) + "-" + t.label;
}

inline std::string format_tagged(const std::vector<std::string>& tokens, const TagSequence& tags,
                                 bool with_label) {
  if (tokens.size() != tags.size())
    throw LengthMismatch("tag sequence length " + std::to_string(tags.size()) +
                         " does not match " + std::to_string(tokens.size()) + " tokens");
  std::string out;
  for (size_t j = 0; j < tokens.size(); ++j) {
    if (j) out += " ";
    out += tokens[j] + "/" + tag_to_string(tags[j], with_label);
  }
  return out;
}

namespace linear_detail {

enum class Role { None, C, D, H };

inline Role tag_role(TagKind k) {
  switch (k) {
    case TagKind::B:
    case TagKind::I: return Role::C;
    case TagKind::BD:
    case TagKind::ID: return Role::D;
    case TagKind::BH:
    case TagKind::IH: return Role::H;
    case TagKind::O: return Role::None;
  }
  return Role::None;
}

inline bool is_b_variant(TagKind k) {
  return k == TagKind::B || k == TagKind::BD || k == TagKind::BH;
}
inline bool is_i_variant(TagKind k) {
  return k == TagKind::I || k == TagKind::ID || k == TagKind::IH;
}

struct Run {
  int start = 0;
  int end = 0;
  Role role = Role::None;
  bool i_initial = false;

  Span span() const { return {start, end}; }
};

// Runs are B-variant-delimited segments.  An I-variant joining an adjacent
// same-role run continues it; any other I-variant opens an i_initial run,
// which marks a component resuming after shared (head) tokens.
inline std::vector<Run> extract_runs(const TagSequence& t, const std::string& label) {
  std::vector<Run> runs;
  for (int j = 0; j < static_cast<int>(t.size()); ++j) {
    Role r = tag_role(t[j].kind);
    if (r == Role::None || t[j].label != label) continue;
    if (!runs.empty() && runs.back().end == j && runs.back().role == r && is_i_variant(t[j].kind))
      runs.back().end = j + 1;
    else
      runs.push_back({j, j + 1, r, is_i_variant(t[j].kind)});
  }
  return runs;
}

inline bool gap_separated(Span a, Span b) {
  return b.start >= a.end + 1 || a.start >= b.end + 1;
}

inline int run_distance(Span a, Span b) {
  if (b.start >= a.end) return b.start - a.end;
  if (a.start >= b.end) return a.start - b.end;
  return 0;
}

inline std::vector<std::string> sequence_labels(const TagSequence& t) {
  std::set<std::string> labels;
  for (const Tag& tg : t)
    if (tg.kind != TagKind::O) labels.insert(tg.label);
  return {labels.begin(), labels.end()};
}

// A contiguous entity (continuations resolved) or a discontiguous body
// component with the extent the decoder settled on.
struct Piece {
  Span extent;
};

struct LabelParse {
  std::vector<Run> heads;
  std::vector<Piece> entities;  // contiguous, continuations resolved
  std::vector<Run> body_runs;   // discontiguous runs, left to right, unresolved
  std::vector<std::string> diags;
};

// Contiguous continuations resolve eagerly: an i_initial run reaches back
// through the adjacent head runs (absorbing a contiguous run they border),
// and an entity ending exactly where a head run starts extends across it,
// since in both shapes the mention supplies one of the head's covers.
// Discontiguous runs stay unresolved: how far a continuation reaches into
// the shared block, whether it merges with the previous component, and
// whether a component extends across a following head run are decoding
// choices (see component_configs).
inline LabelParse parse_label(const TagSequence& t, const std::string& label) {
  LabelParse p;
  std::vector<Run> runs = extract_runs(t, label);
  for (const Run& r : runs) {
    if (r.role == Role::H) p.heads.push_back(r);
    if (r.role == Role::D) p.body_runs.push_back(r);
  }

  std::vector<bool> consumed(runs.size(), false);
  std::vector<Span> spans;
  for (int idx = static_cast<int>(runs.size()) - 1; idx >= 0; --idx) {
    const Run& r = runs[static_cast<size_t>(idx)];
    if (r.role != Role::C || consumed[static_cast<size_t>(idx)]) continue;
    int s = r.start;
    if (r.i_initial) {
      int k = idx - 1;
      while (k >= 0) {
        const Run& left = runs[static_cast<size_t>(k)];
        if (left.role == Role::H && left.end == s) {
          s = left.start;
          --k;
          continue;
        }
        if (left.role == Role::C && left.end == s && !consumed[static_cast<size_t>(k)]) {
          consumed[static_cast<size_t>(k)] = true;
          s = left.start;
          if (left.i_initial) {
            --k;
            continue;
          }
        }
        break;
      }
    }
    spans.push_back({s, r.end});
  }
  std::sort(spans.begin(), spans.end());
  for (Span sp : spans) p.entities.push_back({sp});

  for (const Run& r : runs) {
    if (!r.i_initial) continue;
    bool resumes = r.start > 0 && t[static_cast<size_t>(r.start - 1)].label == label &&
                   tag_role(t[static_cast<size_t>(r.start - 1)].kind) == Role::H;
    if (!resumes)
      p.diags.push_back("label '" + label + "': continuation at token " +
                        std::to_string(r.start) + " has no head to resume from");
  }

  for (const Run& h : p.heads)
    for (Piece& e : p.entities)
      if (e.extent.end == h.start) {
        e.extent.end = h.end;
        break;
      }
  return p;
}

// One component of a mention may sit inside a head run: a component reaching
// into (or abutting) the run pairs with the far part of it, keeping one word
// of the run outside the mention as the gap.
inline bool partner_in_head(Span h, Span c, Span& out) {
  if (gap_separated(h, c)) {
    out = h;
    return true;
  }
  if (c.start >= h.start + 2 && c.start <= h.end) {
    out = {h.start, c.start - 1};
    return true;
  }
  if (c.end <= h.end - 2 && c.end >= h.start) {
    out = {c.end + 1, h.end};
    return true;
  }
  return false;
}

// Writes one label's tags into `tags`; positions of other labels are left
// untouched.  Shared with the decoder, which checks a candidate mention set
// by re-encoding it against the input.
inline void apply_label_tags(int n, const std::vector<const Mention*>& ms,
                             const std::string& label, TagSequence& tags) {
  std::vector<int> cover(static_cast<size_t>(n), 0);
  auto covers = [](const Mention* m, int j) {
    for (const Span& c : m->components)
      if (c.start <= j && j < c.end) return true;
    return false;
  };
  for (const Mention* m : ms)
    for (const Span& c : m->components)
      for (int j = c.start; j < c.end; ++j) ++cover[static_cast<size_t>(j)];
  auto head = [&](int j) { return j >= 0 && j < n && cover[static_cast<size_t>(j)] >= 2; };

  for (int j = 0; j < n; ++j) {
    if (!head(j)) continue;
    int common = 0;
    if (head(j - 1))
      for (const Mention* m : ms)
        if (covers(m, j - 1) && covers(m, j)) ++common;
    tags[static_cast<size_t>(j)] = {common >= 2 ? TagKind::IH : TagKind::BH, label};
  }

  for (const Mention* m : ms) {
    bool disc = m->components.size() >= 2;
    for (const Span& c : m->components)
      for (int j = c.start; j < c.end; ++j) {
        if (head(j)) continue;
        bool first = disc ? (j == c.start) : (j == m->components.front().start);
        TagKind k = disc ? (first ? TagKind::BD : TagKind::ID)
                         : (first ? TagKind::B : TagKind::I);
        tags[static_cast<size_t>(j)] = {k, label};
      }
  }
}

}  // namespace linear_detail

inline TagSequence encode_linear(const AnnotatedSentence& s,
                                 int max_components = kDefaultMaxComponents) {
  auto issues = validate_sentence(s, max_components);
  if (!issues.empty()) {
    std::string msg = "cannot encode invalid sentence:";
    for (const auto& i : issues) msg += " [" + i.rule + "] " + i.detail + ";";
    throw ValidationError(msg);
  }
  int n = s.size();
  TagSequence tags(static_cast<size_t>(n));

  std::vector<const std::string*> token_label(static_cast<size_t>(n), nullptr);
  for (const Mention& m : s.mentions)
    for (const Span& c : m.components)
      for (int j = c.start; j < c.end; ++j) {
        if (token_label[static_cast<size_t>(j)] && *token_label[static_cast<size_t>(j)] != m.label)
          throw MultiLabelConflict("token " + std::to_string(j) + " belongs to mentions of '" +
                                   *token_label[static_cast<size_t>(j)] + "' and '" + m.label + "'");
        token_label[static_cast<size_t>(j)] = &m.label;
      }

  std::map<std::string, std::vector<const Mention*>> by_label;
  for (const Mention& m : s.mentions) by_label[m.label].push_back(&m);

  for (const auto& [label, ms] : by_label)
    linear_detail::apply_label_tags(n, ms, label, tags);
  return tags;
}

inline bool is_valid_sequence(const TagSequence& t) {
  using namespace linear_detail;
  int n = static_cast<int>(t.size());
  for (int j = 0; j < n; ++j) {
    TagKind k = t[static_cast<size_t>(j)].kind;
    if (!is_i_variant(k)) continue;
    if (j == 0) return false;
    const Tag& prev = t[static_cast<size_t>(j - 1)];
    if (prev.label != t[static_cast<size_t>(j)].label) return false;
    bool ok = false;
    switch (k) {
      case TagKind::I:
        ok = prev.kind == TagKind::B || prev.kind == TagKind::I || prev.kind == TagKind::BH ||
             prev.kind == TagKind::IH;
        break;
      case TagKind::ID:
        ok = prev.kind == TagKind::BD || prev.kind == TagKind::ID || prev.kind == TagKind::BH ||
             prev.kind == TagKind::IH;
        break;
      case TagKind::IH:
        ok = prev.kind == TagKind::BH || prev.kind == TagKind::IH;
        break;
      default: break;
    }
    if (!ok) return false;
  }
  // Per label, two shapes are impossible no matter how extents resolve: a
  // single discontiguous run with no shared tokens anywhere (its mention
  // would need a gap-separated partner), and a lone short head run with no
  // bodies and no adjacent contiguous material (no two distinct mentions
  // can cover it).  Everything subtler is settled by decoding.
  for (const std::string& label : sequence_labels(t)) {
    std::vector<Run> runs = extract_runs(t, label);
    int bodies = 0, head_runs = 0;
    const Run* lone_head = nullptr;
    for (const Run& r : runs) {
      if (r.role == Role::D) ++bodies;
      if (r.role == Role::H) {
        ++head_runs;
        lone_head = &r;
      }
    }
    if (bodies == 1 && head_runs == 0) return false;
    if (bodies == 0 && head_runs == 1 && lone_head->end - lone_head->start < 3) {
      bool touching = false;
      for (const Run& r : runs)
        if (r.role == Role::C && (r.end == lone_head->start || r.start == lone_head->end))
          touching = true;
      if (!touching) return false;
    }
  }
  return true;
}

namespace linear_detail {

constexpr int kAllMentionCap = 10000;
constexpr long kEnoughSearchBudget = 200000;

// ALL: candidate components start at a literal first token (B-variant) or on
// any shared token, and end at a run boundary or on any shared token, so a
// mention may begin or stop inside head material.
inline std::vector<Span> component_candidates(const TagSequence& t, const std::vector<Role>& roles,
                                              Role want) {
  int n = static_cast<int>(t.size());
  std::vector<Span> out;
  for (int a = 0; a < n; ++a) {
    Role ra = roles[static_cast<size_t>(a)];
    if (ra != want && ra != Role::H) continue;
    if (ra == want && !is_b_variant(t[static_cast<size_t>(a)].kind)) continue;
    for (int b = a + 1; b <= n; ++b) {
      Role rb = roles[static_cast<size_t>(b - 1)];
      if (rb != want && rb != Role::H) break;
      if (rb == want && b - 1 > a && is_b_variant(t[static_cast<size_t>(b - 1)].kind))
        break;  // next mention's first token
      bool mid_run = b < n && roles[static_cast<size_t>(b)] == want &&
                     is_i_variant(t[static_cast<size_t>(b)].kind) && rb == want;
      if (!mid_run) out.push_back({a, b});
    }
  }
  return out;
}

inline void decode_all_label(const TagSequence& t, const std::string& label, int max_components,
                             std::vector<Mention>& mentions, std::vector<std::string>& diags,
                             bool& truncated) {
  int n = static_cast<int>(t.size());
  std::vector<Role> roles(static_cast<size_t>(n), Role::None);
  for (int j = 0; j < n; ++j)
    if (t[static_cast<size_t>(j)].label == label)
      roles[static_cast<size_t>(j)] = tag_role(t[static_cast<size_t>(j)].kind);

  auto emit = [&](Mention m) {
    if (static_cast<int>(mentions.size()) >= kAllMentionCap) {
      truncated = true;
      return false;
    }
    mentions.push_back(std::move(m));
    return true;
  };

  for (Span c : component_candidates(t, roles, Role::C))
    if (!emit(Mention{label, {c}})) return;

  std::vector<Span> disc = component_candidates(t, roles, Role::D);
  std::sort(disc.begin(), disc.end());
  std::vector<bool> used(disc.size(), false);
  std::vector<int> picked;
  std::function<bool(size_t)> combos = [&](size_t from) {
    if (static_cast<int>(picked.size()) >= 2) {
      std::vector<Span> comps;
      for (int i : picked) comps.push_back(disc[static_cast<size_t>(i)]);
      for (int i : picked) used[static_cast<size_t>(i)] = true;
      if (!emit(Mention{label, comps})) return false;
    }
    if (static_cast<int>(picked.size()) == max_components) return true;
    for (size_t i = from; i < disc.size(); ++i) {
      if (!picked.empty() && disc[i].start < disc[static_cast<size_t>(picked.back())].end + 1)
        continue;
      picked.push_back(static_cast<int>(i));
      bool cont = combos(i + 1);
      picked.pop_back();
      if (!cont) return false;
    }
    return true;
  };
  combos(0);

  for (size_t i = 0; i < disc.size(); ++i) {
    bool pure_head = true;
    for (int j = disc[i].start; j < disc[i].end; ++j)
      if (roles[static_cast<size_t>(j)] == Role::D) pure_head = false;
    if (!used[i] && !pure_head)
      diags.push_back("label '" + label + "': discontiguous component " +
                      span_list_str({disc[i]}) + " has no gap-separated partner");
  }
}

// ENOUGH head support plan: which components pair with which heads.
struct EnoughPlan {
  std::vector<std::pair<int, int>> attachments;  // (comp index, head index)
  std::vector<std::vector<int>> groups;          // comp indices per mention
  std::vector<int> dropped;
  bool complete = false;
};

inline bool plan_bodies(const std::vector<Piece>& comps, const std::vector<Run>& heads,
                        const std::vector<int>& head_cover, int max_components, EnoughPlan& out) {
  int q = static_cast<int>(comps.size());
  long budget = kEnoughSearchBudget;
  std::vector<bool> paired(static_cast<size_t>(q), false);
  std::vector<int> attach_count(heads.size(), 0);
  EnoughPlan cur;

  Span partner{0, 0};
  auto nearest_comps = [&](size_t h, int want) {
    std::vector<int> cand;
    for (int i = 0; i < q; ++i)
      if (!paired[static_cast<size_t>(i)] &&
          partner_in_head(heads[h].span(), comps[static_cast<size_t>(i)].extent, partner))
        cand.push_back(i);
    std::stable_sort(cand.begin(), cand.end(), [&](int a, int b) {
      int da = run_distance(heads[h].span(), comps[static_cast<size_t>(a)].extent);
      int db = run_distance(heads[h].span(), comps[static_cast<size_t>(b)].extent);
      if (da != db) return da < db;
      return comps[static_cast<size_t>(a)].extent.start < comps[static_cast<size_t>(b)].extent.start;
    });
    if (static_cast<int>(cand.size()) > want) cand.resize(static_cast<size_t>(want));
    return cand;
  };

  // After head pairing, leftover components pair up left to right,
  // backtracking when a choice strands the rest; a component with no
  // workable mate joins an existing mention as a third entry or attaches
  // to the nearest head, and otherwise the leaf fails.
  auto close_leaf = [&]() -> bool {
    if (--budget < 0) return false;
    EnoughPlan leaf = cur;
    std::vector<int> leftover;
    for (int i = 0; i < q; ++i)
      if (!paired[static_cast<size_t>(i)]) leftover.push_back(i);

    std::function<bool(std::vector<int>)> pair_up = [&](std::vector<int> rest) -> bool {
      if (--budget < 0) return false;
      if (rest.empty()) return true;
      int a = rest.front();
      for (size_t j = 1; j < rest.size(); ++j) {
        if (!gap_separated(comps[static_cast<size_t>(a)].extent,
                           comps[static_cast<size_t>(rest[j])].extent))
          continue;
        std::vector<int> next;
        for (size_t k = 1; k < rest.size(); ++k)
          if (k != j) next.push_back(rest[k]);
        leaf.groups.push_back({a, rest[j]});
        if (pair_up(std::move(next))) return true;
        leaf.groups.pop_back();
      }
      if (max_components >= 3)
        for (size_t g = leaf.groups.size(); g-- > 0;) {
          if (static_cast<int>(leaf.groups[g].size()) >= max_components) continue;
          bool fits = true;
          for (int other : leaf.groups[g])
            if (!gap_separated(comps[static_cast<size_t>(a)].extent,
                               comps[static_cast<size_t>(other)].extent))
              fits = false;
          if (!fits) continue;
          leaf.groups[g].push_back(a);
          if (pair_up({rest.begin() + 1, rest.end()})) return true;
          leaf.groups[g].pop_back();
        }
      int best = -1, best_d = 0;
      for (size_t h = 0; h < heads.size(); ++h) {
        if (!partner_in_head(heads[h].span(), comps[static_cast<size_t>(a)].extent, partner))
          continue;
        int d = run_distance(heads[h].span(), comps[static_cast<size_t>(a)].extent);
        if (best < 0 || d < best_d) {
          best = static_cast<int>(h);
          best_d = d;
        }
      }
      if (best >= 0) {
        leaf.attachments.push_back({a, best});
        if (pair_up({rest.begin() + 1, rest.end()})) return true;
        leaf.attachments.pop_back();
      }
      return false;
    };
    if (!pair_up(leftover)) return false;
    std::vector<int> final_attach = attach_count;
    for (auto [ci, hi] : leaf.attachments)
      if (std::find(cur.attachments.begin(), cur.attachments.end(),
                    std::make_pair(ci, hi)) == cur.attachments.end())
        ++final_attach[static_cast<size_t>(hi)];
    for (size_t h = 0; h < heads.size(); ++h) {
      int c = head_cover[h] + final_attach[h];
      if (c >= 1) continue;
      Span hs = heads[h].span();
      if (hs.end - hs.start >= 3) continue;
      bool support = false;
      for (size_t h2 = 0; h2 < heads.size(); ++h2)
        if (h2 != h && (heads[h2].end == hs.start || heads[h2].start == hs.end ||
                        gap_separated(heads[h2].span(), hs)))
          support = true;
      if (!support) return false;
    }
    leaf.complete = true;
    out = leaf;
    return true;
  };

  std::function<bool(size_t)> per_head = [&](size_t h) -> bool {
    if (--budget < 0) return false;
    if (h == heads.size()) return close_leaf();
    int covered = head_cover[h] + attach_count[h];
    int want = std::max(0, 2 - covered);
    for (int p = std::min(want, 2); p >= 0; --p) {
      std::vector<int> grab = nearest_comps(h, p);
      if (static_cast<int>(grab.size()) < p) continue;
      for (int i : grab) {
        paired[static_cast<size_t>(i)] = true;
        cur.attachments.push_back({i, static_cast<int>(h)});
      }
      attach_count[h] += p;
      if (per_head(h + 1)) return true;
      attach_count[h] -= p;
      for (int i : grab) {
        paired[static_cast<size_t>(i)] = false;
        cur.attachments.pop_back();
      }
    }
    return false;
  };

  return per_head(0);
}

// No drop-free plan: greedy with drops.
inline EnoughPlan greedy_bodies(const std::vector<Piece>& comps, const std::vector<Run>& heads) {
  int q = static_cast<int>(comps.size());
  EnoughPlan greedy;
  std::vector<bool> taken(static_cast<size_t>(q), false);
  for (int i = 0; i < q; ++i) {
    if (taken[static_cast<size_t>(i)]) continue;
    taken[static_cast<size_t>(i)] = true;
    int mate = -1;
    for (int j = i + 1; j < q; ++j)
      if (!taken[static_cast<size_t>(j)] &&
          gap_separated(comps[static_cast<size_t>(i)].extent, comps[static_cast<size_t>(j)].extent)) {
        mate = j;
        break;
      }
    if (mate >= 0) {
      taken[static_cast<size_t>(mate)] = true;
      greedy.groups.push_back({i, mate});
      continue;
    }
    int best = -1, best_d = 0;
    Span partner{0, 0};
    for (size_t h = 0; h < heads.size(); ++h) {
      if (!partner_in_head(heads[h].span(), comps[static_cast<size_t>(i)].extent, partner)) continue;
      int d = run_distance(heads[h].span(), comps[static_cast<size_t>(i)].extent);
      if (best < 0 || d < best_d) {
        best = static_cast<int>(h);
        best_d = d;
      }
    }
    if (best >= 0)
      greedy.attachments.push_back({i, best});
    else
      greedy.dropped.push_back(i);
  }
  return greedy;
}

constexpr int kEnoughConfigCap = 2048;

// Component extents compatible with the discontiguous runs.  A continuation
// run resumes through the shared block to its left: it may start at any
// word of the block, or merge into the previous component when that one
// ends exactly where the block starts.  A component may also end anywhere
// short of the next run, which surfaces as the optional extension across a
// following head run handled in decode_enough_label.
inline std::vector<std::vector<Piece>> component_configs(const TagSequence& t,
                                                         const std::string& label,
                                                         const std::vector<Run>& body_runs) {
  std::vector<std::vector<Piece>> configs;
  if (body_runs.empty()) {
    configs.push_back({});
    return configs;
  }
  auto head_at = [&](int j) {
    return j >= 0 && j < static_cast<int>(t.size()) && t[static_cast<size_t>(j)].label == label &&
           tag_role(t[static_cast<size_t>(j)].kind) == Role::H;
  };
  std::vector<Span> acc;
  std::function<void(int, int)> gen = [&](int i, int end) {
    if (static_cast<int>(configs.size()) >= kEnoughConfigCap) return;
    if (i < 0) {
      std::vector<Piece> comps;
      for (auto it = acc.rbegin(); it != acc.rend(); ++it) comps.push_back({*it});
      configs.push_back(std::move(comps));
      return;
    }
    const Run& r = body_runs[static_cast<size_t>(i)];
    int prev_end = i > 0 ? body_runs[static_cast<size_t>(i) - 1].end : 0;
    if (r.i_initial && head_at(r.start - 1)) {
      int x = r.start;
      while (head_at(x - 1)) {
        --x;
        acc.push_back({x, end});
        gen(i - 1, prev_end);
        acc.pop_back();
      }
      if (i > 0 && body_runs[static_cast<size_t>(i) - 1].end == x) gen(i - 1, end);
    } else {
      acc.push_back({r.start, end});
      gen(i - 1, prev_end);
      acc.pop_back();
    }
  };
  gen(static_cast<int>(body_runs.size()) - 1, body_runs.back().end);
  return configs;
}

// Adds head-supporting mentions until every head word has two covering
// mentions and every boundary inside a run has two spanning mentions (the
// tags put a continued-head there), while boundaries between adjacent runs
// keep at most one spanner.  Candidates, tried in order: the full run, its
// one-word-short prefix and suffix, a concatenation with an adjacent run
// (only while nothing spans the junction), and a two-component pairing
// with another run, nearest first.
inline void support_heads(const std::string& label, const std::vector<Run>& heads,
                          std::set<Mention>& mentions, std::vector<std::string>& diags) {
  auto cover = [&](int tok) {
    int c = 0;
    for (const Mention& m : mentions)
      for (const Span& sp : m.components)
        if (sp.start <= tok && tok < sp.end) {
          ++c;
          break;
        }
    return c;
  };
  auto spanners = [&](int j) {
    int c = 0;
    for (const Mention& m : mentions) {
      bool left = false, right = false;
      for (const Span& sp : m.components) {
        if (sp.start <= j - 1 && j - 1 < sp.end) left = true;
        if (sp.start <= j && j < sp.end) right = true;
      }
      if (left && right) ++c;
    }
    return c;
  };

  for (size_t hi = 0; hi < heads.size(); ++hi) {
    Span h = heads[hi].span();
    int guard = 2 * (h.end - h.start) + 8;
    while (guard-- > 0) {
      std::vector<int> weak_words, weak_bounds;
      for (int j = h.start; j < h.end; ++j)
        if (cover(j) < 2) weak_words.push_back(j);
      for (int j = h.start + 1; j < h.end; ++j)
        if (spanners(j) < 2) weak_bounds.push_back(j);
      if (weak_words.empty() && weak_bounds.empty()) break;

      auto helps = [&](const Mention& m) {
        auto m_covers = [&](int tok) {
          for (const Span& sp : m.components)
            if (sp.start <= tok && tok < sp.end) return true;
          return false;
        };
        for (int j : weak_words)
          if (m_covers(j)) return true;
        for (int j : weak_bounds)
          if (m_covers(j - 1) && m_covers(j)) return true;
        return false;
      };

      std::vector<Mention> cands;
      cands.push_back({label, {h}});
      if (h.end - h.start >= 3) {
        cands.push_back({label, {{h.start, h.end - 1}}});
        cands.push_back({label, {{h.start + 1, h.end}}});
      }
      for (size_t h2 = 0; h2 < heads.size(); ++h2) {
        if (h2 == hi) continue;
        Span other = heads[h2].span();
        if (other.end == h.start && spanners(h.start) == 0)
          cands.push_back({label, {{other.start, h.end}}});
        else if (other.start == h.end && spanners(h.end) == 0)
          cands.push_back({label, {{h.start, other.end}}});
      }
      std::vector<size_t> partners;
      for (size_t h2 = 0; h2 < heads.size(); ++h2)
        if (h2 != hi && gap_separated(heads[h2].span(), h)) partners.push_back(h2);
      std::stable_sort(partners.begin(), partners.end(), [&](size_t x, size_t y) {
        return run_distance(heads[x].span(), h) < run_distance(heads[y].span(), h);
      });
      for (size_t h2 : partners) {
        std::vector<Span> pair_spans{h, heads[h2].span()};
        std::sort(pair_spans.begin(), pair_spans.end());
        cands.push_back({label, pair_spans});
      }

      bool added = false;
      for (const Mention& m : cands)
        if (!mentions.count(m) && helps(m)) {
          mentions.insert(m);
          added = true;
          break;
        }
      if (!added) {
        diags.push_back("label '" + label + "': head run " + span_list_str({h}) +
                        " cannot be fully supported");
        break;
      }
    }
  }
}

inline std::set<Mention> plan_mentions(const std::string& label, const LabelParse& p,
                                       const std::vector<Piece>& comps, const EnoughPlan& plan) {
  std::set<Mention> mentions;
  for (const Piece& e : p.entities) mentions.insert(Mention{label, {e.extent}});
  for (const auto& g : plan.groups) {
    std::vector<Span> group;
    for (int i : g) group.push_back(comps[static_cast<size_t>(i)].extent);
    std::sort(group.begin(), group.end());
    mentions.insert(Mention{label, group});
  }
  for (auto [ci, hi] : plan.attachments) {
    Span partner{0, 0};
    partner_in_head(p.heads[static_cast<size_t>(hi)].span(),
                    comps[static_cast<size_t>(ci)].extent, partner);
    std::vector<Span> group{comps[static_cast<size_t>(ci)].extent, partner};
    std::sort(group.begin(), group.end());
    mentions.insert(Mention{label, group});
  }
  return mentions;
}

inline void decode_enough_label(const TagSequence& t, const std::string& label, int max_components,
                                std::set<Mention>& out, std::vector<std::string>& diags) {
  LabelParse p = parse_label(t, label);
  for (const std::string& d : p.diags) diags.push_back(d);

  TagSequence target(t.size());
  for (size_t j = 0; j < t.size(); ++j)
    if (t[j].kind != TagKind::O && t[j].label == label) target[j] = t[j];
  auto reencodes = [&](const std::set<Mention>& mentions) {
    std::vector<const Mention*> ms;
    ms.reserve(mentions.size());
    for (const Mention& m : mentions) ms.push_back(&m);
    TagSequence got(t.size());
    apply_label_tags(static_cast<int>(t.size()), ms, label, got);
    return got == target;
  };
  auto overlapping = [](Span a, Span b) { return a.start < b.end && b.start < a.end; };

  std::set<Mention> fallback;
  std::vector<std::string> fallback_diags;
  bool have_fallback = false;
  int tried = 0;

  std::vector<std::vector<Piece>> configs = component_configs(t, label, p.body_runs);
  for (const std::vector<Piece>& base : configs) {
    std::vector<std::pair<size_t, size_t>> ext;
    for (size_t c = 0; c < base.size(); ++c)
      for (size_t h = 0; h < p.heads.size(); ++h)
        if (base[c].extent.end == p.heads[h].start) ext.push_back({c, h});
    size_t bits = std::min(ext.size(), size_t{12});
    for (long mask = 0; mask < (1L << bits); ++mask) {
      if (++tried > kEnoughConfigCap) break;
      std::vector<Piece> comps = base;
      for (size_t b = 0; b < bits; ++b)
        if (mask & (1L << b)) comps[ext[b].first].extent.end = p.heads[ext[b].second].end;
      std::vector<int> head_cover(p.heads.size(), 0);
      for (size_t h = 0; h < p.heads.size(); ++h) {
        for (const Piece& e : p.entities)
          if (overlapping(e.extent, p.heads[h].span())) ++head_cover[h];
        for (const Piece& c : comps)
          if (overlapping(c.extent, p.heads[h].span())) ++head_cover[h];
      }
      EnoughPlan plan;
      if (!plan_bodies(comps, p.heads, head_cover, max_components, plan)) continue;
      std::set<Mention> mentions = plan_mentions(label, p, comps, plan);
      std::vector<std::string> local;
      support_heads(label, p.heads, mentions, local);
      if (reencodes(mentions)) {
        out.insert(mentions.begin(), mentions.end());
        for (const std::string& d : local) diags.push_back(d);
        return;
      }
      if (!have_fallback) {
        fallback = std::move(mentions);
        fallback_diags = std::move(local);
        have_fallback = true;
      }
    }
    if (tried > kEnoughConfigCap) break;
  }

  if (have_fallback) {
    out.insert(fallback.begin(), fallback.end());
    for (const std::string& d : fallback_diags) diags.push_back(d);
    return;
  }

  // No drop-free configuration: greedy pairing with drops, minimal extents.
  const std::vector<Piece>& comps = configs.front();
  EnoughPlan plan = greedy_bodies(comps, p.heads);
  for (int i : plan.dropped)
    diags.push_back("label '" + label + "': dropped unpairable discontiguous component " +
                    span_list_str({comps[static_cast<size_t>(i)].extent}));
  std::set<Mention> mentions = plan_mentions(label, p, comps, plan);
  support_heads(label, p.heads, mentions, diags);
  out.insert(mentions.begin(), mentions.end());
}

}  // namespace linear_detail

inline LinearDecode decode_linear(const TagSequence& t, Heuristic heuristic,
                                  int max_components = kDefaultMaxComponents) {
  using namespace linear_detail;
  LinearDecode result;
  if (heuristic == Heuristic::ALL) {
    bool truncated = false;
    for (const std::string& label : sequence_labels(t))
      decode_all_label(t, label, max_components, result.mentions, result.diagnostics, truncated);
    if (truncated)
      result.diagnostics.push_back("mention output truncated at " +
                                   std::to_string(kAllMentionCap));
    canonicalize_mentions(result.mentions);
  } else {
    std::set<Mention> out;
    for (const std::string& label : sequence_labels(t))
      decode_enough_label(t, label, max_components, out, result.diagnostics);
    result.mentions.assign(out.begin(), out.end());
  }
  return result;
}

}  // namespace dicent
