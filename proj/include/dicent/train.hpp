#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dicent/core.hpp"
#include "dicent/errors.hpp"
#include "dicent/features.hpp"
#include "dicent/inference.hpp"

namespace dicent {

inline const char* family_name(ModelFamily f) {
  switch (f) {
    case ModelFamily::LINEAR: return "linear";
    case ModelFamily::SHARED: return "shared";
    case ModelFamily::SPLIT: return "split";
  }
  return "?";
}

inline ModelFamily family_from_name(const std::string& s) {
  if (s == "linear") return ModelFamily::LINEAR;
  if (s == "shared") return ModelFamily::SHARED;
  if (s == "split") return ModelFamily::SPLIT;
  throw ValidationError("unknown model family '" + s + "'");
}

struct TrainConfig {
  double lambda = 0.125;
  double tolerance = 1e-6;  // on the gradient's infinity norm
  int max_iterations = 500;
  int workers = 1;
  std::uint64_t seed = 0;  // reserved; batch training is deterministic regardless

  bool operator==(const TrainConfig&) const = default;
};

struct ModelMeta {
  double lambda = 0;
  int iterations = 0;
  double final_objective = 0;
};

struct Model {
  ModelFamily family = ModelFamily::SHARED;
  Schema schema;  // labels + max_components; variant mirrors the family
  std::vector<FeatureTemplate> templates;
  FeatureIndex index;  // frozen
  std::vector<double> w;
  ModelMeta meta;
};

struct TrainReport {
  std::vector<double> objective_log;  // objective after each accepted step
  std::vector<std::string> skipped;   // one reason per skipped instance
  int iterations = 0;
  double grad_inf_norm = 0;
  bool converged = false;
};

namespace train_detail {

struct PreparedInstance {
  int sentence = -1;
  const GraphBundle* bundle = nullptr;
  std::vector<std::vector<int>> feats;  // per edge id
  std::vector<int> gold;
  std::vector<double> gold_mult;
};

// Expected-count semantics: the gold derivation expands a node once per
// demanding parent, so its edges count with occurrence multiplicity, matching
// both logZ's derivation sum and the marginals at certainty.
inline std::vector<double> gold_multiplicities(const PackedGraph& g,
                                               const std::vector<int>& edges) {
  std::vector<double> occ(static_cast<size_t>(g.num_nodes()), 0.0);
  occ[static_cast<size_t>(g.root)] = 1.0;
  std::vector<size_t> order(edges.size());
  for (size_t i = 0; i < edges.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return g.edge_parent[static_cast<size_t>(edges[a])] >
           g.edge_parent[static_cast<size_t>(edges[b])];
  });
  std::vector<double> mult(edges.size(), 0.0);
  for (size_t i : order) {
    int e = edges[i];
    double m = occ[static_cast<size_t>(g.edge_parent[static_cast<size_t>(e)])];
    mult[i] = m;
    for (int c : g.edge_children[static_cast<size_t>(e)]) occ[static_cast<size_t>(c)] += m;
  }
  return mult;
}

inline std::vector<PreparedInstance> prepare_instances(const Corpus& corpus, GraphCache& cache,
                                                       const std::vector<FeatureTemplate>& templates,
                                                       FeatureIndex& index,
                                                       std::vector<std::string>* skipped) {
  std::vector<PreparedInstance> out;
  for (size_t si = 0; si < corpus.sentences.size(); ++si) {
    const AnnotatedSentence& s = corpus.sentences[si];
    std::string why;
    if (s.size() < 1) {
      if (skipped) skipped->push_back("sentence " + std::to_string(si) + ": empty");
      continue;
    }
    const GraphBundle& b = cache.get(s.size());
    PreparedInstance inst;
    if (!gold_edges(cache.family(), cache.schema(), b, s, inst.gold, &why)) {
      if (skipped) skipped->push_back("sentence " + std::to_string(si) + ": " + why);
      continue;
    }
    inst.sentence = static_cast<int>(si);
    inst.bundle = &b;
    inst.feats = featurize_edges(s, b, templates, index);
    inst.gold_mult = gold_multiplicities(b.graph, inst.gold);
    out.push_back(std::move(inst));
  }
  return out;
}

inline void edge_scores(const PreparedInstance& inst, const std::vector<double>& w,
                        EdgeScoreTable& scores) {
  scores.assign(inst.feats.size(), 0.0);
  for (size_t e = 0; e < inst.feats.size(); ++e) {
    double t = 0;
    for (int id : inst.feats[e]) t += w[static_cast<size_t>(id)];
    scores[e] = t;
  }
}

inline double instance_value(const PreparedInstance& inst, const std::vector<double>& w,
                             EdgeScoreTable& scratch) {
  edge_scores(inst, w, scratch);
  double gold = 0;
  for (size_t i = 0; i < inst.gold.size(); ++i)
    gold += inst.gold_mult[i] * scratch[static_cast<size_t>(inst.gold[i])];
  return gold - inside_logZ(inst.bundle->graph, scratch);
}

inline double instance_value_grad(const PreparedInstance& inst, const std::vector<double>& w,
                                  EdgeScoreTable& scratch, std::vector<double>& grad) {
  edge_scores(inst, w, scratch);
  double gold = 0;
  for (size_t i = 0; i < inst.gold.size(); ++i) {
    double m = inst.gold_mult[i];
    gold += m * scratch[static_cast<size_t>(inst.gold[i])];
    for (int id : inst.feats[static_cast<size_t>(inst.gold[i])]) grad[static_cast<size_t>(id)] += m;
  }
  double logz = inside_logZ(inst.bundle->graph, scratch);
  std::vector<double> marg = edge_marginals(inst.bundle->graph, scratch);
  for (size_t e = 0; e < inst.feats.size(); ++e) {
    if (marg[e] == 0.0) continue;
    for (int id : inst.feats[e]) grad[static_cast<size_t>(id)] -= marg[e];
  }
  return gold - logz;
}

// Instances are split into contiguous chunks and the per-chunk partials are
// reduced in chunk order, so results do not depend on thread scheduling.
template <typename Work>
inline void run_chunked(size_t count, int workers, Work&& work) {
  int w = std::max(1, workers);
  if (w == 1 || count <= 1) {
    work(0, 0, count);
    return;
  }
  w = std::min<size_t>(static_cast<size_t>(w), count);
  std::vector<std::thread> threads;
  for (int t = 0; t < w; ++t) {
    size_t lo = count * static_cast<size_t>(t) / static_cast<size_t>(w);
    size_t hi = count * static_cast<size_t>(t + 1) / static_cast<size_t>(w);
    threads.emplace_back([&work, t, lo, hi] { work(static_cast<size_t>(t), lo, hi); });
  }
  for (std::thread& th : threads) th.join();
}

inline double corpus_value(const std::vector<PreparedInstance>& instances,
                           const std::vector<double>& w, double lambda, int workers) {
  size_t chunks = std::max<size_t>(1, std::min<size_t>(static_cast<size_t>(std::max(1, workers)),
                                                       instances.size()));
  std::vector<double> partial(chunks, 0.0);
  run_chunked(instances.size(), workers, [&](size_t t, size_t lo, size_t hi) {
    EdgeScoreTable scratch;
    double acc = 0;
    for (size_t i = lo; i < hi; ++i) acc += instance_value(instances[i], w, scratch);
    partial[t] = acc;
  });
  double value = 0;
  for (double p : partial) value += p;
  double reg = 0;
  for (double x : w) reg += x * x;
  return value - lambda * reg;
}

inline double corpus_value_grad(const std::vector<PreparedInstance>& instances,
                                const std::vector<double>& w, double lambda, int workers,
                                std::vector<double>& grad) {
  size_t chunks = std::max<size_t>(1, std::min<size_t>(static_cast<size_t>(std::max(1, workers)),
                                                       instances.size()));
  std::vector<double> value(chunks, 0.0);
  std::vector<std::vector<double>> partial(chunks, std::vector<double>(w.size(), 0.0));
  run_chunked(instances.size(), workers, [&](size_t t, size_t lo, size_t hi) {
    EdgeScoreTable scratch;
    for (size_t i = lo; i < hi; ++i)
      value[t] += instance_value_grad(instances[i], w, scratch, partial[t]);
  });
  grad.assign(w.size(), 0.0);
  double v = 0;
  for (size_t t = 0; t < chunks; ++t) {
    v += value[t];
    for (size_t i = 0; i < w.size(); ++i) grad[i] += partial[t][i];
  }
  double reg = 0;
  for (size_t i = 0; i < w.size(); ++i) {
    reg += w[i] * w[i];
    grad[i] -= 2.0 * lambda * w[i];
  }
  return v - lambda * reg;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double inf_norm(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Two-loop L-BFGS (history 10) with Armijo backtracking, maximizing the
// concave objective; the objective sequence over accepted steps never
// decreases.
template <typename ValueGrad, typename Value>
inline void lbfgs_maximize(std::vector<double>& w, ValueGrad&& value_grad, Value&& value_only,
                           const TrainConfig& cfg, TrainReport& report) {
  constexpr int kHistory = 10;
  constexpr double kArmijo = 1e-4;
  std::vector<std::vector<double>> s_hist, y_hist;
  std::vector<double> rho;

  std::vector<double> grad;
  double f = value_grad(w, grad);
  report.objective_log.push_back(f);
  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    report.grad_inf_norm = inf_norm(grad);
    if (report.grad_inf_norm < cfg.tolerance) {
      report.converged = true;
      return;
    }

    // Two-loop recursion on the negated gradient gives a descent direction
    // for -f, i.e. an ascent direction for f.
    std::vector<double> d(grad.size());
    for (size_t i = 0; i < grad.size(); ++i) d[i] = -grad[i];
    std::vector<double> alpha(s_hist.size());
    for (size_t h = s_hist.size(); h-- > 0;) {
      alpha[h] = rho[h] * dot(s_hist[h], d);
      for (size_t i = 0; i < d.size(); ++i) d[i] -= alpha[h] * y_hist[h][i];
    }
    if (!s_hist.empty()) {
      double gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
      for (double& x : d) x *= gamma;
    }
    for (size_t h = 0; h < s_hist.size(); ++h) {
      double beta = rho[h] * dot(y_hist[h], d);
      for (size_t i = 0; i < d.size(); ++i) d[i] += (alpha[h] - beta) * s_hist[h][i];
    }
    for (double& x : d) x = -x;

    double slope = dot(grad, d);
    if (!(slope > 0)) {  // not an ascent direction; fall back to the gradient
      d = grad;
      slope = dot(grad, grad);
      s_hist.clear();
      y_hist.clear();
      rho.clear();
    }

    double step = s_hist.empty() ? 1.0 / std::max(1.0, std::sqrt(slope)) : 1.0;
    std::vector<double> w_new(w.size());
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (size_t i = 0; i < w.size(); ++i) w_new[i] = w[i] + step * d[i];
      f_new = value_only(w_new);
      if (std::isfinite(f_new) && f_new >= f + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) return;  // no further progress at machine precision

    std::vector<double> grad_new;
    double f_check = value_grad(w_new, grad_new);
    f_new = f_check;

    std::vector<double> s_vec(w.size()), y_vec(w.size());
    for (size_t i = 0; i < w.size(); ++i) {
      s_vec[i] = w_new[i] - w[i];
      y_vec[i] = grad[i] - grad_new[i];  // gradient of -f increases along s
    }
    double sy = dot(s_vec, y_vec);
    if (sy > 1e-12 * std::sqrt(dot(s_vec, s_vec)) * std::sqrt(dot(y_vec, y_vec))) {
      s_hist.push_back(std::move(s_vec));
      y_hist.push_back(std::move(y_vec));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > kHistory) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
        rho.erase(rho.begin());
      }
    }

    w = std::move(w_new);
    grad = std::move(grad_new);
    f = f_new;
    report.iterations = iter + 1;
    report.objective_log.push_back(f);
  }
  report.grad_inf_norm = inf_norm(grad);
  report.converged = report.grad_inf_norm < cfg.tolerance;
}

}  // namespace train_detail

// Skipped-instance diagnostics are appended to `skipped`; both ops score
// sentences against the model's frozen feature index.
inline double log_likelihood(const Model& model, const Corpus& corpus, int workers = 1,
                             std::vector<std::string>* skipped = nullptr) {
  using namespace train_detail;
  GraphCache cache(model.family, model.schema);
  FeatureIndex index = model.index;
  auto instances = prepare_instances(corpus, cache, model.templates, index, skipped);
  return corpus_value(instances, model.w, model.meta.lambda, workers);
}

inline std::vector<double> gradient(const Model& model, const Corpus& corpus, int workers = 1,
                                    std::vector<std::string>* skipped = nullptr) {
  using namespace train_detail;
  GraphCache cache(model.family, model.schema);
  FeatureIndex index = model.index;
  auto instances = prepare_instances(corpus, cache, model.templates, index, skipped);
  std::vector<double> grad;
  corpus_value_grad(instances, model.w, model.meta.lambda, workers, grad);
  return grad;
}

inline Model train(const Corpus& corpus, ModelFamily family, Schema schema,
                   std::vector<FeatureTemplate> templates, const TrainConfig& cfg,
                   TrainReport* report_out = nullptr) {
  using namespace train_detail;
  if (cfg.lambda < 0) throw ValidationError("lambda must be >= 0");
  schema.variant = family == ModelFamily::SPLIT ? SchemaVariant::SPLIT : SchemaVariant::SHARED;
  validate_schema(schema);

  Model model;
  model.family = family;
  model.schema = schema;
  model.templates = std::move(templates);
  model.index = build_index(corpus, model.templates, family, schema);
  model.index.freeze();
  model.meta.lambda = cfg.lambda;

  TrainReport report;
  GraphCache cache(family, schema);
  auto instances = prepare_instances(corpus, cache, model.templates, model.index, &report.skipped);
  if (instances.empty())
    throw NoEncodableInstances("no sentence in the corpus is encodable under the " +
                               std::string(family_name(family)) + " model");

  model.w.assign(static_cast<size_t>(model.index.size()), 0.0);
  auto value_grad = [&](const std::vector<double>& w, std::vector<double>& grad) {
    return corpus_value_grad(instances, w, cfg.lambda, cfg.workers, grad);
  };
  auto value_only = [&](const std::vector<double>& w) {
    return corpus_value(instances, w, cfg.lambda, cfg.workers);
  };
  lbfgs_maximize(model.w, value_grad, value_only, cfg, report);

  model.meta.iterations = report.iterations;
  model.meta.final_objective = report.objective_log.empty() ? 0 : report.objective_log.back();
  if (report_out) *report_out = std::move(report);
  return model;
}

struct Prediction {
  std::vector<Mention> mentions;
  std::vector<std::string> diagnostics;
};

// Applies one trained model to sentences; graphs are cached per length. The
// model must outlive the predictor.
class Predictor {
 public:
  explicit Predictor(const Model& model)
      : model_(&model), cache_(model.family, model.schema), index_(model.index) {}

  Prediction predict(const AnnotatedSentence& s, Heuristic heuristic) {
    Prediction out;
    if (s.size() < 1) return out;
    const GraphBundle& b = cache_.get(s.size());
    auto feats = featurize_edges(s, b, model_->templates, index_);
    EdgeScoreTable scores(feats.size(), 0.0);
    for (size_t e = 0; e < feats.size(); ++e)
      for (int id : feats[e]) scores[e] += model_->w[static_cast<size_t>(id)];
    MapResult r = map_decode(b.graph, scores);
    if (model_->family == ModelFamily::LINEAR) {
      TagIndexer ix(model_->schema.labels);
      TagSequence tags = tags_from_trellis_edges(b.graph, ix, r.edges);
      LinearDecode dec = decode_linear(tags, heuristic, model_->schema.max_components);
      out.mentions = std::move(dec.mentions);
      out.diagnostics = std::move(dec.diagnostics);
    } else {
      EncodedSubgraph sub = subgraph_from_edges(b.graph, cache_.schema(), r.edges);
      SubgraphDecode dec = decode_subgraph(sub, heuristic);
      out.mentions = std::move(dec.mentions);
      out.diagnostics = std::move(dec.diagnostics);
    }
    return out;
  }

 private:
  const Model* model_;
  GraphCache cache_;
  FeatureIndex index_;
};

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json model_to_json(const Model& m) {
  nlohmann::json j;
  j["format"] = "dicent-model";
  j["format_version"] = kModelFormatVersion;
  j["family"] = family_name(m.family);
  j["k"] = m.schema.max_components;
  j["labels"] = m.schema.labels;
  j["templates"] = nlohmann::json::array();
  for (const FeatureTemplate& t : m.templates)
    j["templates"].push_back({{"name", t.name},
                              {"kind", t.kind},
                              {"column", t.column},
                              {"offset", t.offset},
                              {"size", t.size}});
  j["features"] = m.index.strings();
  j["weights"] = m.w;
  j["meta"] = {{"lambda", m.meta.lambda},
               {"iterations", m.meta.iterations},
               {"final_objective", m.meta.final_objective}};
  return j;
}

inline Model model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != "dicent-model")
    throw VersionMismatch("not a dicent model file");
  if (j.value("format_version", -1) != kModelFormatVersion)
    throw VersionMismatch("model format version " + j.value("format_version", nlohmann::json()).dump() +
                          " is not supported (expected " + std::to_string(kModelFormatVersion) + ")");
  Model m;
  m.family = family_from_name(j.at("family").get<std::string>());
  m.schema.max_components = j.at("k").get<int>();
  m.schema.labels = j.at("labels").get<std::vector<std::string>>();
  m.schema.variant =
      m.family == ModelFamily::SPLIT ? SchemaVariant::SPLIT : SchemaVariant::SHARED;
  for (const auto& jt : j.at("templates"))
    m.templates.push_back({jt.at("name").get<std::string>(), jt.at("kind").get<std::string>(),
                           jt.at("column").get<std::string>(), jt.at("offset").get<int>(),
                           jt.at("size").get<int>()});
  m.index = FeatureIndex::from_strings(j.at("features").get<std::vector<std::string>>(), true);
  m.w = j.at("weights").get<std::vector<double>>();
  if (static_cast<int>(m.w.size()) != m.index.size())
    throw ValidationError("model has " + std::to_string(m.w.size()) + " weights for " +
                          std::to_string(m.index.size()) + " features");
  for (double x : m.w)
    if (!std::isfinite(x)) throw ValidationError("model weights must be finite");
  m.meta.lambda = j.at("meta").at("lambda").get<double>();
  m.meta.iterations = j.at("meta").at("iterations").get<int>();
  m.meta.final_objective = j.at("meta").at("final_objective").get<double>();
  validate_schema(m.schema);
  return m;
}

inline void save_model(const std::string& path, const Model& m) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Data, "cannot open model file for writing: " + path);
  out << model_to_json(m).dump() << "\n";
}

inline Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Data, "cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Data, std::string("model file is not valid JSON: ") + e.what());
  }
  return model_from_json(j);
}

}  // namespace dicent
