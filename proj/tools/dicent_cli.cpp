#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dicent/corpus_io.hpp"
#include "dicent/counting.hpp"
#include "dicent/eval.hpp"
#include "dicent/experiment.hpp"
#include "dicent/synth.hpp"
#include "dicent/tag_codec.hpp"
#include "dicent/train.hpp"

namespace {

using namespace dicent;

Schema make_schema(ModelFamily family, int k, std::vector<std::string> labels) {
  Schema sc;
  sc.variant = family == ModelFamily::SPLIT ? SchemaVariant::SPLIT : SchemaVariant::SHARED;
  sc.max_components = k;
  sc.labels = std::move(labels);
  return sc;
}

// Columns every sentence provides; templates must never hit a missing column.
template <typename MapT>
std::vector<std::string> common_keys(const Corpus& corpus, MapT AnnotatedSentence::*field) {
  std::set<std::string> keys;
  bool first = true;
  for (const AnnotatedSentence& s : corpus.sentences) {
    std::set<std::string> here;
    for (const auto& [k, v] : s.*field) here.insert(k);
    if (first) {
      keys = std::move(here);
      first = false;
    } else {
      std::set<std::string> tmp;
      std::set_intersection(keys.begin(), keys.end(), here.begin(), here.end(),
                            std::inserter(tmp, tmp.begin()));
      keys = std::move(tmp);
    }
  }
  return {keys.begin(), keys.end()};
}

std::vector<FeatureTemplate> detect_templates(const Corpus& corpus) {
  std::vector<std::string> token_cols = common_keys(corpus, &AnnotatedSentence::attrs);
  std::vector<std::string> sentence_cols = common_keys(corpus, &AnnotatedSentence::sattrs);
  std::string cluster;
  auto it = std::find(token_cols.begin(), token_cols.end(), "cluster");
  if (it != token_cols.end()) {
    cluster = *it;
    token_cols.erase(it);  // the prefix family covers the full id already
  }
  return default_templates(token_cols, sentence_cols, cluster);
}

double dev_f1(const Model& model, const Corpus& dev) {
  Predictor predictor(model);
  std::vector<std::vector<Mention>> pred;
  pred.reserve(dev.sentences.size());
  for (const AnnotatedSentence& s : dev.sentences)
    pred.push_back(predictor.predict(s, Heuristic::ENOUGH).mentions);
  return evaluate(dev, pred).f1;
}

std::string fmt(double x, int digits = 6) {
  std::ostringstream os;
  os << std::setprecision(digits) << x;
  return os.str();
}

std::ostream& open_output(std::ofstream& file, const std::string& path) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw Error(ErrorKind::Data, "cannot open output file: " + path);
  return file;
}

int cmd_train(const std::string& family_name_arg, int k, double lambda, bool lambda_set,
              const std::string& train_path, const std::string& dev_path,
              const std::string& out_path, int max_iters, double tol, int workers) {
  ModelFamily family = family_from_name(family_name_arg);
  Corpus train_corpus = read_corpus_file(train_path, k);
  std::vector<std::string> labels = train_corpus.label_set();
  if (labels.empty())
    throw ValidationError("training corpus has no mentions; cannot infer a label set");
  Schema schema = make_schema(family, k, labels);
  std::vector<FeatureTemplate> templates = detect_templates(train_corpus);

  TrainConfig cfg;
  cfg.tolerance = tol;
  cfg.max_iterations = max_iters;
  cfg.workers = workers;

  Model model;
  TrainReport report;
  if (lambda_set) {
    cfg.lambda = lambda;
    model = train(train_corpus, family, schema, templates, cfg, &report);
  } else {
    if (dev_path.empty())
      throw Error(ErrorKind::Usage,
                  "no --lambda given: provide --dev so the value can be selected on it");
    Corpus dev = read_corpus_file(dev_path, k);
    const double grid[] = {0.125, 0.25, 0.5, 1.0, 2.0};
    double best_f1 = -1;
    for (double cand : grid) {
      cfg.lambda = cand;
      TrainReport r;
      Model m = train(train_corpus, family, schema, templates, cfg, &r);
      double f1 = dev_f1(m, dev);
      std::cout << "lambda\t" << fmt(cand) << "\tdev_f1\t" << fmt(f1) << "\n";
      if (f1 > best_f1) {  // ties keep the earlier, smaller lambda
        best_f1 = f1;
        model = std::move(m);
        report = std::move(r);
      }
    }
    std::cout << "selected_lambda\t" << fmt(model.meta.lambda) << "\n";
  }

  for (const std::string& why : report.skipped) std::cerr << "skipped " << why << "\n";
  save_model(out_path, model);
  std::cout << "family\t" << family_name(model.family) << "\n"
            << "features\t" << model.index.size() << "\n"
            << "skipped\t" << report.skipped.size() << "\n"
            << "iterations\t" << report.iterations << "\n"
            << "objective\t" << fmt(model.meta.final_objective, 10) << "\n"
            << "converged\t" << (report.converged ? "yes" : "no") << "\n"
            << "model\t" << out_path << "\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& input,
                const std::string& heuristic_name, const std::string& output) {
  Model model = load_model(model_path);
  Heuristic h = heuristic_name == "all" ? Heuristic::ALL : Heuristic::ENOUGH;
  Corpus corpus = read_corpus_file(input, model.schema.max_components);
  Predictor predictor(model);
  for (size_t i = 0; i < corpus.sentences.size(); ++i) {
    Prediction p = predictor.predict(corpus.sentences[i], h);
    corpus.sentences[i].mentions = std::move(p.mentions);
    for (const std::string& d : p.diagnostics) std::cerr << "sentence " << i << ": " << d << "\n";
  }
  std::ofstream file;
  write_corpus(open_output(file, output), corpus);
  return 0;
}

int cmd_eval(const std::string& gold_path, const std::string& pred_path, int k) {
  Corpus gold = read_corpus_file(gold_path, k);
  Corpus pred = read_corpus_file(pred_path, k);
  PRF prf = evaluate(gold, pred);
  std::cout << "precision\t" << fmt(prf.precision) << "\n"
            << "recall\t" << fmt(prf.recall) << "\n"
            << "f1\t" << fmt(prf.f1) << "\n"
            << "tp\t" << prf.tp << "\tfp\t" << prf.fp << "\tfn\t" << prf.fn << "\n";
  return 0;
}

int cmd_encode(const std::string& family_name_arg, int k, const std::string& input) {
  ModelFamily family = family_from_name(family_name_arg);
  Corpus corpus = read_corpus_file(input, k);
  Schema schema = make_schema(family, k, corpus.label_set());
  for (size_t i = 0; i < corpus.sentences.size(); ++i) {
    const AnnotatedSentence& s = corpus.sentences[i];
    try {
      if (family == ModelFamily::LINEAR) {
        std::cout << format_tagged(s.tokens, encode_linear(s, k), true) << "\n";
      } else {
        std::cout << "# sentence " << i << "\n"
                  << subgraph_to_text(encode_mentions(schema, s)) << "\n";
      }
    } catch (const Error& e) {
      std::cerr << "# sentence " << i << " skipped: " << e.what() << "\n";
      if (family == ModelFamily::LINEAR) std::cout << "\n";
    }
  }
  return 0;
}

int cmd_count(const std::string& schema_name, int k, int n_max) {
  std::cout << "# schema=" << schema_name << " k=" << k << "\n";
  for (int n = 1; n <= n_max; ++n) {
    std::cout << n << "\t";
    if (schema_name == "shared" || schema_name == "split") {
      SchemaVariant v = schema_name == "split" ? SchemaVariant::SPLIT : SchemaVariant::SHARED;
      std::cout << count_encodings_dp(Schema{v, k, {"D"}}, n).str();
    } else if (schema_name == "linear") {
      if (n <= 6) {
        std::cout << count_linear_canonical(n).str();
      } else {
        std::cout << "<7^" << n;  // enumeration is infeasible past n=6
      }
    } else {  // combinations
      BigCount exponent = count_combinations_exponent(n, k);
      if (exponent <= 128) {
        std::cout << count_combinations(n, k).str();
      } else {
        std::cout << "2^" << exponent.str();  // exact, just not in decimal
      }
    }
    std::cout << "\n";
  }
  return 0;
}

int cmd_spectrum(const std::string& schema_name, int k) {
  nlohmann::json j;
  j["schema"] = schema_name;
  double rate;
  if (schema_name == "grid") {
    rate = dominant_growth(grid_transition_matrix());
  } else {
    j["k"] = k;
    SchemaVariant v = schema_name == "split" ? SchemaVariant::SPLIT : SchemaVariant::SHARED;
    rate = dominant_growth(Schema{v, k, {"D"}});
  }
  j["growth_rate"] = rate;
  j["log2_growth_rate"] = std::log2(rate);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_synth(const std::string& config_path, std::uint64_t seed, bool seed_set,
              const std::string& out_path) {
  SynthConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw Error(ErrorKind::Data, "cannot open config file: " + config_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::Data, std::string("config is not valid JSON: ") + e.what());
    }
    cfg = synth_config_from_json(j);
  }
  if (seed_set) cfg.seed = seed;
  Corpus corpus = generate_synthetic(cfg);
  std::ofstream file;
  write_corpus(open_output(file, out_path), corpus);
  return 0;
}

int cmd_bench(const std::vector<int>& types, int sentences, int repeats) {
  std::cout << "# seconds per objective+gradient pass; relative is vs the first type count\n"
            << "family\ttypes\tedges\tseconds\trelative\n";
  for (const BenchRow& r : bench_types(types, sentences, repeats))
    std::cout << family_name(r.family) << "\t" << r.types << "\t" << r.edges << "\t"
              << fmt(r.seconds_per_pass, 4) << "\t" << fmt(r.relative, 4) << "\n";
  return 0;
}

int cmd_ambig(const std::string& input, int k) {
  Corpus corpus = read_corpus_file(input, k);
  std::vector<std::string> labels = corpus.label_set();
  if (labels.empty()) throw ValidationError("corpus has no mentions to round-trip");
  auto rows = ambiguity_experiment(corpus, make_schema(ModelFamily::SHARED, k, labels));
  std::cout << "family\theuristic\tprecision_error\trecall_error\tpredicted\tgold\tskipped\n";
  for (const AmbiguityRow& r : rows)
    std::cout << family_name(r.family) << "\t"
              << (r.heuristic == Heuristic::ALL ? "all" : "enough") << "\t"
              << fmt(r.precision_error) << "\t" << fmt(r.recall_error) << "\t" << r.predicted
              << "\t" << r.gold << "\t" << r.skipped << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"structured prediction for discontiguous, overlapping named entities"};
  app.require_subcommand(1);
  int exit_code = 0;

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model and write it to a file");
  std::string tr_family, tr_train, tr_dev, tr_out;
  int tr_k = 3, tr_iters = 500, tr_workers = 1;
  double tr_lambda = 0.125, tr_tol = 1e-6;
  auto* tr_lambda_opt = train_cmd->add_option("--lambda", tr_lambda, "L2 coefficient; omit to select on --dev");
  train_cmd->add_option("--model", tr_family, "model family")
      ->required()
      ->check(CLI::IsMember({"linear", "shared", "split"}));
  train_cmd->add_option("--k", tr_k, "maximum components per mention")->check(CLI::PositiveNumber);
  train_cmd->add_option("--train", tr_train, "training corpus (JSONL)")->required();
  train_cmd->add_option("--dev", tr_dev, "development corpus for lambda selection");
  train_cmd->add_option("--out", tr_out, "output model file")->required();
  train_cmd->add_option("--max-iters", tr_iters, "optimizer iteration cap")->check(CLI::PositiveNumber);
  train_cmd->add_option("--tol", tr_tol, "gradient infinity-norm tolerance");
  train_cmd->add_option("--workers", tr_workers, "parallel workers")->check(CLI::PositiveNumber);
  train_cmd->callback([&] {
    exit_code = cmd_train(tr_family, tr_k, tr_lambda, tr_lambda_opt->count() > 0, tr_train,
                          tr_dev, tr_out, tr_iters, tr_tol, tr_workers);
  });

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "decode a corpus with a trained model");
  std::string pr_model, pr_input, pr_heuristic = "enough", pr_output;
  predict_cmd->add_option("--model-file", pr_model, "trained model file")->required();
  predict_cmd->add_option("--input", pr_input, "input corpus (JSONL)")->required();
  predict_cmd->add_option("--heuristic", pr_heuristic, "mention interpretation rule")
      ->check(CLI::IsMember({"enough", "all"}));
  predict_cmd->add_option("--output", pr_output, "output corpus file (default stdout)");
  predict_cmd->callback([&] { exit_code = cmd_predict(pr_model, pr_input, pr_heuristic, pr_output); });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "exact-match mention P/R/F1");
  std::string ev_gold, ev_pred;
  int ev_k = 3;
  eval_cmd->add_option("--gold", ev_gold, "gold corpus")->required();
  eval_cmd->add_option("--pred", ev_pred, "predicted corpus")->required();
  eval_cmd->add_option("--k", ev_k, "maximum components per mention")->check(CLI::PositiveNumber);
  eval_cmd->callback([&] { exit_code = cmd_eval(ev_gold, ev_pred, ev_k); });

  // encode
  auto* encode_cmd = app.add_subcommand("encode", "emit gold structures (tag lines or hyperedges)");
  std::string en_family, en_input;
  int en_k = 3;
  encode_cmd->add_option("--model", en_family, "model family")
      ->required()
      ->check(CLI::IsMember({"linear", "shared", "split"}));
  encode_cmd->add_option("--k", en_k, "maximum components per mention")->check(CLI::PositiveNumber);
  encode_cmd->add_option("--input", en_input, "input corpus (JSONL)")->required();
  encode_cmd->callback([&] { exit_code = cmd_encode(en_family, en_k, en_input); });

  // count
  auto* count_cmd = app.add_subcommand("count", "canonical-encoding and combination counts (TSV)");
  std::string co_schema;
  int co_k = 3, co_nmax = 5;
  count_cmd->add_option("--schema", co_schema, "what to count")
      ->required()
      ->check(CLI::IsMember({"shared", "split", "linear", "combinations"}));
  count_cmd->add_option("--k", co_k, "maximum components per mention")->check(CLI::PositiveNumber);
  count_cmd->add_option("--n-max", co_nmax, "count for n = 1..n-max")->check(CLI::PositiveNumber);
  count_cmd->callback([&] { exit_code = cmd_count(co_schema, co_k, co_nmax); });

  // spectrum
  auto* spectrum_cmd = app.add_subcommand("spectrum", "dominant growth rate of the count recurrence (JSON)");
  std::string sp_schema;
  int sp_k = 3;
  spectrum_cmd->add_option("--schema", sp_schema, "shared, split, or the 4-state grid example")
      ->required()
      ->check(CLI::IsMember({"shared", "split", "grid"}));
  spectrum_cmd->add_option("--k", sp_k, "maximum components per mention")->check(CLI::PositiveNumber);
  spectrum_cmd->callback([&] { exit_code = cmd_spectrum(sp_schema, sp_k); });

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
  std::string sy_config, sy_out;
  std::uint64_t sy_seed = 0;
  auto* sy_seed_opt = synth_cmd->add_option("--seed", sy_seed, "override the config's RNG seed");
  synth_cmd->add_option("--config", sy_config, "JSON generator config (defaults when omitted)");
  synth_cmd->add_option("--out", sy_out, "output corpus file (default stdout)");
  synth_cmd->callback(
      [&] { exit_code = cmd_synth(sy_config, sy_seed, sy_seed_opt->count() > 0, sy_out); });

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "objective-pass timing as the type count grows");
  std::vector<int> be_types = {1, 2, 4, 8, 16};
  int be_sentences = 40, be_repeats = 3;
  bench_cmd->add_option("--types", be_types, "label-set sizes")->delimiter(',');
  bench_cmd->add_option("--sentences", be_sentences, "corpus size per measurement")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--repeats", be_repeats, "passes per measurement (best kept)")
      ->check(CLI::PositiveNumber);
  bench_cmd->callback([&] { exit_code = cmd_bench(be_types, be_sentences, be_repeats); });

  // ambig
  auto* ambig_cmd = app.add_subcommand("ambig", "gold-structure round-trip errors per model (TSV)");
  std::string am_input;
  int am_k = 3;
  ambig_cmd->add_option("--input", am_input, "input corpus (JSONL)")->required();
  ambig_cmd->add_option("--k", am_k, "maximum components per mention")->check(CLI::PositiveNumber);
  ambig_cmd->callback([&] { exit_code = cmd_ambig(am_input, am_k); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const dicent::Error& e) {
    std::cerr << "dicent: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "dicent: " << e.what() << "\n";
    return 2;
  }
  return exit_code;
}
