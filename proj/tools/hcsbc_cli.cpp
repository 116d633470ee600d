// hcsbc: train, evaluate, compare and serve severity/diagnosis classifiers
// for breast pathology specimen reports.

#include <csignal>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hcsbc/bundle.hpp"
#include "hcsbc/corpus.hpp"
#include "hcsbc/errors.hpp"
#include "hcsbc/evalkit.hpp"
#include "hcsbc/hierarchy.hpp"
#include "hcsbc/service.hpp"
#include "hcsbc/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hcsbc;

namespace {

Ontology ontology_from(const std::string& path) {
  return path.empty() ? Ontology::default_ontology() : Ontology::load_file(path);
}

std::vector<double> parse_fractions(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  if (out.size() != 3) throw InputError("--fractions needs three comma-separated values");
  return out;
}

void override_endpoint(PipelineModel& m, const std::string& url) {
  if (url.empty()) return;
  for (auto* c : m.components()) {
    if (c->backend.kind() == BackendKind::Embed) c->backend.set_embed_endpoint(url);
  }
}

struct TrainArgs {
  std::string corpus, ontology, config, out, created, report;
  bool flat = false, hierarchical = false;
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold;
  std::string backend = "tfidf", embed_endpoint, learner;
  std::size_t embed_dim = 0, trees = 0;
};

int cmd_train(const TrainArgs& a) {
  const Ontology ont = ontology_from(a.ontology);
  HierarchyConfig cfg;
  if (!a.config.empty()) cfg = HierarchyConfig::from_json(json::parse(read_file(a.config)));
  if (a.seed) cfg.seed = *a.seed;
  if (a.threshold) cfg.threshold = *a.threshold;
  cfg.stage1_backend.kind = parse_backend_kind(a.backend);
  if (!a.embed_endpoint.empty()) cfg.stage1_backend.embed.endpoint = a.embed_endpoint;
  if (a.embed_dim) cfg.stage1_backend.embed.dim = a.embed_dim;
  if (!a.learner.empty()) {
    cfg.stage1_learner.kind = cfg.branch_learner.kind = a.learner;
  }
  if (a.trees) cfg.stage1_learner.forest.n_trees = cfg.branch_learner.forest.n_trees = a.trees;

  const auto corpus = read_corpus(a.corpus, ont);
  std::unique_ptr<PipelineModel> model;
  if (a.flat) {
    model = std::make_unique<FlatModel>(train_flat(corpus, ont, cfg));
  } else {
    model = std::make_unique<HierarchicalModel>(train_hierarchical(corpus, ont, cfg));
  }
  BundleOptions opts;
  if (!a.created.empty()) opts.created = a.created;
  save_bundle(*model, a.out, opts);
  json report = model->training_report().to_json();
  report["kind"] = model->kind();
  report["bundle"] = a.out;
  report["n_parts"] = corpus.size();
  if (!a.report.empty()) write_file(a.report, report.dump(2) + "\n");
  std::cout << report.dump(2) << "\n";
  return 0;
}

struct ModelArgs {
  std::string bundle, embed_endpoint;
  std::optional<double> threshold;
};

LoadedBundle open_model(const ModelArgs& a) {
  auto b = load_bundle(a.bundle);
  if (a.threshold) b.model->set_threshold(*a.threshold);
  override_endpoint(*b.model, a.embed_endpoint);
  return b;
}

int cmd_predict(const ModelArgs& m, const std::string& text, const std::string& input,
                const std::string& output) {
  const auto b = open_model(m);
  std::ostringstream out;
  if (!text.empty()) {
    out << predict_text(*b.model, text, b.bundle_id).dump(2) << "\n";
  } else {
    const std::string body = read_file(input);
    for (const auto& row : parse_rows(body, detect_format(body))) {
      json rec;
      if (!row.part) {
        rec = {{"error", row.error}};
      } else {
        try {
          rec = predict_text(*b.model, row.part->text, b.bundle_id, row.part->report_id);
        } catch (const Error& e) {
          rec = {{"error", e.what()}, {"report_id", row.part->report_id}};
        }
      }
      rec["line"] = row.line;
      out << rec.dump() << "\n";
    }
  }
  if (output.empty()) {
    std::cout << out.str();
  } else {
    write_file(output, out.str());
  }
  return 0;
}

int cmd_eval(const ModelArgs& m, const std::string& corpus_path, const std::string& out,
             bool include_zero) {
  const auto b = open_model(m);
  const auto corpus = read_corpus(corpus_path, b.model->ontology());
  if (corpus.empty()) throw InputError("eval: test corpus is empty");
  MetricsOptions opts;
  opts.macro_include_zero_support = include_zero;
  const auto ev = evaluate(*b.model, corpus, opts);
  json j = ev.report.to_json();
  j["model"] = {{"kind", b.model->kind()}, {"bundle", m.bundle}, {"bundle_version", b.bundle_id}};
  j["errors"] = categorize_errors(corpus, ev.predictions, b.model->ontology()).to_json();
  if (!out.empty()) write_file(out, j.dump(2) + "\n");
  std::cout << "accuracy (subset) " << ev.report.subset_accuracy << "\n"
            << "micro P/R/F1 " << ev.report.micro_precision << " " << ev.report.micro_recall << " "
            << ev.report.micro_f1 << "\n"
            << "macro P/R/F1 " << ev.report.macro_precision << " " << ev.report.macro_recall << " "
            << ev.report.macro_f1 << " over " << ev.report.macro_labels << " labels\n";
  return 0;
}

int cmd_compare(const ModelArgs& a, const ModelArgs& b, const std::string& corpus_path,
                bool per_label, const std::string& out) {
  const auto ba = open_model(a);
  const auto bb = open_model(b);
  if (ba.model->ontology().checksum() != bb.model->ontology().checksum()) {
    throw InputError("compare: bundles use different ontologies");
  }
  const auto corpus = read_corpus(corpus_path, ba.model->ontology());
  if (corpus.empty()) throw InputError("compare: test corpus is empty");
  const auto ea = evaluate(*ba.model, corpus);
  const auto eb = evaluate(*bb.model, corpus);
  const auto mc = mcnemar(ea.pred, eb.pred, ea.gold);
  json j = {{"a", {{"bundle", a.bundle}, {"kind", ba.model->kind()},
                   {"micro_f1", ea.report.micro_f1}, {"macro_f1", ea.report.macro_f1},
                   {"accuracy", ea.report.subset_accuracy}}},
            {"b", {{"bundle", b.bundle}, {"kind", bb.model->kind()},
                   {"micro_f1", eb.report.micro_f1}, {"macro_f1", eb.report.macro_f1},
                   {"accuracy", eb.report.subset_accuracy}}},
            {"mcnemar", mc.to_json()},
            {"mcnemar_scope", "pooled (row, label) decisions"}};
  if (per_label) {
    json arr = json::array();
    const auto res = mcnemar_per_label(ea.pred, eb.pred, ea.gold);
    for (std::size_t l = 0; l < res.size(); ++l) {
      auto r = res[l].to_json();
      r["label"] = ea.gold.label_names()[l];
      arr.push_back(r);
    }
    j["mcnemar_per_label"] = arr;
  }
  if (!out.empty()) write_file(out, j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return 0;
}

struct SynthArgs {
  std::string out, ontology, ontology_out, config, profile = "clinical", format = "csv";
  std::size_t n = 1000, labels = 0;
  std::uint64_t seed = 1;
  std::optional<double> neg_rate, co_occurrence, noise;
};

int cmd_synth(const SynthArgs& a) {
  Ontology ont = ontology_from(a.ontology);
  if (a.labels > ont.diagnoses().size()) ont = ont.with_synthetic_fillers(a.labels);
  SynthConfig cfg;
  if (!a.config.empty()) cfg = SynthConfig::from_json(json::parse(read_file(a.config)));
  cfg.seed = a.seed;
  cfg.n_parts = a.n;
  if (a.neg_rate) cfg.neg_rate = *a.neg_rate;
  if (a.co_occurrence) cfg.co_occurrence_rate = *a.co_occurrence;
  if (a.noise) cfg.noise_rate = *a.noise;
  if (cfg.priors.empty()) {
    if (a.profile == "clinical") {
      cfg.priors = priors_from_profile(ont, clinical_severity_profile());
    } else if (a.profile == "uniform") {
      for (const auto& d : ont.diagnoses()) cfg.priors[d.name] = 1.0;
    } else {
      throw InputError("unknown --profile '" + a.profile + "'");
    }
  }
  const auto corpus = generate_synth(cfg, ont);
  for (const auto& w : corpus.warnings) std::cerr << "warning: " << w << "\n";
  write_corpus(a.out, corpus.parts, a.format == "jsonl" ? CorpusFormat::Jsonl : CorpusFormat::Csv);
  if (!a.ontology_out.empty()) write_file(a.ontology_out, ont.serialize());
  std::cout << "wrote " << corpus.parts.size() << " parts over " << cfg.priors.size()
            << " labels to " << a.out << "\n";
  return 0;
}

int cmd_split(const std::string& corpus_path, const std::string& ontology,
              const std::string& out_dir, std::uint64_t seed, const std::string& fractions) {
  const Ontology ont = ontology_from(ontology);
  const auto corpus = read_corpus(corpus_path, ont);
  const auto f = parse_fractions(fractions);
  SplitConfig cfg{f[0], f[1], f[2], seed};
  const auto s = split(corpus, cfg);
  fs::create_directories(out_dir);
  write_corpus(fs::path(out_dir) / "train.csv", s.train);
  write_corpus(fs::path(out_dir) / "val.csv", s.val);
  write_corpus(fs::path(out_dir) / "test.csv", s.test);
  std::cout << "train " << s.train.size() << " val " << s.val.size() << " test " << s.test.size()
            << "\n";
  return 0;
}

Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hcsbc: hierarchical severity and diagnosis classification of pathology reports"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "train a hierarchical or flat model bundle");
  train->add_option("--corpus", ta.corpus, "labeled corpus (csv or jsonl)")->required();
  train->add_option("--ontology", ta.ontology, "ontology document")->required();
  train->add_option("--config", ta.config, "training config (json)");
  train->add_option("--out", ta.out, "bundle directory")->required();
  auto* flat = train->add_flag("--flat", ta.flat, "single-stage model over all labels");
  train->add_flag("--hierarchical", ta.hierarchical, "two-stage model (default)")->excludes(flat);
  train->add_option("--seed", ta.seed);
  train->add_option("--threshold", ta.threshold)->check(CLI::Range(0.0, 1.0));
  train->add_option("--backend", ta.backend, "stage-1 features")->check(CLI::IsMember({"tfidf", "embed"}));
  train->add_option("--embed-endpoint", ta.embed_endpoint);
  train->add_option("--embed-dim", ta.embed_dim);
  train->add_option("--learner", ta.learner)->check(CLI::IsMember({"forest", "logreg"}));
  train->add_option("--trees", ta.trees, "trees per label");
  train->add_option("--created", ta.created, "fixed manifest timestamp");
  train->add_option("--report", ta.report, "write the training report here");

  auto add_model = [](CLI::App* c, ModelArgs& m, const std::string& flag) {
    c->add_option(flag, m.bundle, "bundle directory")->required();
    c->add_option("--threshold", m.threshold)->check(CLI::Range(0.0, 1.0));
    c->add_option("--embed-endpoint", m.embed_endpoint);
  };

  ModelArgs pm;
  std::string p_text, p_input, p_output;
  auto* predict = app.add_subcommand("predict", "predict one text or a batch file");
  add_model(predict, pm, "--bundle");
  auto* opt_text = predict->add_option("--text", p_text);
  predict->add_option("--input", p_input, "csv or jsonl with a text column")->excludes(opt_text);
  predict->add_option("--output", p_output);

  ModelArgs em;
  std::string e_corpus, e_out;
  bool e_zero = false;
  auto* eval = app.add_subcommand("eval", "evaluate a bundle on a labeled corpus");
  add_model(eval, em, "--bundle");
  eval->add_option("--corpus", e_corpus)->required();
  eval->add_option("--out", e_out, "write the full report (json)");
  eval->add_flag("--macro-include-zero", e_zero, "count zero-support labels in macro averages");

  ModelArgs ca, cb;
  std::string c_corpus, c_out;
  bool c_per_label = false;
  auto* compare = app.add_subcommand("compare", "McNemar comparison of two bundles");
  compare->add_option("--bundle-a", ca.bundle)->required();
  compare->add_option("--bundle-b", cb.bundle)->required();
  compare->add_option("--corpus", c_corpus)->required();
  compare->add_flag("--per-label", c_per_label);
  compare->add_option("--out", c_out);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled corpus");
  synth->add_option("--out", sa.out)->required();
  synth->add_option("--n", sa.n, "number of parts");
  synth->add_option("--seed", sa.seed);
  synth->add_option("--ontology", sa.ontology);
  synth->add_option("--labels", sa.labels, "pad the ontology to this many diagnoses");
  synth->add_option("--ontology-out", sa.ontology_out, "write the (padded) ontology here");
  synth->add_option("--config", sa.config, "synth config (json)");
  synth->add_option("--profile", sa.profile)->check(CLI::IsMember({"clinical", "uniform"}));
  synth->add_option("--neg-rate", sa.neg_rate);
  synth->add_option("--co-occurrence", sa.co_occurrence);
  synth->add_option("--noise", sa.noise);
  synth->add_option("--format", sa.format)->check(CLI::IsMember({"csv", "jsonl"}));

  std::string s_corpus, s_ontology, s_out_dir, s_fractions = "0.6,0.2,0.2";
  std::uint64_t s_seed = 42;
  auto* splitc = app.add_subcommand("split", "seeded train/val/test split of a corpus");
  splitc->add_option("--corpus", s_corpus)->required();
  splitc->add_option("--ontology", s_ontology);
  splitc->add_option("--out-dir", s_out_dir)->required();
  splitc->add_option("--seed", s_seed);
  splitc->add_option("--fractions", s_fractions);

  ServiceConfig sc;
  std::string sv_bundle;
  auto* serve = app.add_subcommand("serve", "HTTP prediction service");
  serve->add_option("--bundle", sv_bundle)->required();
  serve->add_option("--host", sc.host);
  serve->add_option("--port", sc.port);
  serve->add_option("--max-body", sc.max_body_bytes, "bytes");
  serve->add_option("--max-text", sc.max_text_bytes, "bytes");
  serve->add_option("--max-rows", sc.max_batch_rows);
  serve->add_option("--threads", sc.parallelism);
  serve->add_option("--timeout-ms", sc.request_timeout_ms);
  serve->add_option("--cors-origin", sc.cors_origin);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(ta);
    if (*predict) {
      if (p_text.empty() && p_input.empty()) throw CLI::RequiredError("--text or --input");
      return cmd_predict(pm, p_text, p_input, p_output);
    }
    if (*eval) return cmd_eval(em, e_corpus, e_out, e_zero);
    if (*compare) return cmd_compare(ca, cb, c_corpus, c_per_label, c_out);
    if (*synth) return cmd_synth(sa);
    if (*splitc) return cmd_split(s_corpus, s_ontology, s_out_dir, s_seed, s_fractions);
    if (*serve) {
      sc.bundle_path = sv_bundle;
      Service svc(sc);
      g_service = &svc;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      const int port = svc.start();
      std::cerr << "serving on " << sc.host << ":" << port << "\n";
      svc.run();
      return 0;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const CorpusError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
