// Acceptance gate: one PASS/FAIL line per primary criterion. Exits non-zero
// if any criterion fails.

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>

#include "hcsbc/bundle.hpp"
#include "hcsbc/errors.hpp"
#include "hcsbc/evalkit.hpp"
#include "hcsbc/logreg.hpp"
#include "hcsbc/service.hpp"
#include "support.hpp"

using namespace hcsbc;
using nlohmann::json;
namespace ht = hcsbc::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "first failure: " << what << "; ";
    pass &= ok;
  }
};

int failures = 0;

void criterion(const std::string& name, double budget_s, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << "exception: " << e.what() << "; ";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_s) {
    o.pass = false;
    o.detail << "over time budget " << budget_s << " s; ";
  }
  if (!o.pass) ++failures;
  std::printf("%s  %-22s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), secs,
              o.detail.str().c_str());
  std::fflush(stdout);
}

// ---------------------------------------------------------------------------

void ontology_partition(Outcome& o) {
  const Ontology& ont = Ontology::default_ontology();
  std::map<std::string, int> owners;
  for (const auto& code : ont.branch_codes()) {
    o.require(code != kNegativeCode, "NEG has a branch");
    for (const auto& d : ont.branch_labels(code)) {
      ++owners[d.name];
      o.require(ont.severity_of(d.name) == code, "owner disagrees for " + d.name);
    }
  }
  for (const auto& d : ont.diagnoses()) o.require(owners[d.name] == 1, "not owned once: " + d.name);
  o.require(owners.size() == ont.diagnoses().size(), "owned labels outside the diagnosis list");
  const Ontology back = Ontology::load(ont.serialize());
  o.require(back.checksum() == ont.checksum(), "round-trip checksum changed");
  o.require(Ontology::load(back.serialize()).checksum() == ont.checksum(), "second round trip");
  o.detail << ont.diagnoses().size() << " labels over " << ont.branch_codes().size()
           << " branches";
}

void segmenter_suite(Outcome& o) {
  const auto fixtures = ht::segmenter_fixtures();
  o.require(fixtures.size() == 25, "fixture count");
  std::set<MarkerStyle> styles;
  bool whole = false;
  for (const auto& f : fixtures) {
    const auto seg = segment({"r", f.text, std::nullopt}, f.styles);
    if (seg.style) styles.insert(*seg.style);
    bool ok = seg.parts.size() == f.parts.size();
    for (std::size_t k = 0; ok && k < f.parts.size(); ++k) {
      ok = seg.parts[k].part_id == f.parts[k].first && seg.parts[k].text == f.parts[k].second;
      whole |= f.parts[k].first == kWholePartId;
    }
    o.require(ok, "fixture '" + f.name + "'");
    o.require(ht::segmentation_lossless(f.text, seg), "lossless on fixture '" + f.name + "'");
  }
  o.require(styles.size() == 6, "not all six styles exercised");
  o.require(whole, "no-marker case missing");
  std::mt19937_64 rng(2024);
  std::size_t fuzzed = 0;
  while (fuzzed < 1000) {
    const std::string text = ht::random_report_text(rng);
    if (text.empty()) continue;
    ++fuzzed;
    o.require(ht::segmentation_lossless(text, segment({"r", text, std::nullopt}, MarkerStyleSet::all())),
              "lossless on fuzz input");
  }
  o.detail << "25 fixtures, " << fuzzed << " fuzzed inputs";
}

void textprep_suite(Outcome& o) {
  const PrepConfig c;
  o.require(normalize("34", c) == "thirty four", "34");
  o.require(normalize("%", c) == "percentage", "%");
  o.require(normalize("03:00", c) == "3 o' clock", "03:00");
  std::mt19937_64 rng(77);
  static const std::vector<std::string> pieces = {
      "34", "%", "03:00", "3 o'clock", "12:30", "0.8", "cm", "-", "+", "<", ">", "=", " ", "\n",
      "Tumor", "benign", ",", ".", "1234567", "9:00", "x", "-3", "a-b", "100%", "13:00", "\t"};
  std::uniform_int_distribution<std::size_t> len(0, 30), pick(0, pieces.size() - 1);
  for (int k = 0; k < 1000; ++k) {
    std::string s;
    for (std::size_t i = len(rng); i > 0; --i) s += pieces[pick(rng)];
    const auto once = normalize(s, c);
    o.require(normalize(once, c) == once, "idempotence on '" + s + "'");
  }
  std::vector<TokenStream> corpus;
  for (int k = 0; k < 4; ++k) corpus.push_back({{"seen_four", "seen_five"}, "", ""});
  corpus.push_back({{"seen_five"}, "", ""});
  const auto mask = fit_vocab_mask(corpus, c);
  o.require(!mask.retains("seen_four"), "4 occurrences retained");
  o.require(mask.retains("seen_five"), "5 occurrences masked");
  o.detail << "3 mappings, 1000 idempotence cases, 4/5 boundary";
}

void tfidf_oracle(Outcome& o) {
  std::mt19937_64 rng(5150);
  double worst = 0.0, worst_norm = 0.0;
  int corpora = 0;
  while (corpora < 50) {
    const auto docs = ht::random_docs(rng);
    bool any = false;
    for (const auto& d : docs) any |= !d.empty();
    if (!any) continue;
    ++corpora;
    const auto streams = ht::as_streams(docs);
    const auto m = tfidf_fit(streams);
    const auto ref = ht::brute_tfidf(docs);
    for (std::size_t i = 0; i < docs.size(); ++i) {
      const auto v = m.transform(streams[i]);
      o.require(v.nnz() == ref[i].size(), "support differs");
      for (std::size_t k = 0; k < v.nnz(); ++k) {
        const auto it = ref[i].find(m.vocabulary()[v.indices[k]]);
        o.require(it != ref[i].end(), "unexpected token");
        if (it != ref[i].end()) worst = std::max(worst, std::abs(it->second - v.values[k]));
      }
      if (!v.empty()) worst_norm = std::max(worst_norm, std::abs(v.l2_norm() - 1.0));
    }
  }
  o.require(worst <= 1e-9, "value error above 1e-9");
  o.require(worst_norm <= 1e-9, "norm error above 1e-9");
  o.detail << "50 corpora, max |diff| " << worst << ", max |norm-1| " << worst_norm;
}

void logreg_checks(Outcome& o) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 6 + trial, d = 2 + trial % 6;
    std::vector<std::vector<double>> rows(n, std::vector<double>(d));
    for (auto& r : rows) {
      for (auto& v : r) v = u(rng) > 0 ? u(rng) : 0.0;
    }
    const auto x = ht::dense_matrix(rows);
    std::vector<std::uint8_t> y(n);
    for (auto& v : y) v = u(rng) > 0;
    std::vector<double> w(d);
    for (auto& v : w) v = 0.5 * u(rng);
    const double b = 0.3 * u(rng), alpha = 1.0 + trial * 0.2, lambda = 1e-3;
    std::vector<double> gw;
    double gb = 0;
    logreg_gradient(x, y, w, b, alpha, lambda, gw, gb);
    const double h = 1e-6;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1e-8, std::abs(a) + std::abs(b)); };
    for (std::size_t j = 0; j <= d; ++j) {
      auto wp = w, wm = w;
      double bp = b, bm = b;
      if (j < d) {
        wp[j] += h;
        wm[j] -= h;
      } else {
        bp += h;
        bm -= h;
      }
      const double num = (logreg_loss(x, y, wp, bp, alpha, lambda) -
                          logreg_loss(x, y, wm, bm, alpha, lambda)) / (2 * h);
      worst = std::max(worst, rel(j < d ? gw[j] : gb, num));
    }
  }
  o.require(worst < 1e-4, "gradient relative error");

  std::vector<std::vector<double>> rows;
  std::vector<std::vector<int>> y;
  for (int i = 0; i < 12; ++i) {
    rows.push_back({1.0 + 0.1 * i, 0.1 * i});
    y.push_back({1, 0});
    rows.push_back({0.1 * i, 1.0 + 0.1 * i});
    y.push_back({0, 1});
  }
  const auto x = ht::dense_matrix(rows);
  const auto ym = ht::label_matrix(y, {"p", "q"});
  LogRegConfig cfg;
  cfg.learning_rate = 4.0;
  cfg.max_epochs = 2000;
  const auto m = logreg_fit(x, ym, cfg);
  std::size_t steps = 0;
  for (const auto& tr : m.loss_traces()) {
    for (std::size_t k = 1; k < tr.size(); ++k) {
      o.require(tr[k] <= tr[k - 1], "loss increased on an accepted step");
      ++steps;
    }
  }
  std::size_t exact = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto p = m.predict_row(x.rows[i]);
    exact += (p[0] >= 0.5) == ym.at(i, 0) && (p[1] >= 0.5) == ym.at(i, 1);
  }
  o.require(exact == x.size(), "separable toy not fitted");
  o.detail << "max rel grad error " << worst << ", " << steps << " monotone steps, toy accuracy "
           << double(exact) / x.size();
}

void forest_checks(Outcome& o) {
  const Ontology& ont = Ontology::default_ontology();
  const auto corpus = generate_synth(ht::small_synth_config(ont, 17, 300), ont).parts;
  const auto dir = ht::temp_dir("accept_forest");
  BundleOptions opts;
  opts.created = "2000-01-01T00:00:00Z";
  save_bundle(train_hierarchical(corpus, ont, ht::quick_config("forest", 10)), dir / "a", opts);
  save_bundle(train_hierarchical(corpus, ont, ht::quick_config("forest", 10)), dir / "b", opts);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
    if (!e.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(e.path(), dir / "a");
    o.require(read_file(e.path()) == read_file(dir / "b" / rel), "bytes differ: " + rel.string());
  }
  fs::remove_all(dir);

  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> bit(0, 1);
  std::set<std::vector<double>> seen;
  std::vector<std::vector<double>> rows;
  std::vector<std::vector<int>> y;
  while (rows.size() < 30) {
    std::vector<double> r(7);
    for (auto& v : r) v = bit(rng);
    if (!seen.insert(r).second) continue;
    rows.push_back(r);
    y.push_back({int(r[0]) ^ int(r[4]), int(r[1] + r[2] + r[6] >= 2), int(r[3])});
  }
  ForestConfig fc;
  fc.n_trees = 1;
  fc.bootstrap = false;
  fc.max_depth = 0;
  const auto x = ht::dense_matrix(rows);
  const auto ym = ht::label_matrix(y, {"xor", "maj", "copy"});
  const auto m = forest_fit(x, ym, fc);
  std::size_t exact = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto p = m.predict_row(x.rows[i]);
    bool ok = true;
    for (std::size_t l = 0; l < 3; ++l) ok &= (p[l] >= 0.5) == ym.at(i, l);
    exact += ok;
  }
  o.require(exact == rows.size(), "memorization below 1.0");
  o.detail << files << " bundle files identical, memorization accuracy "
           << double(exact) / rows.size();
}

void routing_checks(Outcome& o) {
  const Ontology& ont = Ontology::default_ontology();
  auto scfg = ht::small_synth_config(ont, 61, 1000);
  scfg.noise_rate = 0.4;
  scfg.co_occurrence_rate = 0.4;
  const auto train = generate_synth(scfg, ont).parts;
  scfg.seed = 62;
  const auto test = generate_synth(scfg, ont).parts;
  HierarchicalModel m = train_hierarchical(train, ont, ht::quick_config("forest", 10));
  m.set_threshold(0.3);
  std::vector<SpecimenPart> parts;
  for (const auto& p : test) parts.push_back({p.report_id, p.part_id, p.text, {}, {}});
  const auto preds = m.predict(parts);
  std::size_t multi = 0, neg_only = 0;
  for (const auto& p : preds) {
    std::set<std::string> sev;
    for (const auto& s : p.severities) sev.insert(s.code);
    multi += sev.size() > 1;
    for (const auto& d : p.diagnoses) {
      o.require(sev.count(ont.severity_of(d.label)) == 1, "diagnosis outside predicted severities");
    }
    if (sev == std::set<std::string>{std::string(kNegativeCode)}) {
      ++neg_only;
      o.require(p.diagnoses.empty(), "NEG-only prediction carries diagnoses");
    }
  }
  for (std::size_t i = 0; i < 50; ++i) {
    Prediction ref = route_reference(m, prepare_text(parts[i].text, m.config().prep));
    ref.report_id = parts[i].report_id;
    ref.part_id = parts[i].part_id;
    o.require(ref == preds[i], "prediction differs from routed reference");
  }
  o.detail << preds.size() << " predictions (" << multi << " multi-severity, " << neg_only
           << " NEG-only), 50 reference comparisons";
}

void metric_checks(Outcome& o) {
  std::mt19937_64 rng(12);
  std::size_t cases = 0;
  for (std::size_t n = 1; n <= 5; ++n) {
    for (std::size_t L = 1; L <= 4; ++L) {
      std::vector<std::string> names;
      for (std::size_t l = 0; l < L; ++l) names.push_back("l" + std::to_string(l));
      // Every gold/pred pair when small; a sample of 2000 otherwise.
      const std::size_t bits = 2 * n * L;
      const bool exhaustive = bits <= 12;
      const std::size_t total = exhaustive ? (std::size_t(1) << bits) : 2000;
      for (std::size_t c = 0; c < total; ++c) {
        const std::uint64_t code = exhaustive ? c : rng();
        std::vector<std::vector<int>> g(n, std::vector<int>(L)), p(n, std::vector<int>(L));
        std::size_t b = 0;
        for (auto* m : {&g, &p}) {
          for (auto& r : *m) {
            for (auto& v : r) v = (code >> (b++ % 64)) & 1;
          }
        }
        const auto rep = compute_metrics(ht::label_matrix(g, names), ht::label_matrix(p, names));
        const auto cnt = ht::brute_counts(g, p, L);
        std::size_t TP = 0, FP = 0, FN = 0, mn = 0, exact = 0;
        double mf = 0;
        for (std::size_t l = 0; l < L; ++l) {
          TP += cnt.tp[l];
          FP += cnt.fp[l];
          FN += cnt.fn[l];
          const double P = ht::safe_ratio(cnt.tp[l], cnt.tp[l] + cnt.fp[l]);
          const double R = ht::safe_ratio(cnt.tp[l], cnt.tp[l] + cnt.fn[l]);
          if (cnt.support[l]) {
            mf += ht::safe_ratio(2 * P * R, P + R);
            ++mn;
          }
        }
        for (std::size_t i = 0; i < n; ++i) exact += g[i] == p[i];
        const double P = ht::safe_ratio(TP, TP + FP), R = ht::safe_ratio(TP, TP + FN);
        o.require(std::abs(rep.micro_f1 - ht::safe_ratio(2 * P * R, P + R)) < 1e-12, "micro F1");
        o.require(std::abs(rep.macro_f1 - ht::safe_ratio(mf, mn)) < 1e-12, "macro F1");
        o.require(std::abs(rep.subset_accuracy - double(exact) / n) < 1e-12, "subset accuracy");
        ++cases;
      }
    }
  }
  const auto mc = mcnemar_from_counts(10, 2);
  const double oracle = ht::chi2_1_survival(49.0 / 12.0);
  o.require(std::abs(mc.statistic - 49.0 / 12.0) <= 1e-9, "McNemar statistic");
  o.require(std::abs(mc.p_value - 0.0433) <= 1e-3, "McNemar p vs 0.0433");
  o.require(std::abs(mc.p_value - oracle) <= 1e-3, "McNemar p vs chi-square oracle");
  const auto pa = ht::label_matrix({{1, 0}, {0, 1}, {1, 1}}, {"a", "b"});
  const auto gold = ht::label_matrix({{1, 1}, {0, 1}, {0, 1}}, {"a", "b"});
  o.require(mcnemar(pa, pa, gold).p_value == 1.0, "self-comparison p");
  o.detail << cases << " metric cases; McNemar stat " << mc.statistic << " p " << mc.p_value
           << " (oracle " << oracle << ")";
}

void end_to_end(Outcome& o) {
  const Ontology ont = Ontology::default_ontology().with_synthetic_fillers(30);
  o.require(ont.diagnoses().size() >= 30, "label count");
  o.require(ont.branch_codes().size() == 6, "severity count");
  double sum_hmi = 0, sum_fmi = 0, sum_hma = 0, sum_fma = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    SynthConfig sc;
    sc.seed = seed;
    sc.n_parts = 5000;
    sc.priors = priors_from_profile(ont, clinical_severity_profile());
    sc.co_occurrence_rate = 0.15;
    sc.noise_rate = 0.2;
    const auto corpus = generate_synth(sc, ont).parts;
    SplitConfig split_cfg;
    split_cfg.seed = seed;
    const auto parts = split(corpus, split_cfg);
    HierarchyConfig hc;
    hc.seed = seed;
    const auto h = train_hierarchical(parts.train, ont, hc);
    const auto f = train_flat(parts.train, ont, hc);
    const auto eh = evaluate(h, parts.test).report;
    const auto ef = evaluate(f, parts.test).report;
    sum_hmi += eh.micro_f1;
    sum_fmi += ef.micro_f1;
    sum_hma += eh.macro_f1;
    sum_fma += ef.macro_f1;
    char buf[200];
    std::snprintf(buf, sizeof buf, "seed %llu micro h/f %.4f/%.4f macro h/f %.4f/%.4f; ",
                  static_cast<unsigned long long>(seed), eh.micro_f1, ef.micro_f1, eh.macro_f1,
                  ef.macro_f1);
    o.detail << buf;
    o.require(eh.micro_f1 >= ef.micro_f1 - 0.01, "micro F1 margin, seed " + std::to_string(seed));
    o.require(eh.macro_f1 >= ef.macro_f1, "macro F1, seed " + std::to_string(seed));
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "mean micro h/f %.4f/%.4f macro h/f %.4f/%.4f", sum_hmi / 3,
                sum_fmi / 3, sum_hma / 3, sum_fma / 3);
  o.detail << buf;
}

void split_protocol(Outcome& o) {
  const Ontology& ont = Ontology::default_ontology();
  const auto corpus = generate_synth(ht::small_synth_config(ont, 6681, 6681), ont).parts;
  const auto a = split(corpus, {});
  const auto b = split(corpus, {});
  const std::size_t n = corpus.size();
  o.require(n == 6681, "corpus size");
  o.require(a.train.size() + a.val.size() + a.test.size() == n, "sizes do not sum");
  o.require(a.train.size() == std::size_t(std::floor(0.6 * n)), "train = floor(0.6 n)");
  o.require(a.val.size() == std::size_t(std::floor(0.2 * n)), "val = floor(0.2 n)");
  o.require(a.train.size() == 4008 || a.train.size() == 4009, "train shape");
  o.require(a.val.size() == 1336, "val shape");
  o.require(a.train == b.train && a.val == b.val && a.test == b.test, "not reproducible");
  std::set<std::pair<std::string, std::string>> ids;
  for (const auto* fold : {&a.train, &a.val, &a.test}) {
    for (const auto& p : *fold) ids.insert({p.report_id, p.part_id});
  }
  o.require(ids.size() == n, "folds overlap or drop parts");
  o.detail << "sizes " << a.train.size() << "/" << a.val.size() << "/" << a.test.size();
}

void service_contract(Outcome& o) {
  const Ontology& ont = Ontology::default_ontology();
  const auto corpus = generate_synth(ht::small_synth_config(ont, 88, 400), ont).parts;
  const auto dir = ht::temp_dir("accept_service");
  save_bundle(train_hierarchical(corpus, ont, ht::quick_config("forest", 10)), dir);

  ServiceConfig cfg;
  cfg.port = 0;
  cfg.bundle_path = dir;
  cfg.max_body_bytes = 64 * 1024;
  cfg.max_text_bytes = 4096;
  cfg.max_batch_rows = 50;
  Service svc(cfg);
  const int port = svc.start();
  httplib::Client cli("127.0.0.1", port);
  cli.set_read_timeout(30, 0);

  const std::string text = json{{"text", "FINAL DIAGNOSIS:\nA. " + corpus[0].text}}.dump();
  auto r1 = cli.Post("/api/predict", text, "application/json");
  auto r2 = cli.Post("/api/predict", text, "application/json");
  o.require(r1 && r1->status == 200, "predict status");
  o.require(r1 && r2 && r1->body == r2->body, "predict not deterministic");
  if (r1 && r1->status == 200) {
    const auto j = json::parse(r1->body);
    for (const char* k : {"severities", "diagnoses", "importances", "no_prediction", "model"}) {
      o.require(j.contains(k), std::string("predict lacks ") + k);
    }
  }

  std::string batch;
  const std::size_t rows = 10;
  for (std::size_t k = 0; k < rows; ++k) {
    if (k == 4) {
      batch += "{broken json\n";
    } else if (k == 7) {
      batch += "{\"text\":\"\"}\n";
    } else {
      batch += json{{"report_id", "R" + std::to_string(k)}, {"text", corpus[k].text}}.dump() + "\n";
    }
  }
  auto rb = cli.Post("/api/batch", batch, "application/x-ndjson");
  o.require(rb && rb->status == 200, "batch status");
  if (rb) {
    std::istringstream in(rb->body);
    std::string line;
    std::size_t k = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = json::parse(line);
      o.require(j["row"] == k + 1, "batch order");
      const bool bad = k == 4 || k == 7;
      o.require(j.contains("error") == bad, "batch isolation at row " + std::to_string(k + 1));
      if (!bad) {
        const auto single = cli.Post("/api/predict",
                                     json{{"report_id", "R" + std::to_string(k)}, {"text", corpus[k].text}}.dump(),
                                     "application/json");
        auto a = j;
        for (const char* f : {"row", "line", "source_part_id"}) a.erase(f);
        o.require(single && json::parse(single->body) == a, "batch row differs from single predict");
      }
      ++k;
    }
    o.require(k == rows, "batch row count");
  }

  auto ro = cli.Get("/api/ontology");
  o.require(ro && ro->status == 200, "ontology status");
  if (ro) o.require(json::parse(ro->body)["checksum"] == ont.checksum(), "ontology checksum");

  auto bad_json = cli.Post("/api/predict", "{oops", "application/json");
  o.require(bad_json && bad_json->status == 400, "malformed JSON -> 400");
  auto no_text = cli.Post("/api/predict", R"({"other":1})", "application/json");
  o.require(no_text && no_text->status == 400, "missing text -> 400");
  auto long_text = cli.Post("/api/predict", json{{"text", std::string(5000, 'x')}}.dump(), "application/json");
  o.require(long_text && long_text->status == 413, "oversized text -> 413");
  auto huge = cli.Post("/api/predict", std::string(100 * 1024, ' '), "application/json");
  o.require(huge && huge->status == 413, "oversized body -> 413");
  std::string many;
  for (int k = 0; k < 51; ++k) many += "{\"text\":\"cyst\"}\n";
  auto too_many = cli.Post("/api/batch", many, "application/x-ndjson");
  o.require(too_many && too_many->status == 413, "too many batch rows -> 413");

  // no_prediction: swap in a model whose severity stage never fires.
  const auto loaded = load_bundle(dir);
  const auto& h = dynamic_cast<const HierarchicalModel&>(*loaded.model);
  Component stage1 = h.stage1();
  stage1.classifier = std::make_shared<ConstantClassifier>(
      stage1.labels(), stage1.backend.dim(), std::vector<double>(stage1.labels().size(), 0.0));
  svc.handle().swap(std::make_shared<HierarchicalModel>(h.ontology(), h.config(), stage1, h.branches()),
                    "silent");
  auto rn = cli.Post("/api/predict", text, "application/json");
  o.require(rn && rn->status == 200, "no_prediction status");
  if (rn) {
    const auto j = json::parse(rn->body);
    o.require(j["no_prediction"] == true && j["severities"].empty() && j["diagnoses"].empty(),
              "no_prediction payload");
  }
  auto health = cli.Get("/healthz");
  o.require(health && json::parse(health->body)["generation"] == 2, "hot swap generation");
  svc.stop();
  fs::remove_all(dir);
  o.detail << "predict, batch(" << rows << "), ontology, no_prediction, 400/413 over HTTP port " << port;
}

}  // namespace

int main() {
  criterion("ontology_partition", 1, ontology_partition);
  criterion("segmenter_golden", 5, segmenter_suite);
  criterion("textprep_golden", 5, textprep_suite);
  criterion("tfidf_oracle", 10, tfidf_oracle);
  criterion("logreg_gradient", 30, logreg_checks);
  criterion("forest_determinism", 10, forest_checks);
  criterion("routing_soundness", 30, routing_checks);
  criterion("metrics_mcnemar", 30, metric_checks);
  criterion("end_to_end_synthetic", 300, end_to_end);
  criterion("split_protocol", 1, split_protocol);
  criterion("service_contract", 30, service_contract);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
