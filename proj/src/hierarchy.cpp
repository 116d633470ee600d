#include "hcsbc/hierarchy.hpp"

#include <algorithm>
#include <set>

#include "hcsbc/errors.hpp"

namespace hcsbc {

using nlohmann::json;

PreparedText prepare_text(std::string_view text, const PrepConfig& prep) {
  PreparedText p;
  p.normalized = normalize(text, prep);
  p.tokens = tokenize(p.normalized, prep);
  return p;
}

std::string_view to_string(BackendKind k) { return k == BackendKind::Embed ? "embed" : "tfidf"; }

BackendKind parse_backend_kind(std::string_view s) {
  if (s == "tfidf") return BackendKind::Tfidf;
  if (s == "embed") return BackendKind::Embed;
  throw InputError("unknown backend '" + std::string(s) + "' (expected tfidf or embed)");
}

namespace {

json tfidf_config_json(const TfidfConfig& c) {
  return {{"sublinear_tf", c.sublinear_tf},
          {"smooth_idf", c.smooth_idf},
          {"norm", c.l2_normalize ? "l2" : "none"},
          {"max_features", c.max_features}};
}

TfidfConfig tfidf_config_from_json(const json& j) {
  TfidfConfig c;
  c.sublinear_tf = j.value("sublinear_tf", c.sublinear_tf);
  c.smooth_idf = j.value("smooth_idf", c.smooth_idf);
  c.l2_normalize = j.value("norm", std::string("l2")) == "l2";
  c.max_features = j.value("max_features", c.max_features);
  return c;
}

}  // namespace

json BackendConfig::to_json() const {
  return {{"kind", std::string(hcsbc::to_string(kind))},
          {"tfidf", tfidf_config_json(tfidf)},
          {"embed", embed.to_json()}};
}

BackendConfig BackendConfig::from_json(const json& j) {
  BackendConfig c;
  c.kind = parse_backend_kind(j.value("kind", std::string("tfidf")));
  if (j.contains("tfidf")) c.tfidf = tfidf_config_from_json(j.at("tfidf"));
  if (j.contains("embed")) c.embed = EmbedProviderConfig::from_json(j.at("embed"));
  return c;
}

FeatureBackend FeatureBackend::fit(const BackendConfig& cfg, const PrepConfig& prep,
                                   const std::vector<const PreparedText*>& rows) {
  FeatureBackend b;
  b.kind_ = cfg.kind;
  if (cfg.kind == BackendKind::Embed) {
    cfg.embed.validate();
    b.embed_ = cfg.embed;
    return b;
  }
  if (rows.empty()) {
    b.mask_ = VocabMask({}, prep.unknown_token);
    b.tfidf_ = TfidfModel({}, {}, 0, cfg.tfidf);
    return b;
  }
  std::vector<TokenStream> streams;
  streams.reserve(rows.size());
  for (const auto* r : rows) streams.push_back(r->tokens);
  b.mask_ = fit_vocab_mask(streams, prep);
  for (auto& s : streams) s = b.mask_.apply(s);
  b.tfidf_ = tfidf_fit(streams, cfg.tfidf);
  return b;
}

std::size_t FeatureBackend::dim() const {
  return kind_ == BackendKind::Embed ? embed_.dim : tfidf_.dim();
}

SparseVector FeatureBackend::transform(const PreparedText& row) const {
  return transform(std::vector<const PreparedText*>{&row}).rows.at(0);
}

FeatureMatrix FeatureBackend::transform(const std::vector<const PreparedText*>& rows) const {
  FeatureMatrix m;
  m.dim = dim();
  m.rows.reserve(rows.size());
  if (kind_ == BackendKind::Embed) {
    std::vector<std::string> texts;
    texts.reserve(rows.size());
    for (const auto* r : rows) texts.push_back(r->normalized);
    for (const auto& v : hcsbc::embed(embed_, texts)) m.rows.push_back(to_sparse(v));
    return m;
  }
  for (const auto* r : rows) m.rows.push_back(tfidf_.transform(mask_.apply(r->tokens)));
  return m;
}

json FeatureBackend::to_json() const {
  json j = {{"kind", std::string(to_string(kind_))}};
  if (kind_ == BackendKind::Embed) {
    j["embed"] = embed_.to_json();
  } else {
    j["mask"] = mask_.to_json();
    j["tfidf"] = tfidf_.to_json();
  }
  return j;
}

FeatureBackend FeatureBackend::from_json(const json& j) {
  FeatureBackend b;
  b.kind_ = parse_backend_kind(j.at("kind").get<std::string>());
  if (b.kind_ == BackendKind::Embed) {
    b.embed_ = EmbedProviderConfig::from_json(j.at("embed"));
  } else {
    b.mask_ = VocabMask::from_json(j.at("mask"));
    b.tfidf_ = TfidfModel::from_json(j.at("tfidf"));
  }
  return b;
}

std::vector<double> Component::probabilities(const PreparedText& row) const {
  return probabilities(std::vector<const PreparedText*>{&row}).at(0);
}

std::vector<std::vector<double>> Component::probabilities(
    const std::vector<const PreparedText*>& rows) const {
  if (rows.empty()) return {};
  return classifier->predict_proba(backend.transform(rows));
}

double HierarchyConfig::threshold_for(const std::string& label) const {
  auto it = thresholds.find(label);
  return it == thresholds.end() ? threshold : it->second;
}

json HierarchyConfig::to_json() const {
  return {{"prep", prep.to_json()},
          {"stage1_backend", stage1_backend.to_json()},
          {"branch_backend", branch_backend.to_json()},
          {"stage1_learner", stage1_learner.to_json()},
          {"branch_learner", branch_learner.to_json()},
          {"threshold", threshold},
          {"thresholds", thresholds},
          {"seed", seed}};
}

HierarchyConfig HierarchyConfig::from_json(const json& j) {
  HierarchyConfig c;
  if (j.contains("prep")) c.prep = PrepConfig::from_json(j.at("prep"));
  if (j.contains("stage1_backend")) c.stage1_backend = BackendConfig::from_json(j.at("stage1_backend"));
  if (j.contains("branch_backend")) c.branch_backend = BackendConfig::from_json(j.at("branch_backend"));
  if (j.contains("learner")) {
    c.stage1_learner = c.branch_learner = LearnerConfig::from_json(j.at("learner"));
  }
  if (j.contains("stage1_learner")) c.stage1_learner = LearnerConfig::from_json(j.at("stage1_learner"));
  if (j.contains("branch_learner")) c.branch_learner = LearnerConfig::from_json(j.at("branch_learner"));
  c.threshold = j.value("threshold", c.threshold);
  if (j.contains("thresholds")) {
    c.thresholds = j.at("thresholds").get<std::map<std::string, double>>();
  }
  c.seed = j.value("seed", c.seed);
  auto check = [](double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw InputError("thresholds must lie in [0,1]");
  };
  check(c.threshold);
  for (const auto& [k, v] : c.thresholds) check(v);
  c.prep.validate();
  return c;
}

std::vector<std::string> Prediction::label_set() const {
  std::vector<std::string> out;
  for (const auto& d : diagnoses) out.push_back(d.label);
  for (const auto& s : severities) {
    if (s.code == kNegativeCode) out.emplace_back(kNegativeCode);
  }
  return out;
}

json TrainingReport::to_json() const {
  json arr = json::array();
  for (const auto& e : components) {
    arr.push_back({{"component", e.component},
                   {"n_train", e.n_train},
                   {"n_labels", e.n_labels},
                   {"dim", e.dim},
                   {"warnings", e.warnings}});
  }
  return {{"components", arr}};
}

std::vector<Prediction> PipelineModel::predict(const std::vector<SpecimenPart>& parts) const {
  std::vector<PreparedText> prepared;
  prepared.reserve(parts.size());
  for (const auto& p : parts) prepared.push_back(prepare_text(p.text, config().prep));
  std::vector<const PreparedText*> ptrs;
  for (const auto& p : prepared) ptrs.push_back(&p);
  auto preds = predict_prepared(ptrs);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    preds[i].report_id = parts[i].report_id;
    preds[i].part_id = parts[i].part_id;
  }
  return preds;
}

Prediction PipelineModel::predict(const SpecimenPart& part) const {
  return predict(std::vector<SpecimenPart>{part}).at(0);
}

void PipelineModel::set_threshold(double t, const std::map<std::string, double>& overrides) {
  if (!(t >= 0.0 && t <= 1.0)) throw InputError("threshold must lie in [0,1]");
  for (auto* c : components()) {
    const auto& names = c->labels();
    for (std::size_t l = 0; l < names.size(); ++l) {
      auto it = overrides.find(names[l]);
      c->thresholds[l] = it == overrides.end() ? t : it->second;
    }
  }
}

std::vector<std::string> PipelineModel::eval_labels() const {
  std::vector<std::string> out;
  for (const auto& d : ontology().diagnoses()) out.push_back(d.name);
  out.emplace_back(kNegativeCode);
  return out;
}

TrainingReport PipelineModel::training_report() const {
  TrainingReport r;
  for (const auto* c : components()) {
    r.components.push_back(
        {c->name, c->n_train, c->labels().size(), c->backend.dim(), c->warnings});
  }
  return r;
}

HierarchicalModel::HierarchicalModel(Ontology ont, HierarchyConfig cfg, Component stage1,
                                     std::map<std::string, Component> branches)
    : ont_(std::move(ont)), cfg_(std::move(cfg)), stage1_(std::move(stage1)),
      branches_(std::move(branches)) {
  std::vector<std::string> sev;
  for (const auto& s : ont_.severities()) sev.push_back(s.code);
  if (!stage1_.classifier || stage1_.labels() != sev) {
    throw InputError("hierarchical model: stage-1 labels must be the ontology severities");
  }
  const auto codes = ont_.branch_codes();
  if (branches_.size() != codes.size()) {
    throw InputError("hierarchical model: exactly one branch per non-NEG severity required");
  }
  for (const auto& code : codes) {
    auto it = branches_.find(code);
    if (it == branches_.end() || !it->second.classifier) {
      throw InputError("hierarchical model: missing branch " + code);
    }
    std::vector<std::string> want;
    for (const auto& d : ont_.branch_labels(code)) want.push_back(d.name);
    if (it->second.labels() != want) {
      throw InputError("hierarchical model: branch " + code + " labels disagree with ontology");
    }
  }
  for (const auto* c : components()) {
    if (c->thresholds.size() != c->labels().size()) {
      throw InputError("hierarchical model: one threshold per label required");
    }
  }
}

std::vector<Component*> HierarchicalModel::components() {
  std::vector<Component*> out{&stage1_};
  for (const auto& code : ont_.branch_codes()) out.push_back(&branches_.at(code));
  return out;
}

std::vector<const Component*> HierarchicalModel::components() const {
  std::vector<const Component*> out{&stage1_};
  for (const auto& code : ont_.branch_codes()) out.push_back(&branches_.at(code));
  return out;
}

const Component& HierarchicalModel::branch(const std::string& code) const {
  auto it = branches_.find(code);
  if (it == branches_.end()) throw InputError("no branch for severity '" + code + "'");
  return it->second;
}

namespace {

void sort_diagnoses(std::vector<DiagnosisScore>& d, const Ontology& ont) {
  std::sort(d.begin(), d.end(), [&](const DiagnosisScore& a, const DiagnosisScore& b) {
    return ont.diagnosis_index(a.label) < ont.diagnosis_index(b.label);
  });
}

std::vector<SeverityScore> severities_above(const Component& stage1, const std::vector<double>& p) {
  std::vector<SeverityScore> out;
  const auto& names = stage1.labels();
  for (std::size_t s = 0; s < names.size(); ++s) {
    if (p[s] >= stage1.thresholds[s]) out.push_back({names[s], p[s]});
  }
  return out;
}

void add_branch_diagnoses(const Component& branch, const std::string& code,
                          const std::vector<double>& p, std::vector<DiagnosisScore>& out) {
  const auto& names = branch.labels();
  for (std::size_t l = 0; l < names.size(); ++l) {
    if (p[l] >= branch.thresholds[l]) out.push_back({names[l], p[l], code});
  }
}

}  // namespace

std::vector<Prediction> HierarchicalModel::predict_prepared(
    const std::vector<const PreparedText*>& rows) const {
  std::vector<Prediction> out(rows.size());
  const auto p1 = stage1_.probabilities(rows);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out[i].severities = severities_above(stage1_, p1[i]);
    out[i].no_prediction = out[i].severities.empty();
  }
  for (const auto& code : ont_.branch_codes()) {
    std::vector<std::size_t> idx;
    std::vector<const PreparedText*> sub;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (const auto& s : out[i].severities) {
        if (s.code == code) {
          idx.push_back(i);
          sub.push_back(rows[i]);
          break;
        }
      }
    }
    if (sub.empty()) continue;
    const auto& br = branches_.at(code);
    const auto p2 = br.probabilities(sub);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      add_branch_diagnoses(br, code, p2[k], out[idx[k]].diagnoses);
    }
  }
  for (auto& pr : out) sort_diagnoses(pr.diagnoses, ont_);
  return out;
}

Prediction route_reference(const HierarchicalModel& m, const PreparedText& row) {
  Prediction pr;
  const auto p1 = m.stage1().probabilities(row);
  pr.severities = severities_above(m.stage1(), p1);
  pr.no_prediction = pr.severities.empty();
  std::set<std::string> predicted;
  for (const auto& s : pr.severities) predicted.insert(s.code);
  std::vector<DiagnosisScore> all;
  for (const auto& [code, br] : m.branches()) {
    add_branch_diagnoses(br, code, br.probabilities(row), all);
  }
  for (auto& d : all) {
    if (predicted.count(d.severity)) pr.diagnoses.push_back(d);
  }
  sort_diagnoses(pr.diagnoses, m.ontology());
  return pr;
}

FlatModel::FlatModel(Ontology ont, HierarchyConfig cfg, Component model,
                     std::map<std::string, std::string> severity_table)
    : ont_(std::move(ont)), cfg_(std::move(cfg)), model_(std::move(model)),
      severity_table_(std::move(severity_table)) {
  if (!model_.classifier) throw InputError("flat model: missing classifier");
  if (model_.thresholds.size() != model_.labels().size()) {
    throw InputError("flat model: one threshold per label required");
  }
  for (const auto& l : model_.labels()) {
    if (!severity_table_.count(l)) throw InputError("flat model: no severity for label " + l);
  }
}

std::vector<Prediction> FlatModel::predict_prepared(
    const std::vector<const PreparedText*>& rows) const {
  std::vector<Prediction> out(rows.size());
  const auto p = model_.probabilities(rows);
  const auto& names = model_.labels();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& pr = out[i];
    for (std::size_t l = 0; l < names.size(); ++l) {
      if (p[i][l] < model_.thresholds[l]) continue;
      const auto& sev = severity_table_.at(names[l]);
      if (names[l] != kNegativeCode) pr.diagnoses.push_back({names[l], p[i][l], sev});
      auto it = std::find_if(pr.severities.begin(), pr.severities.end(),
                             [&](const SeverityScore& s) { return s.code == sev; });
      if (it == pr.severities.end()) {
        pr.severities.push_back({sev, p[i][l]});
      } else {
        it->probability = std::max(it->probability, p[i][l]);
      }
    }
    pr.no_prediction = pr.severities.empty();
  }
  return out;
}

std::vector<std::string> gold_severities(const LabeledPart& part, const Ontology& ont) {
  std::set<std::size_t> idx;
  for (const auto& d : part.gold_diagnoses) {
    idx.insert(ont.severity_index(ont.severity_of(d)));
  }
  if (idx.empty()) idx.insert(ont.severity_index(kNegativeCode));
  std::vector<std::string> out;
  for (auto i : idx) out.push_back(ont.severities()[i].code);
  return out;
}

namespace {

void check_gold(const std::vector<LabeledPart>& corpus, const Ontology& ont) {
  if (corpus.size() < 2) throw InputError("training corpus needs at least 2 parts");
  for (const auto& p : corpus) {
    for (const auto& d : p.gold_diagnoses) {
      if (!ont.has_diagnosis(d)) {
        throw InputError("unknown gold label '" + d + "' in report " + p.report_id + " part " +
                         p.part_id);
      }
    }
  }
}

Component train_component(std::string name, const std::vector<const PreparedText*>& rows,
                          const LabelMatrix& y, const BackendConfig& bcfg,
                          const LearnerConfig& lcfg, const HierarchyConfig& cfg) {
  Component c;
  c.name = std::move(name);
  c.n_train = rows.size();
  c.backend = FeatureBackend::fit(bcfg, cfg.prep, rows);
  for (const auto& l : y.label_names()) c.thresholds.push_back(cfg.threshold_for(l));
  if (rows.size() < 2) {
    std::vector<double> probs(y.n_labels(), 0.0);
    for (std::size_t l = 0; l < y.n_labels() && !rows.empty(); ++l) {
      probs[l] = y.at(0, l) ? 1.0 : 0.0;
    }
    auto k = std::make_shared<ConstantClassifier>(y.label_names(), c.backend.dim(), probs);
    c.warnings.push_back(c.name + ": " + std::to_string(rows.size()) +
                         " training rows; using a constant predictor");
    c.classifier = std::move(k);
    return c;
  }
  LearnerConfig l = lcfg;
  l.forest.seed = cfg.seed;
  const FeatureMatrix x = c.backend.transform(rows);
  std::shared_ptr<const Classifier> clf = fit_classifier(l, x, y);
  for (const auto& w : clf->warnings()) c.warnings.push_back(c.name + ": " + w);
  c.classifier = std::move(clf);
  return c;
}

}  // namespace

HierarchicalModel train_hierarchical(const std::vector<LabeledPart>& corpus, const Ontology& ont,
                                     const HierarchyConfig& cfg) {
  check_gold(corpus, ont);
  cfg.prep.validate();
  std::vector<PreparedText> prepared;
  prepared.reserve(corpus.size());
  for (const auto& p : corpus) prepared.push_back(prepare_text(p.text, cfg.prep));
  std::vector<std::vector<std::string>> gold_sev;
  for (const auto& p : corpus) gold_sev.push_back(gold_severities(p, ont));

  std::vector<std::string> sev_codes;
  for (const auto& s : ont.severities()) sev_codes.push_back(s.code);
  LabelMatrix y1(corpus.size(), sev_codes);
  std::vector<const PreparedText*> all;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    all.push_back(&prepared[i]);
    for (const auto& s : gold_sev[i]) y1.set(i, ont.severity_index(s));
  }
  Component stage1 =
      train_component("stage1", all, y1, cfg.stage1_backend, cfg.stage1_learner, cfg);

  std::map<std::string, Component> branches;
  for (const auto& code : ont.branch_codes()) {
    std::vector<std::string> names;
    for (const auto& d : ont.branch_labels(code)) names.push_back(d.name);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (std::find(gold_sev[i].begin(), gold_sev[i].end(), code) != gold_sev[i].end()) {
        idx.push_back(i);
      }
    }
    LabelMatrix y(idx.size(), names);
    std::vector<const PreparedText*> rows;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      rows.push_back(&prepared[idx[k]]);
      for (const auto& d : corpus[idx[k]].gold_diagnoses) {
        auto it = std::find(names.begin(), names.end(), d);
        if (it != names.end()) y.set(k, std::size_t(it - names.begin()));
      }
    }
    Component c = train_component(code, rows, y, cfg.branch_backend, cfg.branch_learner, cfg);
    if (idx.empty()) c.warnings.insert(c.warnings.begin(), code + ": empty training set");
    branches.emplace(code, std::move(c));
  }
  return HierarchicalModel(ont, cfg, std::move(stage1), std::move(branches));
}

FlatModel train_flat(const std::vector<LabeledPart>& corpus, const Ontology& ont,
                     const HierarchyConfig& cfg) {
  check_gold(corpus, ont);
  cfg.prep.validate();
  std::vector<std::string> names;
  std::map<std::string, std::string> table;
  for (const auto& d : ont.diagnoses()) {
    names.push_back(d.name);
    table[d.name] = d.severity;
  }
  names.emplace_back(kNegativeCode);
  table[std::string(kNegativeCode)] = std::string(kNegativeCode);

  std::vector<PreparedText> prepared;
  prepared.reserve(corpus.size());
  for (const auto& p : corpus) prepared.push_back(prepare_text(p.text, cfg.prep));
  LabelMatrix y(corpus.size(), names);
  std::vector<const PreparedText*> rows;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    rows.push_back(&prepared[i]);
    if (corpus[i].gold_diagnoses.empty()) y.set(i, names.size() - 1);
    for (const auto& d : corpus[i].gold_diagnoses) y.set(i, ont.diagnosis_index(d));
  }
  // Flat uses the stage-2 feature backend and learner: one stage over all labels.
  Component c = train_component("model", rows, y, cfg.branch_backend, cfg.branch_learner, cfg);
  return FlatModel(ont, cfg, std::move(c), std::move(table));
}

}  // namespace hcsbc
