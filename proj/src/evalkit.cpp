#include "hcsbc/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "hcsbc/errors.hpp"
#include "hcsbc/rng.hpp"

namespace hcsbc {

using nlohmann::json;

void SplitConfig::validate() const {
  if (!(train > 0.0 && val > 0.0 && test > 0.0)) {
    throw InputError("split: every fraction must be positive");
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) {
    throw InputError("split: fractions must sum to 1");
  }
}

SplitIndices split_indices(std::size_t n, const SplitConfig& cfg) {
  cfg.validate();
  if (n < 5) throw InputError("split: corpus needs at least 5 parts");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(cfg.seed);
  seeded_shuffle(order, rng);
  const auto n_train = std::size_t(std::floor(double(n) * cfg.train));
  const auto n_val = std::size_t(std::floor(double(n) * cfg.val));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n) {
    throw InputError("split: a fold would be empty");
  }
  SplitIndices s;
  s.train.assign(order.begin(), order.begin() + std::ptrdiff_t(n_train));
  s.val.assign(order.begin() + std::ptrdiff_t(n_train),
               order.begin() + std::ptrdiff_t(n_train + n_val));
  s.test.assign(order.begin() + std::ptrdiff_t(n_train + n_val), order.end());
  return s;
}

CorpusSplit split(const std::vector<LabeledPart>& corpus, const SplitConfig& cfg) {
  const auto idx = split_indices(corpus.size(), cfg);
  CorpusSplit out;
  for (auto i : idx.train) out.train.push_back(corpus[i]);
  for (auto i : idx.val) out.val.push_back(corpus[i]);
  for (auto i : idx.test) out.test.push_back(corpus[i]);
  return out;
}

namespace {

double ratio(std::size_t a, std::size_t b) { return b == 0 ? 0.0 : double(a) / double(b); }
double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

void check_same_shape(const LabelMatrix& a, const LabelMatrix& b) {
  if (a.n_samples() != b.n_samples() || a.n_labels() != b.n_labels()) {
    throw DimensionError("label matrices differ in shape");
  }
}

}  // namespace

EvalReport compute_metrics(const LabelMatrix& gold, const LabelMatrix& pred,
                           const MetricsOptions& opts) {
  check_same_shape(gold, pred);
  EvalReport r;
  r.n_rows = gold.n_samples();
  r.macro_include_zero_support = opts.macro_include_zero_support;
  std::size_t exact = 0;
  for (std::size_t i = 0; i < gold.n_samples(); ++i) {
    bool same = true;
    for (std::size_t l = 0; l < gold.n_labels(); ++l) same = same && gold.at(i, l) == pred.at(i, l);
    exact += same ? 1 : 0;
  }
  r.subset_accuracy = ratio(exact, gold.n_samples());
  for (std::size_t l = 0; l < gold.n_labels(); ++l) {
    LabelMetrics m;
    m.label = gold.label_names()[l];
    for (std::size_t i = 0; i < gold.n_samples(); ++i) {
      const bool g = gold.at(i, l), p = pred.at(i, l);
      m.tp += g && p;
      m.fp += !g && p;
      m.fn += g && !p;
    }
    m.support = m.tp + m.fn;
    m.precision = ratio(m.tp, m.tp + m.fp);
    m.recall = ratio(m.tp, m.tp + m.fn);
    m.f1 = harmonic(m.precision, m.recall);
    r.tp += m.tp;
    r.fp += m.fp;
    r.fn += m.fn;
    if (m.support > 0 || opts.macro_include_zero_support) {
      r.macro_precision += m.precision;
      r.macro_recall += m.recall;
      r.macro_f1 += m.f1;
      ++r.macro_labels;
    }
    r.per_label.push_back(std::move(m));
  }
  if (r.macro_labels > 0) {
    r.macro_precision /= double(r.macro_labels);
    r.macro_recall /= double(r.macro_labels);
    r.macro_f1 /= double(r.macro_labels);
  }
  r.micro_precision = ratio(r.tp, r.tp + r.fp);
  r.micro_recall = ratio(r.tp, r.tp + r.fn);
  r.micro_f1 = harmonic(r.micro_precision, r.micro_recall);
  return r;
}

json EvalReport::to_json() const {
  json labels = json::array();
  for (const auto& m : per_label) {
    labels.push_back({{"label", m.label},
                      {"tp", m.tp},
                      {"fp", m.fp},
                      {"fn", m.fn},
                      {"support", m.support},
                      {"precision", m.precision},
                      {"recall", m.recall},
                      {"f1", m.f1}});
  }
  return {{"accuracy_definition", "subset accuracy (exact label-set match)"},
          {"macro_definition", macro_include_zero_support
                                   ? "mean over all labels"
                                   : "mean over labels with support > 0"},
          {"n_rows", n_rows},
          {"accuracy", subset_accuracy},
          {"micro", {{"precision", micro_precision}, {"recall", micro_recall}, {"f1", micro_f1}}},
          {"macro",
           {{"precision", macro_precision},
            {"recall", macro_recall},
            {"f1", macro_f1},
            {"labels", macro_labels}}},
          {"totals", {{"tp", tp}, {"fp", fp}, {"fn", fn}}},
          {"per_label", labels}};
}

McNemarResult mcnemar_from_counts(std::size_t b, std::size_t c) {
  McNemarResult r;
  r.b = b;
  r.c = c;
  if (b + c == 0) return r;
  const double d = std::abs(double(b) - double(c)) - 1.0;
  r.statistic = d > 0.0 ? d * d / double(b + c) : 0.0;
  // Survival function of chi-square with one degree of freedom.
  r.p_value = std::clamp(std::erfc(std::sqrt(r.statistic / 2.0)), 0.0, 1.0);
  return r;
}

McNemarResult mcnemar(const LabelMatrix& pred_a, const LabelMatrix& pred_b,
                      const LabelMatrix& gold) {
  check_same_shape(pred_a, gold);
  check_same_shape(pred_b, gold);
  std::size_t b = 0, c = 0;
  for (std::size_t i = 0; i < gold.n_samples(); ++i) {
    for (std::size_t l = 0; l < gold.n_labels(); ++l) {
      const bool ca = pred_a.at(i, l) == gold.at(i, l);
      const bool cb = pred_b.at(i, l) == gold.at(i, l);
      b += ca && !cb;
      c += !ca && cb;
    }
  }
  return mcnemar_from_counts(b, c);
}

std::vector<McNemarResult> mcnemar_per_label(const LabelMatrix& pred_a, const LabelMatrix& pred_b,
                                             const LabelMatrix& gold) {
  check_same_shape(pred_a, gold);
  check_same_shape(pred_b, gold);
  std::vector<McNemarResult> out;
  for (std::size_t l = 0; l < gold.n_labels(); ++l) {
    std::size_t b = 0, c = 0;
    for (std::size_t i = 0; i < gold.n_samples(); ++i) {
      const bool ca = pred_a.at(i, l) == gold.at(i, l);
      const bool cb = pred_b.at(i, l) == gold.at(i, l);
      b += ca && !cb;
      c += !ca && cb;
    }
    out.push_back(mcnemar_from_counts(b, c));
  }
  return out;
}

json McNemarResult::to_json() const {
  return {{"b", b}, {"c", c}, {"statistic", statistic}, {"p_value", p_value}};
}

std::string_view to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::WrongDiagnosis: return "WRONG_DIAGNOSIS";
    case ErrorCategory::MissedDiagnosis: return "MISSED_DIAGNOSIS";
    case ErrorCategory::SpuriousDiagnosis: return "SPURIOUS_DIAGNOSIS";
  }
  return "";
}

namespace {

std::string severity_of_label(const std::string& label, const Ontology& ont) {
  if (label == kNegativeCode) return std::string(kNegativeCode);
  if (!ont.has_diagnosis(label)) throw InputError("unknown label '" + label + "'");
  return ont.severity_of(label);
}

}  // namespace

ErrorAnalysis categorize_errors(const std::vector<PartLabels>& gold,
                                const std::vector<PartLabels>& pred, const Ontology& ont) {
  if (gold.size() != pred.size()) throw DimensionError("categorize_errors: length mismatch");
  ErrorAnalysis out;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const std::set<std::string> g(gold[i].labels.begin(), gold[i].labels.end());
    const std::set<std::string> p(pred[i].labels.begin(), pred[i].labels.end());
    for (const auto& l : g) severity_of_label(l, ont);
    for (const auto& l : p) severity_of_label(l, ont);
    std::vector<std::string> missed, spurious;
    for (const auto& l : gold[i].labels) {
      if (!p.count(l) && std::find(missed.begin(), missed.end(), l) == missed.end()) missed.push_back(l);
    }
    for (const auto& l : pred[i].labels) {
      if (!g.count(l) && std::find(spurious.begin(), spurious.end(), l) == spurious.end()) {
        spurious.push_back(l);
      }
    }
    std::vector<bool> used(spurious.size(), false);
    for (const auto& m : missed) {
      const auto gs = severity_of_label(m, ont);
      ErrorCase e{gold[i].report_id, gold[i].part_id, ErrorCategory::MissedDiagnosis, m, "", {}};
      for (std::size_t k = 0; k < spurious.size(); ++k) {
        if (used[k]) continue;
        const auto ps = severity_of_label(spurious[k], ont);
        if (ps == gs) continue;
        used[k] = true;
        e.category = ErrorCategory::WrongDiagnosis;
        e.predicted_label = spurious[k];
        e.severity_pair = std::make_pair(gs, ps);
        ++out.severity_pairs[*e.severity_pair];
        break;
      }
      (e.category == ErrorCategory::WrongDiagnosis ? out.wrong : out.missed) += 1;
      out.cases.push_back(std::move(e));
    }
    for (std::size_t k = 0; k < spurious.size(); ++k) {
      if (used[k]) continue;
      out.cases.push_back({pred[i].report_id, pred[i].part_id, ErrorCategory::SpuriousDiagnosis,
                           "", spurious[k], {}});
      ++out.spurious;
    }
  }
  return out;
}

std::vector<std::string> gold_label_set(const LabeledPart& part) {
  if (part.gold_diagnoses.empty()) return {std::string(kNegativeCode)};
  return part.gold_diagnoses;
}

ErrorAnalysis categorize_errors(const std::vector<LabeledPart>& gold,
                                const std::vector<Prediction>& pred, const Ontology& ont,
                                double review_threshold) {
  if (gold.size() != pred.size()) throw DimensionError("categorize_errors: length mismatch");
  std::vector<PartLabels> g, p;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    g.push_back({gold[i].report_id, gold[i].part_id, gold_label_set(gold[i])});
    p.push_back({gold[i].report_id, gold[i].part_id, pred[i].label_set()});
  }
  auto out = categorize_errors(g, p, ont);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const std::set<std::string> gs(g[i].labels.begin(), g[i].labels.end());
    for (const auto& d : pred[i].diagnoses) {
      if (d.probability >= review_threshold && !gs.count(d.label)) {
        out.review_candidates.push_back({g[i].report_id, g[i].part_id, d.label, d.probability});
      }
    }
    for (const auto& s : pred[i].severities) {
      if (s.code == kNegativeCode && s.probability >= review_threshold && !gs.count(s.code)) {
        out.review_candidates.push_back({g[i].report_id, g[i].part_id, s.code, s.probability});
      }
    }
  }
  return out;
}

json ErrorAnalysis::to_json() const {
  json cs = json::array();
  for (const auto& e : cases) {
    json j = {{"report_id", e.report_id},
              {"part_id", e.part_id},
              {"category", std::string(to_string(e.category))}};
    if (!e.gold_label.empty()) j["gold_label"] = e.gold_label;
    if (!e.predicted_label.empty()) j["predicted_label"] = e.predicted_label;
    if (e.severity_pair) j["severity_pair"] = {e.severity_pair->first, e.severity_pair->second};
    cs.push_back(std::move(j));
  }
  json pairs = json::array();
  for (const auto& [k, n] : severity_pairs) {
    pairs.push_back({{"gold", k.first}, {"predicted", k.second}, {"count", n}});
  }
  json review = json::array();
  for (const auto& r : review_candidates) {
    review.push_back({{"report_id", r.report_id},
                      {"part_id", r.part_id},
                      {"label", r.label},
                      {"probability", r.probability}});
  }
  return {{"counts", {{"WRONG_DIAGNOSIS", wrong}, {"MISSED_DIAGNOSIS", missed},
                      {"SPURIOUS_DIAGNOSIS", spurious}}},
          {"severity_pairs", pairs},
          {"review_candidates", review},
          {"cases", cs}};
}

LabelMatrix to_label_matrix(const std::vector<std::vector<std::string>>& sets,
                            const std::vector<std::string>& labels) {
  LabelMatrix m(sets.size(), labels);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (const auto& l : sets[i]) {
      auto it = std::find(labels.begin(), labels.end(), l);
      if (it == labels.end()) throw InputError("label '" + l + "' outside the label space");
      m.set(i, std::size_t(it - labels.begin()));
    }
  }
  return m;
}

Evaluation evaluate(const PipelineModel& model, const std::vector<LabeledPart>& corpus,
                    const MetricsOptions& opts) {
  if (corpus.empty()) throw InputError("evaluate: empty corpus");
  std::vector<SpecimenPart> parts;
  for (const auto& p : corpus) parts.push_back({p.report_id, p.part_id, p.text, {}, {}});
  Evaluation ev;
  ev.predictions = model.predict(parts);
  std::vector<std::vector<std::string>> gold, pred;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    gold.push_back(gold_label_set(corpus[i]));
    pred.push_back(ev.predictions[i].label_set());
  }
  const auto labels = model.eval_labels();
  ev.gold = to_label_matrix(gold, labels);
  ev.pred = to_label_matrix(pred, labels);
  ev.report = compute_metrics(ev.gold, ev.pred, opts);
  return ev;
}

}  // namespace hcsbc
