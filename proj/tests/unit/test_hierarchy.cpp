#include <doctest.h>

#include <set>

#include "hcsbc/errors.hpp"
#include "hcsbc/hierarchy.hpp"
#include "hcsbc/synth.hpp"
#include "support.hpp"

using namespace hcsbc;
namespace ht = hcsbc::testing;

namespace {

const std::vector<LabeledPart>& corpus() {
  static const auto c = [] {
    auto cfg = ht::small_synth_config(Ontology::default_ontology(), 21, 400);
    cfg.noise_rate = 0.3;
    cfg.co_occurrence_rate = 0.3;
    return generate_synth(cfg, Ontology::default_ontology()).parts;
  }();
  return c;
}

const HierarchicalModel& model() {
  static const HierarchicalModel m =
      train_hierarchical(corpus(), Ontology::default_ontology(), ht::quick_config());
  return m;
}

std::vector<SpecimenPart> parts_of(const std::vector<LabeledPart>& c) {
  std::vector<SpecimenPart> out;
  for (const auto& p : c) out.push_back({p.report_id, p.part_id, p.text, {}, {}});
  return out;
}

void check_routing(const Prediction& p, const Ontology& ont) {
  std::set<std::string> sev;
  for (const auto& s : p.severities) sev.insert(s.code);
  for (const auto& d : p.diagnoses) {
    CHECK(sev.count(ont.severity_of(d.label)) == 1);
    CHECK(d.severity == ont.severity_of(d.label));
  }
  if (sev.size() == 1 && sev.count(std::string(kNegativeCode))) CHECK(p.diagnoses.empty());
  CHECK(p.no_prediction == p.severities.empty());
  if (p.no_prediction) CHECK(p.diagnoses.empty());
  for (std::size_t k = 1; k < p.diagnoses.size(); ++k) {
    CHECK(ont.diagnosis_index(p.diagnoses[k - 1].label) < ont.diagnosis_index(p.diagnoses[k].label));
  }
}

}  // namespace

TEST_CASE("hierarchical predictions respect routing at several thresholds") {
  HierarchicalModel m = model();
  const auto parts = parts_of(corpus());
  for (double t : {0.1, 0.3, 0.5, 0.8}) {
    m.set_threshold(t);
    for (const auto& p : m.predict(parts)) check_routing(p, m.ontology());
  }
}

TEST_CASE("batched prediction equals the brute-force routed reference") {
  HierarchicalModel m = model();
  const auto parts = parts_of(corpus());
  for (double t : {0.2, 0.5}) {
    m.set_threshold(t);
    const auto batch = m.predict(parts);
    for (std::size_t i = 0; i < 60; ++i) {
      const auto row = prepare_text(parts[i].text, m.config().prep);
      Prediction ref = route_reference(m, row);
      ref.report_id = parts[i].report_id;
      ref.part_id = parts[i].part_id;
      CHECK(batch[i] == ref);
    }
  }
}

TEST_CASE("branches are fitted only on their own severity's rows") {
  const auto& m = model();
  const Ontology& ont = m.ontology();
  for (const auto& code : ont.branch_codes()) {
    std::size_t n = 0;
    for (const auto& p : corpus()) {
      const auto sev = gold_severities(p, ont);
      n += std::find(sev.begin(), sev.end(), code) != sev.end();
    }
    CAPTURE(code);
    CHECK(m.branch(code).n_train == n);
    if (n >= 2) CHECK(m.branch(code).backend.tfidf().n_docs() == n);
  }
  CHECK(m.stage1().n_train == corpus().size());
  CHECK(m.stage1().labels().size() == ont.severities().size());
}

TEST_CASE("gold severities") {
  const Ontology& ont = Ontology::default_ontology();
  CHECK(gold_severities({"r", "1", "x", {}}, ont) == std::vector<std::string>{"NEG"});
  CHECK(gold_severities({"r", "1", "x", {"fibroadenoma", "invasive ductal carcinoma"}}, ont) ==
        std::vector<std::string>{"IBC", "B"});
}

TEST_CASE("severities with no training rows get a constant branch") {
  const Ontology& ont = Ontology::default_ontology();
  auto cfg = ht::small_synth_config(ont, 3, 120);
  for (const auto& d : ont.branch_labels("BLL")) cfg.priors.erase(d.name);
  const auto c = generate_synth(cfg, ont).parts;
  const auto m = train_hierarchical(c, ont, ht::quick_config("forest", 3));
  const auto& bll = m.branch("BLL");
  CHECK(bll.classifier->kind() == "constant");
  REQUIRE(!bll.warnings.empty());
  CHECK(bll.warnings.front() == "BLL: empty training set");
  bool reported = false;
  for (const auto& e : m.training_report().components) {
    if (e.component == "BLL") reported = !e.warnings.empty();
  }
  CHECK(reported);
}

TEST_CASE("flat model covers every diagnosis plus NEG") {
  const Ontology& ont = Ontology::default_ontology();
  const auto f = train_flat(corpus(), ont, ht::quick_config());
  CHECK(f.model().labels().size() == ont.diagnoses().size() + 1);
  CHECK(f.model().labels().back() == "NEG");
  for (const auto& p : f.predict(parts_of(corpus()))) {
    for (const auto& d : p.diagnoses) CHECK(d.severity == ont.severity_of(d.label));
    CHECK(p.no_prediction == p.severities.empty());
  }
  CHECK(f.eval_labels().size() == ont.diagnoses().size() + 1);
}

TEST_CASE("training and threshold errors") {
  const Ontology& ont = Ontology::default_ontology();
  CHECK_THROWS_AS(train_hierarchical({corpus()[0]}, ont, ht::quick_config()), InputError);
  auto bad = std::vector<LabeledPart>(corpus().begin(), corpus().begin() + 5);
  bad[2].gold_diagnoses = {"no such thing"};
  CHECK_THROWS_AS(train_hierarchical(bad, ont, ht::quick_config()), InputError);
  HierarchicalModel m = model();
  CHECK_THROWS_AS(m.set_threshold(1.5), InputError);
  CHECK_THROWS_AS(m.branch("NEG"), InputError);
}

TEST_CASE("per-label threshold overrides") {
  HierarchicalModel m = model();
  m.set_threshold(0.5, {{"NEG", 1.0}});
  const auto& s1 = m.stage1();
  for (std::size_t l = 0; l < s1.labels().size(); ++l) {
    CHECK(s1.thresholds[l] == (s1.labels()[l] == "NEG" ? 1.0 : 0.5));
  }
}

TEST_CASE("hierarchy config json round trip") {
  HierarchyConfig cfg = ht::quick_config("logreg");
  cfg.threshold = 0.4;
  cfg.thresholds["IBC"] = 0.3;
  cfg.seed = 7;
  const auto back = HierarchyConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
  CHECK(back.threshold_for("IBC") == 0.3);
  CHECK(back.threshold_for("B") == 0.4);
  auto j = cfg.to_json();
  j["thresholds"]["IBC"] = 2.0;
  CHECK_THROWS_AS(HierarchyConfig::from_json(j), InputError);
  CHECK(parse_backend_kind("embed") == BackendKind::Embed);
  CHECK_THROWS_AS(parse_backend_kind("bert"), InputError);
}
