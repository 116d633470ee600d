#include <doctest.h>

#include <json.hpp>

#include "hcsbc/forest.hpp"
#include "hcsbc/hierarchy.hpp"
#include "hcsbc/logreg.hpp"

using namespace hcsbc;
using nlohmann::json;

namespace {

// Three-token feature space with unit idf and no normalization, so the
// feature vector of a text is its raw token counts.
FeatureBackend three_token_backend() {
  json j = {{"kind", "tfidf"},
            {"mask", {{"unknown_token", "unknown_word"}, {"retained", {"alpha", "beta", "gamma"}}}},
            {"tfidf",
             {{"vocabulary", {"alpha", "beta", "gamma"}},
              {"idf", {1.0, 1.0, 1.0}},
              {"n_docs", 3},
              {"sublinear_tf", false},
              {"smooth_idf", true},
              {"norm", "none"},
              {"max_features", 0}}}};
  return FeatureBackend::from_json(j);
}

FlatModel flat_with(std::shared_ptr<const Classifier> clf) {
  const Ontology& ont = Ontology::default_ontology();
  std::map<std::string, std::string> table;
  for (const auto& d : ont.diagnoses()) table[d.name] = d.severity;
  table["NEG"] = "NEG";
  Component c;
  c.name = "model";
  c.backend = three_token_backend();
  c.thresholds.assign(clf->n_labels(), 0.5);
  c.classifier = std::move(clf);
  HierarchyConfig cfg;
  cfg.prep.min_token_count = 1;
  return FlatModel(ont, cfg, c, table);
}

std::vector<std::string> flat_labels() {
  std::vector<std::string> names;
  for (const auto& d : Ontology::default_ontology().diagnoses()) names.push_back(d.name);
  names.push_back("NEG");
  return names;
}

}  // namespace

TEST_CASE("linear importance is the per-token product of weight and feature") {
  const auto names = flat_labels();
  std::vector<LogRegModel::Head> heads(names.size());
  for (auto& h : heads) {
    h.constant = true;
    h.prior = 0.0;
  }
  const std::size_t target = Ontology::default_ontology().diagnosis_index("fibroadenoma");
  heads[target] = {{0.5, -1.0, 2.0}, 0.0, false, 0.5};
  const auto m = flat_with(std::make_shared<LogRegModel>(names, 3, heads, LogRegConfig{}));

  const SpecimenPart part{"r", "A", "Alpha beta beta gamma", {}, {}};
  const auto pred = m.predict(part);
  REQUIRE(pred.diagnoses.size() == 1);
  CHECK(pred.diagnoses[0].label == "fibroadenoma");
  // z = 0.5*1 - 1*2 + 2*1 = 0.5
  CHECK(std::abs(pred.diagnoses[0].probability - 1.0 / (1.0 + std::exp(-0.5))) < 1e-12);

  const auto imp = word_importance(m, part, pred);
  REQUIRE(imp.size() == 3);
  CHECK(imp[0].token == "beta");
  CHECK(imp[0].score == -2.0);
  CHECK(imp[1].token == "gamma");
  CHECK(imp[1].score == 2.0);
  CHECK(imp[2].token == "alpha");
  CHECK(imp[2].score == 0.5);
  CHECK(imp[2].surface == "alpha");
}

TEST_CASE("forest importance is the occlusion drop") {
  const auto names = flat_labels();
  const std::size_t target = Ontology::default_ontology().diagnosis_index("fibroadenoma");
  std::vector<std::vector<DecisionTree>> forests(names.size());
  for (std::size_t l = 0; l < names.size(); ++l) {
    DecisionTree t;
    if (l == target) {
      t.nodes = {{2, 0.5, 1, 2, 0.5}, {-1, 0, 0, 0, 0.0}, {-1, 0, 0, 0, 1.0}};
    } else {
      t.nodes = {{-1, 0, 0, 0, 0.0}};
    }
    forests[l] = {t};
  }
  ForestConfig cfg;
  cfg.n_trees = 1;
  const auto m = flat_with(std::make_shared<ForestModel>(names, 3, forests, cfg));
  const SpecimenPart part{"r", "A", "alpha gamma", {}, {}};
  const auto pred = m.predict(part);
  REQUIRE(pred.diagnoses.size() == 1);
  const auto imp = word_importance(m, part, pred);
  REQUIRE(imp.size() == 1);
  CHECK(imp[0].token == "gamma");
  CHECK(imp[0].score == 1.0);
}

TEST_CASE("no predicted labels means no importances") {
  const auto names = flat_labels();
  std::vector<LogRegModel::Head> heads(names.size());
  for (auto& h : heads) {
    h.constant = true;
    h.prior = 0.0;
  }
  const auto m = flat_with(std::make_shared<LogRegModel>(names, 3, heads, LogRegConfig{}));
  const SpecimenPart part{"r", "A", "alpha beta", {}, {}};
  const auto pred = m.predict(part);
  CHECK(pred.no_prediction);
  CHECK(word_importance(m, part, pred).empty());
}
