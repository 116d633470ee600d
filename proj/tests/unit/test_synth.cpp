#include <doctest.h>

#include <cmath>

#include "hcsbc/errors.hpp"
#include "hcsbc/synth.hpp"
#include "hcsbc/textprep.hpp"
#include "support.hpp"

using namespace hcsbc;
namespace ht = hcsbc::testing;

TEST_CASE("at zero noise every label is recoverable by keyword lookup") {
  const Ontology& ont = Ontology::default_ontology();
  auto cfg = ht::small_synth_config(ont, 5, 600);
  cfg.co_occurrence_rate = 0.3;
  const auto s = generate_synth(cfg, ont);
  const PrepConfig prep;
  std::map<std::string, std::set<std::string>> stems;
  for (const auto& [label, terms] : s.signal_terms) {
    for (const auto& t : terms) stems[label].insert(porter_stem(t));
  }
  for (const auto& p : s.parts) {
    const auto toks = tokenize(normalize(p.text, prep), prep).tokens;
    const std::set<std::string> have(toks.begin(), toks.end());
    std::vector<std::string> found;
    for (const auto& d : ont.diagnoses()) {
      for (const auto& st : stems[d.name]) {
        if (have.count(st)) {
          found.push_back(d.name);
          break;
        }
      }
    }
    std::vector<std::string> gold = p.gold_diagnoses;
    std::sort(gold.begin(), gold.end());
    std::sort(found.begin(), found.end());
    CAPTURE(p.text);
    CHECK(found == gold);
  }
}

TEST_CASE("label marginals stay within three sigma of the analytic rate") {
  const Ontology& ont = Ontology::default_ontology();
  auto cfg = ht::small_synth_config(ont, 9, 8000);
  cfg.priors = priors_from_profile(ont, clinical_severity_profile());
  const auto s = generate_synth(cfg, ont);
  const auto expected = expected_marginals(cfg);
  std::map<std::string, double> count;
  std::size_t neg = 0;
  for (const auto& p : s.parts) {
    neg += p.gold_diagnoses.empty();
    for (const auto& d : p.gold_diagnoses) count[d] += 1;
  }
  const double n = double(s.parts.size());
  for (const auto& [label, q] : expected) {
    const double sigma = std::sqrt(q * (1 - q) / n);
    CAPTURE(label);
    CHECK(std::abs(count[label] / n - q) <= 3 * sigma + 1e-12);
  }
  const double sigma = std::sqrt(0.2 * 0.8 / n);
  CHECK(std::abs(neg / n - 0.2) <= 3 * sigma);
}

TEST_CASE("generation is seed-deterministic") {
  const Ontology& ont = Ontology::default_ontology();
  const auto cfg = ht::small_synth_config(ont, 4, 50);
  CHECK(generate_synth(cfg, ont).parts == generate_synth(cfg, ont).parts);
  auto other = cfg;
  other.seed = 5;
  CHECK(generate_synth(other, ont).parts != generate_synth(cfg, ont).parts);
}

TEST_CASE("report grouping and composed reports") {
  const Ontology& ont = Ontology::default_ontology();
  const auto s = generate_synth(ht::small_synth_config(ont, 2, 40), ont);
  std::map<std::string, std::vector<LabeledPart>> reports;
  for (const auto& p : s.parts) reports[p.report_id].push_back(p);
  for (const auto& [id, parts] : reports) {
    CHECK(parts.size() <= 3);
    const auto text = compose_report(parts);
    const auto sec = extract_final_diagnosis({id, text, std::nullopt});
    const auto split = split_parts(sec.report, MarkerStyleSet::all());
    REQUIRE(split.size() == parts.size());
    for (std::size_t k = 0; k < parts.size(); ++k) CHECK(split[k].text == parts[k].text);
  }
}

TEST_CASE("clinical profile priors") {
  const Ontology& ont = Ontology::default_ontology();
  const auto pr = priors_from_profile(ont, clinical_severity_profile());
  double mx = 0;
  for (const auto& [l, v] : pr) {
    CHECK(v > 0.0);
    mx = std::max(mx, v);
  }
  CHECK(mx == 1.0);
  CHECK(pr.size() == ont.diagnoses().size());
}

TEST_CASE("synth config validation") {
  const Ontology& ont = Ontology::default_ontology();
  SynthConfig cfg;
  CHECK_THROWS_AS(cfg.validate(ont), InputError);
  cfg = ht::small_synth_config(ont, 1, 10);
  cfg.neg_rate = 1.5;
  CHECK_THROWS_AS(cfg.validate(ont), InputError);
  cfg = ht::small_synth_config(ont, 1, 10);
  cfg.priors["not a label"] = 1.0;
  CHECK_THROWS_AS(cfg.validate(ont), InputError);
  cfg = ht::small_synth_config(ont, 1, 10);
  const auto back = SynthConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
}
