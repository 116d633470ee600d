#include <doctest.h>

#include <set>

#include "hcsbc/errors.hpp"
#include "hcsbc/ontology.hpp"

using namespace hcsbc;

TEST_CASE("default ontology partitions diagnoses over non-NEG severities") {
  const Ontology& ont = Ontology::default_ontology();
  CHECK(ont.severities().size() == 7);
  std::set<std::string> seen;
  std::size_t total = 0;
  for (const auto& code : ont.branch_codes()) {
    CHECK(code != kNegativeCode);
    for (const auto& d : ont.branch_labels(code)) {
      CHECK(d.severity == code);
      CHECK(seen.insert(d.name).second);
      ++total;
    }
  }
  CHECK(total == ont.diagnoses().size());
  CHECK(ont.branch_labels(kNegativeCode).empty());
  for (const auto& d : ont.diagnoses()) CHECK(ont.severity_of(d.name) == d.severity);
}

TEST_CASE("serialize round-trips with a stable checksum") {
  const Ontology& ont = Ontology::default_ontology();
  const Ontology again = Ontology::load(ont.serialize());
  CHECK(again.checksum() == ont.checksum());
  CHECK(again.canonical() == ont.canonical());
  CHECK(Ontology::load(again.serialize()).checksum() == ont.checksum());
}

TEST_CASE("labels are canonicalized before the duplicate check") {
  CHECK(canonical_label("  Ductal   Carcinoma\tIN situ ") == "ductal carcinoma in situ");
  const std::string doc = R"({"version":"t","severities":[["IBC","x"],["NEG","n"]],
    "diagnoses":[["Tumor A","IBC"],["tumor  a","IBC"]]})";
  CHECK_THROWS_AS(Ontology::load(doc), OntologyError);
}

TEST_CASE("malformed ontologies are rejected") {
  CHECK_THROWS_AS(Ontology::load("{"), OntologyError);
  CHECK_THROWS_AS(Ontology::load(R"({"version":"t","severities":[["IBC","x"]],"diagnoses":[]})"),
                  OntologyError);
  CHECK_THROWS_AS(Ontology::load(R"({"version":"t","severities":[["IBC","x"],["NEG","n"]],
    "diagnoses":[["a","ZZZ"]]})"),
                  OntologyError);
  CHECK_THROWS_AS(Ontology::load(R"({"version":"t","severities":[["IBC","x"],["NEG","n"]],
    "diagnoses":[["a","NEG"]]})"),
                  OntologyError);
  CHECK_THROWS_AS(Ontology::default_ontology().severity("XYZ"), OntologyError);
  CHECK_THROWS_AS(Ontology::default_ontology().severity_of("no such label"), OntologyError);
}

TEST_CASE("checksum changes with content") {
  const Ontology& ont = Ontology::default_ontology();
  CHECK(ont.with_synthetic_fillers(30).checksum() != ont.checksum());
}

TEST_CASE("synthetic fillers pad round-robin and keep the partition") {
  const Ontology& ont = Ontology::default_ontology();
  const Ontology big = ont.with_synthetic_fillers(32);
  CHECK(big.diagnoses().size() == 32);
  for (const auto& d : ont.diagnoses()) CHECK(big.has_diagnosis(d.name));
  std::size_t total = 0;
  for (const auto& code : big.branch_codes()) total += big.branch_labels(code).size();
  CHECK(total == 32);
  CHECK(ont.with_synthetic_fillers(5).diagnoses().size() == ont.diagnoses().size());
}
