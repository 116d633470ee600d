#include "hcsbc/ontology.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "hcsbc/embedded_data.hpp"
#include "hcsbc/errors.hpp"
#include "hcsbc/hash.hpp"

namespace hcsbc {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  return out;
}

// Accepts either ["a", "b"] or {"<k1>": "a", "<k2>": "b"}.
std::pair<std::string, std::string> read_pair(const json& entry,
                                              const char* k1, const char* k2,
                                              const char* section) {
  if (entry.is_array()) {
    if (entry.size() != 2 || !entry[0].is_string() || !entry[1].is_string()) {
      throw OntologyError(std::string("ontology: each ") + section +
                          " entry must be a [string, string] pair");
    }
    return {entry[0].get<std::string>(), entry[1].get<std::string>()};
  }
  if (entry.is_object()) {
    auto a = entry.find(k1);
    auto b = entry.find(k2);
    if (a == entry.end() || b == entry.end() || !a->is_string() ||
        !b->is_string()) {
      throw OntologyError(std::string("ontology: ") + section +
                          " entry needs string fields '" + k1 + "' and '" +
                          k2 + "'");
    }
    return {a->get<std::string>(), b->get<std::string>()};
  }
  throw OntologyError(std::string("ontology: malformed ") + section + " entry");
}

}  // namespace

std::string canonical_label(std::string_view name) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : name) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(char(std::tolower(c)));
  }
  return out;
}

Ontology::Ontology(std::string version, std::vector<SeverityCategory> severities,
                   std::vector<DiagnosisLabel> diagnoses)
    : version_(std::move(version)),
      severities_(std::move(severities)),
      diagnoses_(std::move(diagnoses)) {
  validate_and_index();
}

void Ontology::validate_and_index() {
  if (version_.empty()) throw OntologyError("ontology: empty version");
  if (severities_.empty()) throw OntologyError("ontology: no severities");

  for (std::size_t i = 0; i < severities_.size(); ++i) {
    const auto& s = severities_[i];
    if (s.code.empty()) throw OntologyError("ontology: empty severity code");
    if (!severity_pos_.emplace(s.code, i).second) {
      throw OntologyError("ontology: duplicate severity code '" + s.code + "'");
    }
  }
  if (!severity_pos_.contains(std::string(kNegativeCode))) {
    throw OntologyError("ontology: severity list must contain NEG");
  }

  std::unordered_set<std::string> lowered_codes;
  for (const auto& s : severities_) lowered_codes.insert(lower(s.code));

  for (std::size_t i = 0; i < diagnoses_.size(); ++i) {
    auto& d = diagnoses_[i];
    d.name = canonical_label(d.name);
    if (d.name.empty()) throw OntologyError("ontology: empty diagnosis name");
    if (lowered_codes.contains(d.name)) {
      throw OntologyError("ontology: diagnosis '" + d.name +
                          "' collides with a severity code");
    }
    if (!severity_pos_.contains(d.severity)) {
      throw OntologyError("ontology: diagnosis '" + d.name +
                          "' references unknown severity '" + d.severity + "'");
    }
    if (d.severity == kNegativeCode) {
      throw OntologyError("ontology: diagnosis '" + d.name +
                          "' mapped under NEG; Negative has no diagnoses");
    }
    if (!diagnosis_pos_.emplace(d.name, i).second) {
      throw OntologyError("ontology: duplicate diagnosis label '" + d.name + "'");
    }
  }
  checksum_ = sha256_hex(canonical());
}

Ontology Ontology::load(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw OntologyError(std::string("ontology: parse error: ") + e.what());
  }
  if (!doc.is_object()) throw OntologyError("ontology: document must be an object");
  for (const char* key : {"version", "severities", "diagnoses"}) {
    if (!doc.contains(key)) {
      throw OntologyError(std::string("ontology: missing field '") + key + "'");
    }
  }
  if (!doc["version"].is_string()) {
    throw OntologyError("ontology: 'version' must be a string");
  }
  if (!doc["severities"].is_array() || !doc["diagnoses"].is_array()) {
    throw OntologyError("ontology: 'severities' and 'diagnoses' must be arrays");
  }

  std::vector<SeverityCategory> sev;
  for (const auto& e : doc["severities"]) {
    auto [code, name] = read_pair(e, "code", "display_name", "severities");
    sev.push_back({std::move(code), std::move(name)});
  }
  std::vector<DiagnosisLabel> diag;
  for (const auto& e : doc["diagnoses"]) {
    auto [name, code] = read_pair(e, "name", "severity", "diagnoses");
    diag.push_back({std::move(name), std::move(code)});
  }
  return Ontology(doc["version"].get<std::string>(), std::move(sev),
                  std::move(diag));
}

Ontology Ontology::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw OntologyError("ontology: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return load(ss.str());
}

const Ontology& Ontology::default_ontology() {
  static const Ontology kDefault = load(embedded::default_ontology_json());
  return kDefault;
}

std::vector<DiagnosisLabel> Ontology::branch_labels(std::string_view severity) const {
  if (!has_severity(severity)) {
    throw OntologyError("ontology: unknown severity code '" +
                        std::string(severity) + "'");
  }
  std::vector<DiagnosisLabel> out;
  for (const auto& d : diagnoses_) {
    if (d.severity == severity) out.push_back(d);
  }
  return out;
}

const std::string& Ontology::severity_of(std::string_view diagnosis) const {
  auto it = diagnosis_pos_.find(std::string(diagnosis));
  if (it == diagnosis_pos_.end()) {
    throw OntologyError("ontology: unknown diagnosis '" + std::string(diagnosis) +
                        "'");
  }
  return diagnoses_[it->second].severity;
}

std::vector<std::string> Ontology::branch_codes() const {
  std::vector<std::string> out;
  for (const auto& s : severities_) {
    if (s.code != kNegativeCode) out.push_back(s.code);
  }
  return out;
}

bool Ontology::has_severity(std::string_view code) const {
  return severity_pos_.contains(std::string(code));
}

bool Ontology::has_diagnosis(std::string_view name) const {
  return diagnosis_pos_.contains(std::string(name));
}

std::size_t Ontology::severity_index(std::string_view code) const {
  auto it = severity_pos_.find(std::string(code));
  if (it == severity_pos_.end()) {
    throw OntologyError("ontology: unknown severity code '" + std::string(code) +
                        "'");
  }
  return it->second;
}

std::size_t Ontology::diagnosis_index(std::string_view name) const {
  auto it = diagnosis_pos_.find(std::string(name));
  if (it == diagnosis_pos_.end()) {
    throw OntologyError("ontology: unknown diagnosis '" + std::string(name) + "'");
  }
  return it->second;
}

const SeverityCategory& Ontology::severity(std::string_view code) const {
  return severities_[severity_index(code)];
}

std::string Ontology::canonical() const {
  json doc;
  doc["version"] = version_;
  doc["severities"] = json::array();
  for (const auto& s : severities_) doc["severities"].push_back({s.code, s.display_name});
  doc["diagnoses"] = json::array();
  for (const auto& d : diagnoses_) doc["diagnoses"].push_back({d.name, d.severity});
  return doc.dump();
}

std::string Ontology::serialize() const {
  // One entry per line keeps diffs of edited ontologies readable.
  std::ostringstream out;
  out << "{\n  \"version\": " << json(version_).dump() << ",\n  \"severities\": [\n";
  for (std::size_t i = 0; i < severities_.size(); ++i) {
    out << "    " << json::array({severities_[i].code, severities_[i].display_name}).dump()
        << (i + 1 < severities_.size() ? ",\n" : "\n");
  }
  out << "  ],\n  \"diagnoses\": [\n";
  for (std::size_t i = 0; i < diagnoses_.size(); ++i) {
    out << "    " << json::array({diagnoses_[i].name, diagnoses_[i].severity}).dump()
        << (i + 1 < diagnoses_.size() ? ",\n" : "\n");
  }
  out << "  ]\n}\n";
  return out.str();
}

Ontology Ontology::with_synthetic_fillers(std::size_t total_labels) const {
  auto diag = diagnoses_;
  const auto codes = branch_codes();
  std::vector<std::size_t> next(codes.size(), 1);
  std::size_t round = 0;
  while (diag.size() < total_labels) {
    const std::size_t c = round++ % codes.size();
    std::string name;
    do {
      name = "synthetic " + lower(codes[c]) + " finding " + std::to_string(next[c]++);
    } while (diagnosis_pos_.contains(name));
    diag.push_back({std::move(name), codes[c]});
  }
  return Ontology(version_ + "+synthetic" + std::to_string(total_labels), severities_,
                  std::move(diag));
}

}  // namespace hcsbc
