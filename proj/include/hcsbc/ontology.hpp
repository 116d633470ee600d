#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hcsbc {

// Code of the one severity that never owns diagnoses.
inline constexpr std::string_view kNegativeCode = "NEG";

struct SeverityCategory {
  std::string code;
  std::string display_name;

  bool operator==(const SeverityCategory&) const = default;
};

struct DiagnosisLabel {
  std::string name;      // canonical lowercase form
  std::string severity;  // owning SeverityCategory code

  bool operator==(const DiagnosisLabel&) const = default;
};

// Severity/diagnosis taxonomy. Immutable after construction; every instance
// has passed validation, so routing queries only fail on unknown keys.
class Ontology {
 public:
  // Parses and validates an ontology document (JSON, see README).
  // Throws OntologyError on schema violations, duplicate labels, unknown
  // severities, or diagnoses placed under NEG.
  static Ontology load(std::string_view document);
  static Ontology load_file(const std::filesystem::path& path);
  // The ontology shipped in data/default_ontology.json.
  static const Ontology& default_ontology();

  Ontology(std::string version, std::vector<SeverityCategory> severities,
           std::vector<DiagnosisLabel> diagnoses);

  const std::string& version() const noexcept { return version_; }
  const std::vector<SeverityCategory>& severities() const noexcept {
    return severities_;
  }
  const std::vector<DiagnosisLabel>& diagnoses() const noexcept {
    return diagnoses_;
  }
  const std::string& checksum() const noexcept { return checksum_; }

  std::vector<DiagnosisLabel> branch_labels(std::string_view severity) const;
  const std::string& severity_of(std::string_view diagnosis) const;

  // Severity codes other than NEG, in ontology order.
  std::vector<std::string> branch_codes() const;

  bool has_severity(std::string_view code) const;
  bool has_diagnosis(std::string_view name) const;
  std::size_t severity_index(std::string_view code) const;
  std::size_t diagnosis_index(std::string_view name) const;
  const SeverityCategory& severity(std::string_view code) const;

  // Compact canonical JSON; the checksum is SHA-256 over these bytes.
  std::string canonical() const;
  // Human-readable document that load() reparses to the same checksum.
  std::string serialize() const;

  // Returns a copy padded with generated labels ("synthetic <code> finding
  // <k>") spread round-robin over the non-NEG severities until the
  // diagnosis count reaches `total_labels`.
  Ontology with_synthetic_fillers(std::size_t total_labels) const;

 private:
  void validate_and_index();

  std::string version_;
  std::vector<SeverityCategory> severities_;
  std::vector<DiagnosisLabel> diagnoses_;
  std::unordered_map<std::string, std::size_t> severity_pos_;
  std::unordered_map<std::string, std::size_t> diagnosis_pos_;
  std::string checksum_;
};

// Trim, lowercase, and collapse internal whitespace.
std::string canonical_label(std::string_view name);

}  // namespace hcsbc
