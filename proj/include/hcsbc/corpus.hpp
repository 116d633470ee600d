#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hcsbc/ontology.hpp"

namespace hcsbc {

struct LabeledPart {
  std::string report_id;
  std::string part_id;
  std::string text;
  std::vector<std::string> gold_diagnoses;  // empty means NEG

  bool operator==(const LabeledPart&) const = default;
};

enum class CorpusFormat { Csv, Jsonl };

// Jsonl when the first non-blank byte is '{', otherwise CSV.
CorpusFormat detect_format(std::string_view content);

// One parsed record of a corpus or batch body. `error` is set instead of
// `part` when the record itself is unusable.
struct CorpusRow {
  std::size_t line = 0;  // 1-based line where the record starts
  std::optional<LabeledPart> part;
  std::string error;
};

// Lenient record parser used by the batch endpoint: only `text` is required;
// missing ids default to the record ordinal and labels are not validated.
// Throws CorpusError only when the header itself is unusable.
std::vector<CorpusRow> parse_rows(std::string_view content, CorpusFormat format);

// Strict parser: every record must parse, labels must exist in `ont`, and
// (report_id, part_id) pairs must be unique. Throws CorpusError with line.
std::vector<LabeledPart> parse_corpus(std::string_view content, const Ontology& ont,
                                      std::optional<CorpusFormat> format = std::nullopt);
std::vector<LabeledPart> read_corpus(const std::filesystem::path& path, const Ontology& ont);

std::string format_corpus(const std::vector<LabeledPart>& parts,
                          CorpusFormat format = CorpusFormat::Csv);
void write_corpus(const std::filesystem::path& path, const std::vector<LabeledPart>& parts,
                  CorpusFormat format = CorpusFormat::Csv);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace hcsbc
