#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hcsbc/corpus.hpp"
#include "hcsbc/errors.hpp"

namespace hcsbc {

using nlohmann::json;

namespace {

struct CsvRecord {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

// RFC 4180 records. LF ends a record; a CR directly before it is dropped.
std::vector<CsvRecord> parse_csv(std::string_view s) {
  std::vector<CsvRecord> out;
  std::size_t i = 0, line = 1;
  while (i < s.size()) {
    CsvRecord rec;
    rec.line = line;
    std::string field;
    bool end_of_record = false;
    while (!end_of_record) {
      field.clear();
      if (i < s.size() && s[i] == '"') {
        ++i;
        for (;;) {
          if (i >= s.size()) throw CorpusError("unterminated quoted field", rec.line);
          if (s[i] == '"') {
            if (i + 1 < s.size() && s[i + 1] == '"') {
              field.push_back('"');
              i += 2;
              continue;
            }
            ++i;
            break;
          }
          if (s[i] == '\n') ++line;
          field.push_back(s[i++]);
        }
        if (i < s.size() && s[i] == '\r' && i + 1 < s.size() && s[i + 1] == '\n') ++i;
        if (i < s.size() && s[i] != ',' && s[i] != '\n') {
          throw CorpusError("unexpected character after closing quote", line);
        }
      } else {
        while (i < s.size() && s[i] != ',' && s[i] != '\n') {
          if (s[i] == '"') throw CorpusError("stray quote in unquoted field", line);
          field.push_back(s[i++]);
        }
        if (!field.empty() && field.back() == '\r' && (i >= s.size() || s[i] == '\n')) {
          field.pop_back();
        }
      }
      rec.fields.push_back(field);
      if (i >= s.size()) {
        end_of_record = true;
      } else if (s[i] == ',') {
        ++i;
      } else {
        ++i;  // '\n'
        ++line;
        end_of_record = true;
      }
    }
    // Blank lines carry no record.
    if (rec.fields.size() == 1 && rec.fields[0].empty()) continue;
    out.push_back(std::move(rec));
  }
  return out;
}

std::string csv_field(std::string_view f) {
  if (f.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(f);
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::vector<std::string> split_labels(std::string_view field) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= field.size()) {
    auto end = field.find(';', start);
    if (end == std::string_view::npos) end = field.size();
    auto lab = canonical_label(field.substr(start, end - start));
    if (!lab.empty()) out.push_back(lab);
    start = end + 1;
  }
  return out;
}

std::vector<std::string> json_labels(const json& v) {
  if (v.is_null()) return {};
  if (v.is_string()) return split_labels(v.get<std::string>());
  if (!v.is_array()) throw InputError("'labels' must be a string or an array of strings");
  std::vector<std::string> out;
  for (const auto& x : v) {
    if (!x.is_string()) throw InputError("'labels' entries must be strings");
    auto lab = canonical_label(x.get<std::string>());
    if (!lab.empty()) out.push_back(lab);
  }
  return out;
}

std::string json_id(const json& obj, const char* key, std::size_t ordinal) {
  if (!obj.contains(key) || obj[key].is_null()) return std::to_string(ordinal);
  if (obj[key].is_string()) return obj[key].get<std::string>();
  if (obj[key].is_number_integer()) return std::to_string(obj[key].get<long long>());
  throw InputError(std::string("'") + key + "' must be a string or integer");
}

std::vector<CorpusRow> parse_jsonl(std::string_view s) {
  std::vector<CorpusRow> out;
  std::size_t line = 0, start = 0, ordinal = 0;
  while (start < s.size()) {
    auto end = s.find('\n', start);
    if (end == std::string_view::npos) end = s.size();
    ++line;
    std::string_view raw = s.substr(start, end - start);
    start = end + 1;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (raw.find_first_not_of(" \t") == std::string_view::npos) continue;
    ++ordinal;
    CorpusRow row;
    row.line = line;
    try {
      const json obj = json::parse(raw);
      if (!obj.is_object()) throw InputError("record must be a JSON object");
      if (!obj.contains("text") || !obj["text"].is_string()) {
        throw InputError("record needs a string 'text' field");
      }
      LabeledPart p;
      p.report_id = json_id(obj, "report_id", ordinal);
      p.part_id = obj.contains("part_id") ? json_id(obj, "part_id", ordinal) : "1";
      p.text = obj["text"].get<std::string>();
      if (obj.contains("labels")) p.gold_diagnoses = json_labels(obj["labels"]);
      row.part = std::move(p);
    } catch (const json::exception& e) {
      row.error = std::string("malformed JSON: ") + e.what();
    } catch (const Error& e) {
      row.error = e.what();
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<CorpusRow> csv_rows(std::string_view s) {
  auto recs = parse_csv(s);
  if (recs.empty()) return {};
  const auto& header = recs[0].fields;
  int col_report = -1, col_part = -1, col_text = -1, col_labels = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    std::string h = canonical_label(header[c]);
    if (c == 0 && h.rfind("\xEF\xBB\xBF", 0) == 0) h = h.substr(3);
    if (h == "report_id") col_report = int(c);
    if (h == "part_id") col_part = int(c);
    if (h == "text") col_text = int(c);
    if (h == "labels") col_labels = int(c);
  }
  if (col_text < 0) throw CorpusError("header must contain a 'text' column", recs[0].line);
  std::vector<CorpusRow> out;
  for (std::size_t r = 1; r < recs.size(); ++r) {
    CorpusRow row;
    row.line = recs[r].line;
    const auto& f = recs[r].fields;
    if (f.size() != header.size()) {
      row.error = "expected " + std::to_string(header.size()) + " fields, found " +
                  std::to_string(f.size());
      out.push_back(std::move(row));
      continue;
    }
    LabeledPart p;
    p.report_id = col_report >= 0 ? f[std::size_t(col_report)] : std::to_string(r);
    p.part_id = col_part >= 0 ? f[std::size_t(col_part)] : "1";
    p.text = f[std::size_t(col_text)];
    if (col_labels >= 0) p.gold_diagnoses = split_labels(f[std::size_t(col_labels)]);
    row.part = std::move(p);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

CorpusFormat detect_format(std::string_view content) {
  const auto i = content.find_first_not_of(" \t\r\n");
  return i != std::string_view::npos && content[i] == '{' ? CorpusFormat::Jsonl
                                                           : CorpusFormat::Csv;
}

std::vector<CorpusRow> parse_rows(std::string_view content, CorpusFormat format) {
  return format == CorpusFormat::Jsonl ? parse_jsonl(content) : csv_rows(content);
}

std::vector<LabeledPart> parse_corpus(std::string_view content, const Ontology& ont,
                                      std::optional<CorpusFormat> format) {
  const CorpusFormat fmt = format.value_or(detect_format(content));
  if (fmt == CorpusFormat::Csv) {
    auto recs = parse_csv(content);
    if (recs.empty()) throw CorpusError("corpus is empty", 1);
    std::vector<std::string> want{"report_id", "part_id", "text", "labels"};
    auto header = recs[0].fields;
    if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0] = header[0].substr(3);
    if (header != want) {
      throw CorpusError("header must be report_id,part_id,text,labels", recs[0].line);
    }
  }
  auto rows = parse_rows(content, fmt);
  std::vector<LabeledPart> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (auto& row : rows) {
    if (!row.part) throw CorpusError("line " + std::to_string(row.line) + ": " + row.error, row.line);
    auto& p = *row.part;
    const std::string ctx = "line " + std::to_string(row.line) + " (report " + p.report_id +
                            ", part " + p.part_id + ")";
    std::vector<std::string> labels;
    for (const auto& lab : p.gold_diagnoses) {
      if (lab == "neg") continue;  // explicit NEG marker; same as an empty field
      if (!ont.has_diagnosis(lab)) {
        throw CorpusError(ctx + ": unknown label '" + lab + "'", row.line);
      }
      if (std::find(labels.begin(), labels.end(), lab) == labels.end()) labels.push_back(lab);
    }
    p.gold_diagnoses = std::move(labels);
    if (!seen.insert({p.report_id, p.part_id}).second) {
      throw CorpusError(ctx + ": duplicate (report_id, part_id)", row.line);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<LabeledPart> read_corpus(const std::filesystem::path& path, const Ontology& ont) {
  return parse_corpus(read_file(path), ont);
}

std::string format_corpus(const std::vector<LabeledPart>& parts, CorpusFormat format) {
  std::string out;
  if (format == CorpusFormat::Jsonl) {
    for (const auto& p : parts) {
      json j = {{"report_id", p.report_id},
                {"part_id", p.part_id},
                {"text", p.text},
                {"labels", p.gold_diagnoses}};
      out += j.dump();
      out += '\n';
    }
    return out;
  }
  out = "report_id,part_id,text,labels\n";
  for (const auto& p : parts) {
    std::string labels;
    for (std::size_t i = 0; i < p.gold_diagnoses.size(); ++i) {
      if (i) labels += ';';
      labels += p.gold_diagnoses[i];
    }
    out += csv_field(p.report_id) + ',' + csv_field(p.part_id) + ',' + csv_field(p.text) + ',' +
           csv_field(labels) + '\n';
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, const std::vector<LabeledPart>& parts,
                  CorpusFormat format) {
  write_file(path, format_corpus(parts, format));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw InputError("write failed: " + path.string());
}

}  // namespace hcsbc
