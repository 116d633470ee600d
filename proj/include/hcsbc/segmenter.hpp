#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hcsbc {

struct RawReport {
  std::string id;
  std::string text;
  std::optional<std::string> source_tag;
};

// Half-open byte range [begin, end) into the source text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool operator==(const Span&) const = default;
};

// Part id used when no marker sequence is found.
inline constexpr std::string_view kWholePartId = "WHOLE";

struct SpecimenPart {
  std::string report_id;
  std::string part_id;  // "A", "1", ... or "WHOLE"
  std::string text;     // body with surrounding whitespace trimmed
  Span span;            // full body region, up to the next marker
  Span marker_span;     // the consumed marker ("B.", "2)"); empty for WHOLE
};

enum class MarkerStyle {
  LetterDot,
  LetterColon,
  LetterParen,
  NumDot,
  NumColon,
  NumParen,
};

// Non-empty subset of marker styles.
class MarkerStyleSet {
 public:
  MarkerStyleSet() = default;
  MarkerStyleSet(std::initializer_list<MarkerStyle> styles);
  static MarkerStyleSet all();
  // Comma-separated names, e.g. "LETTER_DOT,NUM_PAREN". Throws InputError.
  static MarkerStyleSet parse(std::string_view names);

  void insert(MarkerStyle s) { bits_ |= 1u << unsigned(s); }
  bool contains(MarkerStyle s) const { return bits_ & (1u << unsigned(s)); }
  bool empty() const { return bits_ == 0; }
  std::vector<MarkerStyle> styles() const;

 private:
  unsigned bits_ = 0;
};

std::string_view to_string(MarkerStyle s);

struct Segmentation {
  Span preamble;  // text before the first marker (specimen header lines etc.)
  std::optional<MarkerStyle> style;
  std::vector<SpecimenPart> parts;
};

inline constexpr std::size_t kMaxLetterParts = 26;
inline constexpr std::size_t kMaxNumericParts = 99;

// Splits a final-diagnosis section into specimen parts. Throws SegmentError
// on empty text, an empty style set, or numeric sequences beyond 99 parts.
Segmentation segment(const RawReport& report, const MarkerStyleSet& styles);
std::vector<SpecimenPart> split_parts(const RawReport& report,
                                      const MarkerStyleSet& styles);

struct SectionOptions {
  std::vector<std::string> heading_patterns = {
      "final diagnosis", "final pathologic diagnosis", "diagnosis:"};
  // A following heading: an all-caps label ending in ':' at line start.
  std::string next_heading_pattern = R"(\n[ \t]*[A-Z][A-Z /&-]{2,}:)";
};

struct SectionResult {
  RawReport report;  // section text, or the input unchanged
  bool heading_found = false;
  bool empty_section = false;
  Span section;  // range of the returned text in the input
};

SectionResult extract_final_diagnosis(const RawReport& report,
                                      const SectionOptions& opts = {});

}  // namespace hcsbc
