#include "hcsbc/segmenter.hpp"

#include <cctype>
#include <regex>

#include "hcsbc/errors.hpp"

namespace hcsbc {

namespace {

constexpr MarkerStyle kAllStyles[] = {
    MarkerStyle::LetterDot, MarkerStyle::LetterColon, MarkerStyle::LetterParen,
    MarkerStyle::NumDot,    MarkerStyle::NumColon,    MarkerStyle::NumParen,
};

bool is_letter_style(MarkerStyle s) {
  return s == MarkerStyle::LetterDot || s == MarkerStyle::LetterColon ||
         s == MarkerStyle::LetterParen;
}

char terminator(MarkerStyle s) {
  switch (s) {
    case MarkerStyle::LetterDot:
    case MarkerStyle::NumDot:
      return '.';
    case MarkerStyle::LetterColon:
    case MarkerStyle::NumColon:
      return ':';
    case MarkerStyle::LetterParen:
    case MarkerStyle::NumParen:
      return ')';
  }
  return '.';
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

enum class Position { Invalid, Weak, Strong };

// Classifies the context in front of a candidate marker starting at `i`.
// Strong: text start, line start, two or more whitespace characters, or
// whitespace after a sentence terminal. Weak: one plain space.
Position classify_position(std::string_view text, std::size_t i) {
  if (i == 0) return Position::Strong;
  if (!is_space(text[i - 1])) return Position::Invalid;
  std::size_t k = i;
  std::size_t run = 0;
  bool newline = false;
  while (k > 0 && is_space(text[k - 1])) {
    newline |= text[k - 1] == '\n' || text[k - 1] == '\r';
    --k;
    ++run;
  }
  if (k == 0 || newline || run >= 2) return Position::Strong;
  const char prev = text[k - 1];
  if (prev == '.' || prev == ';' || prev == ':' || prev == '!' || prev == '?') {
    return Position::Strong;
  }
  return Position::Weak;
}

struct Candidate {
  std::size_t begin;  // first char of the marker
  std::size_t end;    // one past the terminator
  unsigned value;     // letter ordinal (A=1) or number
  Position position;
};

std::vector<Candidate> find_candidates(std::string_view text, MarkerStyle style) {
  std::vector<Candidate> out;
  const char term = terminator(style);
  const bool letters = is_letter_style(style);
  const std::size_t n = text.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i;
    unsigned value = 0;
    if (letters) {
      if (!is_upper(text[i])) continue;
      value = unsigned(text[i] - 'A') + 1;
      j = i + 1;
    } else {
      if (!is_digit(text[i]) || (i > 0 && is_digit(text[i - 1]))) continue;
      while (j < n && is_digit(text[j])) {
        if (value < 100000) value = value * 10 + unsigned(text[j] - '0');
        ++j;
      }
    }
    if (j >= n || text[j] != term) continue;
    if (j + 1 < n && !is_space(text[j + 1])) continue;
    const Position pos = classify_position(text, i);
    if (pos == Position::Invalid) continue;
    out.push_back({i, j + 1, value, pos});
  }
  return out;
}

// Longest chain of consecutive markers (1, 2, 3... / A, B, C...) that starts
// from a strongly positioned first marker. Ties go to the earliest start.
std::vector<Candidate> best_chain(const std::vector<Candidate>& cands,
                                  MarkerStyle style) {
  std::vector<Candidate> best;
  for (std::size_t s = 0; s < cands.size(); ++s) {
    if (cands[s].value != 1 || cands[s].position != Position::Strong) continue;
    std::vector<Candidate> chain{cands[s]};
    for (std::size_t k = s + 1; k < cands.size(); ++k) {
      if (cands[k].begin < chain.back().end) continue;
      if (cands[k].value == chain.back().value + 1) chain.push_back(cands[k]);
    }
    if (chain.size() > best.size()) best = std::move(chain);
  }
  const std::size_t limit = is_letter_style(style) ? kMaxLetterParts : kMaxNumericParts;
  if (best.size() > limit) {
    throw SegmentError("segmenter: more than " + std::to_string(limit) +
                       " specimen parts");
  }
  return best;
}

std::string part_label(MarkerStyle style, unsigned value) {
  if (is_letter_style(style)) return std::string(1, char('A' + value - 1));
  return std::to_string(value);
}

Span trim_span(std::string_view text, Span s) {
  while (s.begin < s.end && is_space(text[s.begin])) ++s.begin;
  while (s.end > s.begin && is_space(text[s.end - 1])) --s.end;
  return s;
}

}  // namespace

MarkerStyleSet::MarkerStyleSet(std::initializer_list<MarkerStyle> styles) {
  for (auto s : styles) insert(s);
}

MarkerStyleSet MarkerStyleSet::all() {
  MarkerStyleSet set;
  for (auto s : kAllStyles) set.insert(s);
  return set;
}

MarkerStyleSet MarkerStyleSet::parse(std::string_view names) {
  MarkerStyleSet set;
  std::size_t start = 0;
  while (start <= names.size()) {
    std::size_t comma = names.find(',', start);
    if (comma == std::string_view::npos) comma = names.size();
    std::string_view name = names.substr(start, comma - start);
    while (!name.empty() && is_space(name.front())) name.remove_prefix(1);
    while (!name.empty() && is_space(name.back())) name.remove_suffix(1);
    if (!name.empty()) {
      bool found = name == "ALL";
      if (found) set = all();
      for (auto s : kAllStyles) {
        if (to_string(s) == name) {
          set.insert(s);
          found = true;
        }
      }
      if (!found) {
        throw InputError("unknown marker style '" + std::string(name) + "'");
      }
    }
    start = comma + 1;
  }
  if (set.empty()) throw InputError("empty marker style set");
  return set;
}

std::vector<MarkerStyle> MarkerStyleSet::styles() const {
  std::vector<MarkerStyle> out;
  for (auto s : kAllStyles) {
    if (contains(s)) out.push_back(s);
  }
  return out;
}

std::string_view to_string(MarkerStyle s) {
  switch (s) {
    case MarkerStyle::LetterDot: return "LETTER_DOT";
    case MarkerStyle::LetterColon: return "LETTER_COLON";
    case MarkerStyle::LetterParen: return "LETTER_PAREN";
    case MarkerStyle::NumDot: return "NUM_DOT";
    case MarkerStyle::NumColon: return "NUM_COLON";
    case MarkerStyle::NumParen: return "NUM_PAREN";
  }
  return "?";
}

Segmentation segment(const RawReport& report, const MarkerStyleSet& styles) {
  if (report.text.empty()) throw SegmentError("segmenter: empty report text");
  if (styles.empty()) throw SegmentError("segmenter: empty marker style set");
  const std::string_view text = report.text;

  std::optional<MarkerStyle> chosen;
  std::vector<Candidate> chosen_chain;
  std::optional<MarkerStyle> single;
  std::vector<Candidate> single_chain;
  for (auto style : styles.styles()) {
    auto chain = best_chain(find_candidates(text, style), style);
    if (chain.size() >= 2) {
      if (!chosen || chain.front().begin < chosen_chain.front().begin) {
        chosen = style;
        chosen_chain = std::move(chain);
      }
    } else if (chain.size() == 1 && trim_span(text, {0, chain[0].begin}).size() == 0) {
      // A lone marker only counts when it opens the text.
      if (!single) {
        single = style;
        single_chain = std::move(chain);
      }
    }
  }
  if (!chosen && single) {
    chosen = single;
    chosen_chain = std::move(single_chain);
  }

  Segmentation seg;
  if (!chosen) {
    Span body = trim_span(text, {0, text.size()});
    seg.preamble = {0, 0};
    seg.parts.push_back({report.id, std::string(kWholePartId),
                         std::string(text.substr(body.begin, body.size())),
                         {0, text.size()},
                         {0, 0}});
    return seg;
  }

  seg.style = chosen;
  seg.preamble = {0, chosen_chain.front().begin};
  for (std::size_t k = 0; k < chosen_chain.size(); ++k) {
    const auto& m = chosen_chain[k];
    const std::size_t body_end =
        k + 1 < chosen_chain.size() ? chosen_chain[k + 1].begin : text.size();
    Span full{m.end, body_end};
    Span body = trim_span(text, full);
    seg.parts.push_back({report.id, part_label(*chosen, m.value),
                         std::string(text.substr(body.begin, body.size())), full,
                         {m.begin, m.end}});
  }
  return seg;
}

std::vector<SpecimenPart> split_parts(const RawReport& report,
                                      const MarkerStyleSet& styles) {
  return segment(report, styles).parts;
}

SectionResult extract_final_diagnosis(const RawReport& report,
                                      const SectionOptions& opts) {
  SectionResult result;
  result.report = report;
  result.section = {0, report.text.size()};
  if (opts.heading_patterns.empty()) {
    throw InputError("extract_final_diagnosis: no heading patterns");
  }
  const std::string& text = report.text;

  // Earliest match wins; at equal offsets the longer heading wins.
  std::size_t best_pos = std::string::npos;
  std::size_t best_end = 0;
  for (const auto& pattern : opts.heading_patterns) {
    std::regex re(pattern, std::regex::ECMAScript | std::regex::icase);
    std::smatch m;
    if (!std::regex_search(text, m, re)) continue;
    const auto pos = std::size_t(m.position(0));
    const auto end = pos + std::size_t(m.length(0));
    if (pos < best_pos || (pos == best_pos && end > best_end)) {
      best_pos = pos;
      best_end = end;
    }
  }
  if (best_pos == std::string::npos) return result;
  result.heading_found = true;

  std::size_t body_begin = best_end;
  while (body_begin < text.size() &&
         (text[body_begin] == ':' || text[body_begin] == ' ' || text[body_begin] == '\t')) {
    ++body_begin;
  }
  std::size_t body_end = text.size();
  std::regex next(opts.next_heading_pattern, std::regex::ECMAScript);
  std::smatch nm;
  auto from = text.cbegin() + std::ptrdiff_t(body_begin);
  if (std::regex_search(from, text.cend(), nm, next)) {
    body_end = body_begin + std::size_t(nm.position(0));
  }
  Span body = trim_span(text, {body_begin, body_end});
  if (body.size() == 0) {
    result.empty_section = true;
    return result;
  }
  result.section = body;
  result.report.text = text.substr(body.begin, body.size());
  return result;
}

}  // namespace hcsbc
