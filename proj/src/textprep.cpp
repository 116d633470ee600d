#include "hcsbc/textprep.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include "hcsbc/embedded_data.hpp"
#include "hcsbc/errors.hpp"

namespace hcsbc {

using nlohmann::json;

namespace {

constexpr const char* kOnes[] = {
    "zero",    "one",     "two",       "three",    "four",
    "five",    "six",     "seven",     "eight",    "nine",
    "ten",     "eleven",  "twelve",    "thirteen", "fourteen",
    "fifteen", "sixteen", "seventeen", "eighteen", "nineteen"};
constexpr const char* kTens[] = {"",      "",      "twenty",  "thirty", "forty",
                                 "fifty", "sixty", "seventy", "eighty", "ninety"};

constexpr std::string_view kClockSuffix = " o' clock";

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         static_cast<unsigned char>(c) >= 0x80;
}
bool is_alnum(char c) { return is_alpha(c) || is_digit(c); }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string words_below_10000(unsigned n) {
  std::string out;
  auto append = [&out](std::string_view w) {
    if (!out.empty()) out.push_back(' ');
    out.append(w);
  };
  if (n >= 1000) {
    append(kOnes[n / 1000]);
    append("thousand");
    n %= 1000;
    if (n == 0) return out;
  }
  if (n >= 100) {
    append(kOnes[n / 100]);
    append("hundred");
    n %= 100;
    if (n == 0) return out;
  }
  if (n >= 20) {
    append(kTens[n / 10]);
    if (n % 10) append(kOnes[n % 10]);
    return out;
  }
  if (n > 0 || out.empty()) append(kOnes[n]);
  return out;
}

std::string spell_digits(std::string_view digits) {
  std::string out;
  for (char c : digits) {
    if (!out.empty()) out.push_back(' ');
    out.append(kOnes[c - '0']);
  }
  return out;
}

std::string rewrite_clock(const std::string& text) {
  static const std::regex kColon(R"(\b(0?[1-9]|1[0-2]):00\b)");
  static const std::regex kOclock(R"(\b(0?[1-9]|1[0-2])\s*o'?\s*clock\b)",
                                  std::regex::ECMAScript | std::regex::icase);
  auto rewrite = [](const std::string& in, const std::regex& re) {
    std::string out;
    auto it = std::sregex_iterator(in.begin(), in.end(), re);
    std::size_t last = 0;
    for (; it != std::sregex_iterator(); ++it) {
      const auto& m = *it;
      out.append(in, last, std::size_t(m.position(0)) - last);
      out.append(std::to_string(std::stoi(m[1].str())));
      out.append(kClockSuffix);
      last = std::size_t(m.position(0) + m.length(0));
    }
    out.append(in, last, std::string::npos);
    return out;
  };
  return rewrite(rewrite(text, kColon), kOclock);
}

bool is_clock_hour(std::string_view digits) {
  if (digits.empty() || digits.size() > 2 || digits[0] == '0') return false;
  const int h = std::stoi(std::string(digits));
  return h >= 1 && h <= 12;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending = false;
  for (char c : s) {
    if (is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

// Splits on anything that is not a letter, digit, underscore, or non-ASCII
// byte. Returns [begin, end) offsets of each raw token.
std::vector<std::pair<std::size_t, std::size_t>> raw_tokens(std::string_view text) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && !(is_alnum(text[i]) || text[i] == '_')) ++i;
    std::size_t j = i;
    while (j < n && (is_alnum(text[j]) || text[j] == '_')) ++j;
    if (j > i) out.emplace_back(i, j);
    i = j;
  }
  return out;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return c < 0x80 ? char(std::tolower(c)) : char(c);
  });
  return out;
}

}  // namespace

const std::set<std::string>& PrepConfig::default_stopwords() {
  static const std::set<std::string> kWords = [] {
    std::set<std::string> words;
    std::string_view data = embedded::stopwords_en();
    std::size_t start = 0;
    while (start < data.size()) {
      std::size_t nl = data.find('\n', start);
      if (nl == std::string_view::npos) nl = data.size();
      std::string w(data.substr(start, nl - start));
      while (!w.empty() && is_space(w.back())) w.pop_back();
      if (!w.empty()) words.insert(std::move(w));
      start = nl + 1;
    }
    return words;
  }();
  return kWords;
}

PrepConfig PrepConfig::baseline() {
  PrepConfig cfg;
  cfg.lowercase = true;
  cfg.remove_stopwords = false;
  cfg.verbalize_numbers = false;
  cfg.normalize_clock = false;
  cfg.stem = false;
  cfg.min_token_count = 1;
  return cfg;
}

void PrepConfig::validate() const {
  if (min_token_count < 1) throw InputError("prep: min_token_count must be >= 1");
  if (unknown_token.empty()) throw InputError("prep: unknown_token must be non-empty");
}

json PrepConfig::to_json() const {
  return {{"lowercase", lowercase},
          {"remove_stopwords", remove_stopwords},
          {"stopwords", std::vector<std::string>(stopwords.begin(), stopwords.end())},
          {"min_token_count", min_token_count},
          {"unknown_token", unknown_token},
          {"verbalize_numbers", verbalize_numbers},
          {"normalize_clock", normalize_clock},
          {"stem", stem}};
}

PrepConfig PrepConfig::from_json(const json& j) {
  PrepConfig cfg;
  cfg.lowercase = j.value("lowercase", cfg.lowercase);
  cfg.remove_stopwords = j.value("remove_stopwords", cfg.remove_stopwords);
  if (j.contains("stopwords")) {
    auto words = j.at("stopwords").get<std::vector<std::string>>();
    cfg.stopwords = std::set<std::string>(words.begin(), words.end());
  }
  cfg.min_token_count = j.value("min_token_count", cfg.min_token_count);
  cfg.unknown_token = j.value("unknown_token", cfg.unknown_token);
  cfg.verbalize_numbers = j.value("verbalize_numbers", cfg.verbalize_numbers);
  cfg.normalize_clock = j.value("normalize_clock", cfg.normalize_clock);
  cfg.stem = j.value("stem", cfg.stem);
  cfg.validate();
  return cfg;
}

std::string number_words(std::string_view digits) {
  if (digits.empty()) return {};
  if (digits.size() > 4) return spell_digits(digits);
  return words_below_10000(unsigned(std::stoul(std::string(digits))));
}

std::string normalize(std::string_view text, const PrepConfig& cfg) {
  std::string s(text);
  if (cfg.normalize_clock) s = rewrite_clock(s);

  std::string out;
  out.reserve(s.size() * 2);
  const std::size_t n = s.size();
  std::size_t i = 0;
  while (i < n) {
    const char c = s[i];
    if (is_alpha(c)) {
      // Letter-led words keep embedded digits (accession ids such as
      // "s18-2431" or "b7"); a '-' or '/' is absorbed when more word follows.
      std::size_t j = i + 1;
      while (j < n) {
        if (is_alnum(s[j]) || s[j] == '_' || s[j] == '#') {
          ++j;
        } else if ((s[j] == '-' || s[j] == '/') && j + 1 < n && is_alnum(s[j + 1])) {
          j += 2;
        } else {
          break;
        }
      }
      out.append(s, i, j - i);
      i = j;
      continue;
    }
    if (!cfg.verbalize_numbers) {
      out.push_back(c);
      ++i;
      continue;
    }
    if (is_digit(c)) {
      std::size_t j = i;
      while (j < n && is_digit(s[j])) ++j;
      std::string_view run(s.data() + i, j - i);
      if (cfg.normalize_clock && is_clock_hour(run) &&
          std::string_view(s).substr(j, kClockSuffix.size()) == kClockSuffix) {
        out.append(run);
        i = j;
        continue;
      }
      out.push_back(' ');
      out.append(number_words(run));
      if (j + 1 < n && s[j] == '.' && is_digit(s[j + 1])) {
        std::size_t k = j + 1;
        while (k < n && is_digit(s[k])) ++k;
        out.append(" point ");
        out.append(spell_digits(std::string_view(s.data() + j + 1, k - j - 1)));
        j = k;
      }
      out.push_back(' ');
      i = j;
      continue;
    }
    switch (c) {
      case '%': out.append(" percentage "); break;
      case '+': out.append(" plus "); break;
      case '<': out.append(" less than "); break;
      case '>': out.append(" greater than "); break;
      case '=': out.append(" equals "); break;
      case '-':
        // Only a sign in front of a number; dashes used as punctuation and
        // hyphens inside words are left alone. A digit in front still makes a
        // sign, since the digit is verbalized into a word plus a space.
        if (i + 1 < n && is_digit(s[i + 1]) && (i == 0 || !is_alpha(s[i - 1]))) {
          out.append(" minus ");
        } else {
          out.push_back(c);
        }
        break;
      default:
        out.push_back(c);
    }
    ++i;
  }
  return collapse_whitespace(out);
}

std::vector<SurfaceToken> tokenize_with_surface(std::string_view text,
                                                const PrepConfig& cfg) {
  std::vector<SurfaceToken> out;
  for (auto [b, e] : raw_tokens(text)) {
    std::string surface = to_lower(text.substr(b, e - b));
    std::string tok = cfg.lowercase ? surface : std::string(text.substr(b, e - b));
    if (cfg.remove_stopwords && cfg.stopwords.contains(surface)) continue;
    if (cfg.stem) tok = porter_stem(tok);
    if (tok.empty()) continue;
    out.push_back({std::move(tok), std::move(surface)});
  }
  return out;
}

TokenStream tokenize(std::string_view text, const PrepConfig& cfg) {
  TokenStream ts;
  for (auto& t : tokenize_with_surface(text, cfg)) ts.tokens.push_back(std::move(t.token));
  return ts;
}

VocabMask::VocabMask(std::vector<std::string> retained, std::string unknown_token)
    : retained_(std::move(retained)), unknown_(std::move(unknown_token)) {
  std::sort(retained_.begin(), retained_.end());
  retained_.erase(std::unique(retained_.begin(), retained_.end()), retained_.end());
}

bool VocabMask::retains(std::string_view token) const {
  return std::binary_search(retained_.begin(), retained_.end(), token);
}

std::string_view VocabMask::map(std::string_view token) const {
  return retains(token) ? token : std::string_view(unknown_);
}

TokenStream VocabMask::apply(const TokenStream& stream) const {
  TokenStream out;
  out.report_id = stream.report_id;
  out.part_id = stream.part_id;
  out.tokens.reserve(stream.tokens.size());
  for (const auto& t : stream.tokens) out.tokens.emplace_back(map(t));
  return out;
}

json VocabMask::to_json() const {
  return {{"unknown_token", unknown_}, {"retained", retained_}};
}

VocabMask VocabMask::from_json(const json& j) {
  return VocabMask(j.at("retained").get<std::vector<std::string>>(),
                   j.at("unknown_token").get<std::string>());
}

VocabMask fit_vocab_mask(const std::vector<TokenStream>& corpus, const PrepConfig& cfg) {
  cfg.validate();
  if (corpus.empty()) throw InputError("fit_vocab_mask: empty corpus");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& ts : corpus) {
    for (const auto& t : ts.tokens) ++counts[t];
  }
  std::vector<std::string> retained;
  for (const auto& [tok, n] : counts) {
    if (n >= cfg.min_token_count) retained.push_back(tok);
  }
  return VocabMask(std::move(retained), cfg.unknown_token);
}

}  // namespace hcsbc
