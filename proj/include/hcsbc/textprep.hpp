#pragma once

#include <cstddef>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace hcsbc {

struct PrepConfig {
  bool lowercase = true;
  bool remove_stopwords = true;
  std::set<std::string> stopwords = default_stopwords();
  std::size_t min_token_count = 5;
  std::string unknown_token = "unknown_word";
  bool verbalize_numbers = true;
  bool normalize_clock = true;
  bool stem = true;

  // Settings for classical feature backends (the defaults above).
  static PrepConfig classical() { return {}; }
  // Pure whitespace/punctuation splitting: no stopwords, stemming, or
  // verbalization. Used when text is forwarded to an embedding provider.
  static PrepConfig baseline();
  static const std::set<std::string>& default_stopwords();

  // Throws InputError when min_token_count < 1 or unknown_token is empty.
  void validate() const;

  nlohmann::json to_json() const;
  static PrepConfig from_json(const nlohmann::json& j);

  bool operator==(const PrepConfig&) const = default;
};

struct TokenStream {
  std::vector<std::string> tokens;
  std::string report_id;
  std::string part_id;
};

// Porter suffix-stripping stemmer over lowercase ASCII words; other input is
// returned unchanged.
std::string porter_stem(std::string_view word);

// English number words for 0..9999 ("thirty four"); longer digit strings
// are spelled digit by digit.
std::string number_words(std::string_view digits);

// Domain normalization: number and math-symbol verbalization, clock
// references rewritten to "<1-12> o' clock", whitespace collapsed.
// Idempotent.
std::string normalize(std::string_view text, const PrepConfig& cfg);

// Splits normalized text into tokens, then lowercases, drops stopwords, and
// stems according to cfg.
TokenStream tokenize(std::string_view text, const PrepConfig& cfg);

// Token-level view of tokenize() that also keeps the lowercase surface word
// each token came from (for importance display).
struct SurfaceToken {
  std::string token;
  std::string surface;
};
std::vector<SurfaceToken> tokenize_with_surface(std::string_view text,
                                                const PrepConfig& cfg);

// Tokens with corpus frequency >= min_token_count. Anything else, including
// tokens never seen at fit time, maps to the unknown token.
class VocabMask {
 public:
  VocabMask() = default;
  VocabMask(std::vector<std::string> retained, std::string unknown_token);

  const std::vector<std::string>& retained() const noexcept { return retained_; }
  const std::string& unknown_token() const noexcept { return unknown_; }
  bool retains(std::string_view token) const;

  TokenStream apply(const TokenStream& stream) const;
  std::string_view map(std::string_view token) const;

  nlohmann::json to_json() const;
  static VocabMask from_json(const nlohmann::json& j);

  bool operator==(const VocabMask& o) const {
    return retained_ == o.retained_ && unknown_ == o.unknown_;
  }

 private:
  std::vector<std::string> retained_;  // sorted
  std::string unknown_;
};

// Frequencies are counted over the whole corpus. Throws InputError on an
// empty corpus.
VocabMask fit_vocab_mask(const std::vector<TokenStream>& corpus,
                         const PrepConfig& cfg);

}  // namespace hcsbc
