#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "corpusgate/ingest.hpp"

namespace corpusgate::filters {

// Chain stages in evaluation order. The first four form stage 1 (web data
// only), the last four stage 2 (every source).
enum class Reason {
  kCopyrightPhrase,
  kWikipediaUrl,
  kBadWord,
  kNonLatin,
  kPunctRatio,
  kUpperRatio,
  kDigitRatio,
  kAvgTokenLen,
};

inline constexpr std::array kAllReasons = {
    Reason::kCopyrightPhrase, Reason::kWikipediaUrl, Reason::kBadWord,    Reason::kNonLatin,
    Reason::kPunctRatio,      Reason::kUpperRatio,   Reason::kDigitRatio, Reason::kAvgTokenLen,
};

std::string_view to_string(Reason reason) noexcept;
std::optional<Reason> parse_reason(std::string_view tag) noexcept;
inline bool is_stage1(Reason reason) noexcept { return reason <= Reason::kNonLatin; }

struct FilterVerdict {
  std::optional<Reason> reason;  // absent <=> keep
  std::string detail;            // offending word, phrase or measured ratio

  bool keep() const noexcept { return !reason.has_value(); }
  bool operator==(const FilterVerdict&) const = default;
};

// The shipped Dutch bad-word list.
const std::vector<std::string>& default_bad_words();

// Parses the bad-word file format: one entry per line, '#' comments.
std::vector<std::string> parse_word_list(std::string_view text);
std::vector<std::string> load_word_list(const std::filesystem::path& path);

struct FilterConfig {
  std::vector<std::string> copyright_phrases{"rechten voorbehouden", "rights reserved"};
  std::vector<std::string> url_substrings{"wikipedia.org"};
  std::unordered_set<std::string> bad_words;  // lowercase
  double punct_ratio_max = 0.2;
  double upper_ratio_max = 0.22;
  double digit_ratio_max = 0.16;
  double avg_token_len_min = 2.0;
  double avg_token_len_max = 20.0;
  bool apply_stage1 = true;
  bool apply_stage2 = true;

  // Defaults with the shipped bad-word list.
  static FilterConfig defaults();

  // Throws DataError on out-of-range thresholds or non-lowercase bad words.
  void validate() const;

  // Canonical form (sorted word list); the fingerprint is derived from it.
  Json to_json() const;
  std::string fingerprint() const;
};

// Keys that are absent keep their default value. A "bad_words_file" key
// replaces the word list with the contents of that file, resolved relative
// to `base_dir`.
FilterConfig filter_config_from_json(const Json& json, const std::filesystem::path& base_dir = {});

// Loads .toml or .json; for TOML the keys may sit at top level or under a
// [filter] table.
FilterConfig load_filter_config(const std::filesystem::path& path);

struct CharRatios {
  double punct = 0;
  double upper = 0;
  double digit = 0;
  double avg_token_len = 0;
  std::size_t non_ws_chars = 0;
  std::size_t tokens = 0;
};

// Counts over Unicode scalar values. Tokens are maximal non-whitespace runs.
CharRatios char_ratios(std::string_view text);

// First character whose script is not Latin, Common or Inherited.
std::optional<char32_t> first_non_latin(std::string_view text);
inline bool is_non_latin(std::string_view text) { return first_non_latin(text).has_value(); }

// Whole-word, case-insensitive. Word characters are letters plus combining
// marks. Entries spanning several words (containing non-letters) match as a
// phrase with word boundaries at both ends. Returns the entry that occurs
// first in the text.
std::optional<std::string> contains_bad_word(std::string_view text,
                                             const std::unordered_set<std::string>& bad_words);

// Case-insensitive substring search over scalar values.
bool contains_ci(std::string_view haystack, std::string_view needle);

FilterVerdict apply_chain(const Document& doc, const FilterConfig& cfg);

}  // namespace corpusgate::filters
