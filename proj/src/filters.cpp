#include "corpusgate/filters.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "corpusgate/config.hpp"
#include "corpusgate/error.hpp"
#include "corpusgate/hash.hpp"
#include "corpusgate/unicode.hpp"

namespace corpusgate::detail {
extern const std::string_view kBadWordsFileText;
}

namespace corpusgate::filters {

namespace {

constexpr std::array<std::string_view, 8> kReasonTags = {
    "copyright_phrase", "wikipedia_url", "bad_word",    "non_latin",
    "punct_ratio",      "upper_ratio",   "digit_ratio", "avg_token_len",
};

bool is_word_char(char32_t cp) { return unicode::is_letter(cp) || unicode::is_mark(cp); }

std::string format_ratio(double measured, char op, double threshold) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f%c%g", measured, op, threshold);
  return buf;
}

CharRatios ratios_of(std::u32string_view text) {
  CharRatios r;
  std::size_t punct = 0, upper = 0, digit = 0;
  bool in_token = false;
  for (char32_t cp : text) {
    if (unicode::is_whitespace(cp)) {
      in_token = false;
      continue;
    }
    if (!in_token) {
      ++r.tokens;
      in_token = true;
    }
    ++r.non_ws_chars;
    if (unicode::is_punctuation(cp)) ++punct;
    if (unicode::is_uppercase(cp)) ++upper;
    if (unicode::is_decimal_digit(cp)) ++digit;
  }
  if (r.non_ws_chars == 0) return r;
  const auto n = static_cast<double>(r.non_ws_chars);
  r.punct = static_cast<double>(punct) / n;
  r.upper = static_cast<double>(upper) / n;
  r.digit = static_cast<double>(digit) / n;
  r.avg_token_len = n / static_cast<double>(r.tokens);
  return r;
}

std::optional<char32_t> first_non_latin_of(std::u32string_view text) {
  for (char32_t cp : text) {
    if (!unicode::is_latin_compatible(cp)) return cp;
  }
  return std::nullopt;
}

bool word_boundary_at(std::u32string_view text, std::size_t begin, std::size_t end) {
  if (begin > 0 && is_word_char(text[begin - 1])) return false;
  if (end < text.size() && is_word_char(text[end])) return false;
  return true;
}

// `lowered` is the lowercased document text.
std::optional<std::string> bad_word_in(std::u32string_view lowered,
                                       const std::unordered_set<std::string>& bad_words) {
  std::optional<std::string> best;
  std::size_t best_pos = lowered.size();

  std::size_t i = 0;
  while (i < lowered.size()) {
    if (!unicode::is_letter(lowered[i])) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < lowered.size() && is_word_char(lowered[j])) ++j;
    std::string word = unicode::encode_utf8(lowered.substr(i, j - i));
    if (bad_words.contains(word)) {
      best = std::move(word);
      best_pos = i;
      break;
    }
    i = j;
  }

  for (const auto& entry : bad_words) {
    const std::u32string needle = unicode::to_lower(unicode::decode_utf8(entry));
    if (needle.empty() || std::all_of(needle.begin(), needle.end(), is_word_char)) continue;
    for (std::size_t pos = lowered.find(needle); pos != std::u32string::npos && pos < best_pos;
         pos = lowered.find(needle, pos + 1)) {
      if (word_boundary_at(lowered, pos, pos + needle.size())) {
        best = entry;
        best_pos = pos;
        break;
      }
    }
  }
  return best;
}

template <typename T>
void read_if(const Json& json, const char* key, T& out) {
  auto it = json.find(key);
  if (it == json.end()) return;
  try {
    out = it->get<T>();
  } catch (const Json::exception& e) {
    throw DataError(std::string("filter config key '") + key + "': " + e.what());
  }
}

}  // namespace

std::string_view to_string(Reason reason) noexcept { return kReasonTags[static_cast<std::size_t>(reason)]; }

std::optional<Reason> parse_reason(std::string_view tag) noexcept {
  for (std::size_t i = 0; i < kReasonTags.size(); ++i) {
    if (kReasonTags[i] == tag) return static_cast<Reason>(i);
  }
  return std::nullopt;
}

std::vector<std::string> parse_word_list(std::string_view text) {
  std::vector<std::string> words;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    words.push_back(line.substr(first, last - first + 1));
  }
  return words;
}

std::vector<std::string> load_word_list(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open word list " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_word_list(buffer.str());
}

const std::vector<std::string>& default_bad_words() {
  static const std::vector<std::string> words = parse_word_list(detail::kBadWordsFileText);
  return words;
}

FilterConfig FilterConfig::defaults() {
  FilterConfig cfg;
  const auto& words = default_bad_words();
  cfg.bad_words.insert(words.begin(), words.end());
  return cfg;
}

void FilterConfig::validate() const {
  auto check_fraction = [](const char* name, double v) {
    if (!(v > 0.0 && v < 1.0)) {
      throw DataError(std::string("filter config: ") + name + " must be in (0,1), got " + std::to_string(v));
    }
  };
  check_fraction("punct_ratio_max", punct_ratio_max);
  check_fraction("upper_ratio_max", upper_ratio_max);
  check_fraction("digit_ratio_max", digit_ratio_max);
  if (!(avg_token_len_min < avg_token_len_max)) {
    throw DataError("filter config: avg_token_len_min must be < avg_token_len_max");
  }
  for (const auto& word : bad_words) {
    if (word.empty()) throw DataError("filter config: empty bad word");
    const auto decoded = unicode::decode_utf8(word);
    if (unicode::to_lower(decoded) != decoded) {
      throw DataError("filter config: bad word '" + word + "' is not lowercase");
    }
  }
}

Json FilterConfig::to_json() const {
  std::vector<std::string> words(bad_words.begin(), bad_words.end());
  std::sort(words.begin(), words.end());
  return Json{{"copyright_phrases", copyright_phrases},
              {"url_substrings", url_substrings},
              {"bad_words", words},
              {"punct_ratio_max", punct_ratio_max},
              {"upper_ratio_max", upper_ratio_max},
              {"digit_ratio_max", digit_ratio_max},
              {"avg_token_len_min", avg_token_len_min},
              {"avg_token_len_max", avg_token_len_max},
              {"apply_stage1", apply_stage1},
              {"apply_stage2", apply_stage2}};
}

std::string FilterConfig::fingerprint() const { return hex64(fnv1a(to_json().dump())); }

FilterConfig filter_config_from_json(const Json& json, const std::filesystem::path& base_dir) {
  if (!json.is_object()) throw DataError("filter config must be an object");
  FilterConfig cfg = FilterConfig::defaults();
  read_if(json, "copyright_phrases", cfg.copyright_phrases);
  read_if(json, "url_substrings", cfg.url_substrings);
  read_if(json, "punct_ratio_max", cfg.punct_ratio_max);
  read_if(json, "upper_ratio_max", cfg.upper_ratio_max);
  read_if(json, "digit_ratio_max", cfg.digit_ratio_max);
  read_if(json, "avg_token_len_min", cfg.avg_token_len_min);
  read_if(json, "avg_token_len_max", cfg.avg_token_len_max);
  read_if(json, "apply_stage1", cfg.apply_stage1);
  read_if(json, "apply_stage2", cfg.apply_stage2);

  std::vector<std::string> words;
  bool replace_words = false;
  if (json.contains("bad_words_file")) {
    auto path = std::filesystem::path(json.at("bad_words_file").get<std::string>());
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    words = load_word_list(path);
    replace_words = true;
  }
  if (json.contains("bad_words")) {
    std::vector<std::string> listed;
    read_if(json, "bad_words", listed);
    words.insert(words.end(), listed.begin(), listed.end());
    replace_words = true;
  }
  if (replace_words) cfg.bad_words = {words.begin(), words.end()};

  cfg.validate();
  return cfg;
}

FilterConfig load_filter_config(const std::filesystem::path& path) {
  Json json = load_config_file(path);
  if (json.contains("filter") && json["filter"].is_object()) json = json["filter"];
  return filter_config_from_json(json, path.parent_path());
}

CharRatios char_ratios(std::string_view text) { return ratios_of(unicode::decode_utf8(text)); }

std::optional<char32_t> first_non_latin(std::string_view text) {
  return first_non_latin_of(unicode::decode_utf8(text));
}

std::optional<std::string> contains_bad_word(std::string_view text,
                                             const std::unordered_set<std::string>& bad_words) {
  return bad_word_in(unicode::to_lower(unicode::decode_utf8(text)), bad_words);
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
  const auto h = unicode::to_lower(unicode::decode_utf8(haystack));
  const auto n = unicode::to_lower(unicode::decode_utf8(needle));
  return h.find(n) != std::u32string::npos;
}

FilterVerdict apply_chain(const Document& doc, const FilterConfig& cfg) {
  const std::u32string text = unicode::decode_utf8(doc.text);

  if (cfg.apply_stage1) {
    const std::u32string lowered = unicode::to_lower(text);
    for (const auto& phrase : cfg.copyright_phrases) {
      if (lowered.find(unicode::to_lower(unicode::decode_utf8(phrase))) != std::u32string::npos) {
        return {Reason::kCopyrightPhrase, phrase};
      }
    }
    if (doc.url) {
      for (const auto& needle : cfg.url_substrings) {
        if (contains_ci(*doc.url, needle)) return {Reason::kWikipediaUrl, needle};
      }
    }
    if (auto word = bad_word_in(lowered, cfg.bad_words)) return {Reason::kBadWord, *word};
    if (auto cp = first_non_latin_of(text)) {
      return {Reason::kNonLatin, unicode::codepoint_label(*cp) + " (" + unicode::script_name(*cp) + ")"};
    }
  }

  if (cfg.apply_stage2) {
    const CharRatios r = ratios_of(text);
    if (r.punct > cfg.punct_ratio_max) {
      return {Reason::kPunctRatio, format_ratio(r.punct, '>', cfg.punct_ratio_max)};
    }
    if (r.upper > cfg.upper_ratio_max) {
      return {Reason::kUpperRatio, format_ratio(r.upper, '>', cfg.upper_ratio_max)};
    }
    if (r.digit > cfg.digit_ratio_max) {
      return {Reason::kDigitRatio, format_ratio(r.digit, '>', cfg.digit_ratio_max)};
    }
    if (r.avg_token_len < cfg.avg_token_len_min) {
      return {Reason::kAvgTokenLen, format_ratio(r.avg_token_len, '<', cfg.avg_token_len_min)};
    }
    if (r.avg_token_len > cfg.avg_token_len_max) {
      return {Reason::kAvgTokenLen, format_ratio(r.avg_token_len, '>', cfg.avg_token_len_max)};
    }
  }
  return {};
}

}  // namespace corpusgate::filters
