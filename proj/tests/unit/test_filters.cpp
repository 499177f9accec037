#include <algorithm>
#include <random>
#include <set>

#include "bad_words_reference.hpp"
#include "corpusgate/error.hpp"
#include "corpusgate/filters.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace corpusgate;
using namespace corpusgate::filters;
using testing::TempDir;
using testing::write_file;

namespace {

Document doc(std::string text, std::optional<std::string> url = std::nullopt) {
  return Document{"d", std::move(text), std::move(url), {}};
}

// Punctuation (general category P*) among printable ASCII, listed by hand.
const std::string kAsciiPunct = "!\"#%&'()*,-./:;?@[\\]_{}";

struct Counts {
  std::size_t n = 0, punct = 0, upper = 0, digit = 0, tokens = 0;
};

Counts ascii_oracle(const std::string& s) {
  Counts c;
  bool in_token = false;
  for (char ch : s) {
    if (ch == ' ' || ch == '\t' || ch == '\n') {
      in_token = false;
      continue;
    }
    if (!in_token) ++c.tokens;
    in_token = true;
    ++c.n;
    if (kAsciiPunct.find(ch) != std::string::npos) ++c.punct;
    if (ch >= 'A' && ch <= 'Z') ++c.upper;
    if (ch >= '0' && ch <= '9') ++c.digit;
  }
  return c;
}

// Splits on anything that is not an ASCII letter.
bool bad_word_oracle(const std::string& text, const std::set<std::string>& words) {
  std::string cur;
  auto flush = [&] {
    bool hit = words.contains(cur);
    cur.clear();
    return hit;
  };
  for (char ch : text) {
    const char lower = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if (lower >= 'a' && lower <= 'z') {
      cur += lower;
    } else if (flush()) {
      return true;
    }
  }
  return flush();
}

}  // namespace

TEST_SUITE("filters") {
  TEST_CASE("character ratios on hand-countable strings") {
    const auto r = char_ratios("abc def");
    CHECK(r.punct == 0);
    CHECK(r.upper == 0);
    CHECK(r.digit == 0);
    CHECK(r.tokens == 2);
    CHECK(r.avg_token_len == 3.0);

    const auto a = char_ratios("A1.");
    CHECK(a.non_ws_chars == 3);
    CHECK(a.upper == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(a.digit == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK(a.punct == doctest::Approx(1.0 / 3).epsilon(1e-15));

    const auto e = char_ratios("");
    CHECK(e.punct == 0);
    CHECK(e.upper == 0);
    CHECK(e.digit == 0);
    CHECK(e.avg_token_len == 0);
    CHECK(e.tokens == 0);
  }

  TEST_CASE("character ratios agree with a category oracle on random ASCII") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> len(0, 40);
    std::uniform_int_distribution<int> ch(32, 126);
    for (int trial = 0; trial < 2000; ++trial) {
      std::string s;
      const int n = len(rng);
      for (int i = 0; i < n; ++i) s += static_cast<char>(ch(rng));
      const auto want = ascii_oracle(s);
      const auto got = char_ratios(s);
      REQUIRE(got.non_ws_chars == want.n);
      REQUIRE(got.tokens == want.tokens);
      if (want.n == 0) continue;
      CHECK(got.punct == static_cast<double>(want.punct) / want.n);
      CHECK(got.upper == static_cast<double>(want.upper) / want.n);
      CHECK(got.digit == static_cast<double>(want.digit) / want.n);
      CHECK(got.avg_token_len == static_cast<double>(want.n) / want.tokens);
    }
  }

  TEST_CASE("ratios count scalar values, not bytes") {
    const auto r = char_ratios("ÉÉn été");
    CHECK(r.non_ws_chars == 6);
    CHECK(r.upper == doctest::Approx(2.0 / 6));
  }

  TEST_CASE("non-Latin detection") {
    CHECK(first_non_latin("café Алло") == std::optional<char32_t>(U'А'));
    CHECK_FALSE(is_non_latin("plain ASCII text 123 !?"));
    CHECK(is_non_latin("中文"));
    CHECK_FALSE(is_non_latin("café, №12"));
    CHECK_FALSE(is_non_latin("crème brûlée é"));
  }

  TEST_CASE("bad word examples") {
    const std::unordered_set<std::string> zak{"zak"};
    CHECK(contains_bad_word("die zak daar", zak) == std::optional<std::string>("zak"));
    CHECK_FALSE(contains_bad_word("zakelijk gesprek", zak).has_value());
    CHECK(contains_bad_word("Fuck!", {"fuck"}) == std::optional<std::string>("fuck"));
    CHECK(contains_bad_word("ZAK.", zak).has_value());
    CHECK_FALSE(contains_bad_word("dikzak", zak).has_value());
    CHECK(contains_bad_word("zak2024", zak).has_value());
    // A combining mark continues the word.
    CHECK_FALSE(contains_bad_word("zaḱ daar", zak).has_value());
  }

  TEST_CASE("multi-word entries match as phrases at word boundaries") {
    const std::unordered_set<std::string> words{"rot op"};
    CHECK(contains_bad_word("ga toch ROT OP!", words).has_value());
    CHECK_FALSE(contains_bad_word("het brot opnieuw", words).has_value());
  }

  TEST_CASE("earliest occurrence is reported") {
    const std::unordered_set<std::string> words{"kut", "zak", "rot op"};
    CHECK(contains_bad_word("zak en kut", words) == std::optional<std::string>("zak"));
    CHECK(contains_bad_word("rot op, zak", words) == std::optional<std::string>("rot op"));
  }

  TEST_CASE("bad word matching agrees with a split-on-non-letters oracle") {
    const std::vector<std::string> vocab{"zak",  "zakelijk", "dikzak", "kut",   "kutje", "de",
                                         "kat",  "fok",      "fokker", "reet",  "reeks", "Zak",
                                         "KUT",  "lul",      "lullig", "tafel", "sul",   "sultan"};
    const std::vector<std::string> seps{" ", ", ", "!", "-", "'", "3", "_", "\t", "..", "(", ")"};
    const std::set<std::string> bad{"zak", "kut", "fok", "reet", "lul", "sul"};
    const std::unordered_set<std::string> bad_set(bad.begin(), bad.end());
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 3000; ++trial) {
      std::string text;
      const int words = 1 + static_cast<int>(rng() % 5);
      for (int w = 0; w < words; ++w) {
        if (w > 0 || rng() % 2) text += seps[rng() % seps.size()];
        text += vocab[rng() % vocab.size()];
      }
      if (rng() % 2) text += seps[rng() % seps.size()];
      CHECK_MESSAGE(contains_bad_word(text, bad_set).has_value() == bad_word_oracle(text, bad), text);
    }
  }

  TEST_CASE("chain examples") {
    const auto cfg = FilterConfig::defaults();
    auto v = apply_chain(doc("Alle rechten voorbehouden."), cfg);
    CHECK(v.reason == Reason::kCopyrightPhrase);

    v = apply_chain(doc("abc!"), cfg);
    CHECK(v.reason == Reason::kPunctRatio);
    CHECK(v.detail == "0.2500>0.2");

    CHECK(apply_chain(doc("De kat slaapt op de mat."), cfg).keep());
    CHECK(apply_chain(doc("Tulpen", "https://nl.wikipedia.org/wiki/Tulp"), cfg).reason == Reason::kWikipediaUrl);
    CHECK(apply_chain(doc("Priviet Алло"), cfg).detail == "U+0410 (Cyrillic)");
  }

  TEST_CASE("exact thresholds are kept, anything above is rejected") {
    const auto cfg = FilterConfig::defaults();
    CHECK(apply_chain(doc("huis, boom."), cfg).keep());                          // 2/10
    CHECK(apply_chain(doc("huis,, boom."), cfg).reason == Reason::kPunctRatio);  // 3/11
    CHECK(apply_chain(doc("jaar 1234 was heel mooi weer ja"), cfg).keep());      // 4/25
    CHECK(apply_chain(doc("ik ga nu op de zo"), cfg).keep());                    // 2.0
    CHECK(apply_chain(doc("hogesnelheidstreinen"), cfg).keep());                 // 20.0
    CHECK(apply_chain(doc("hogesnelheidstreinenx"), cfg).reason == Reason::kAvgTokenLen);
    CHECK(apply_chain(doc("ik a b"), cfg).reason == Reason::kAvgTokenLen);
  }

  TEST_CASE("stage gating") {
    auto only2 = FilterConfig::defaults();
    only2.apply_stage1 = false;
    auto only1 = FilterConfig::defaults();
    only1.apply_stage2 = false;
    const auto both = FilterConfig::defaults();

    const std::vector<std::string> texts{"die zak daar!!!!!!", "Алло", "Alle rechten voorbehouden",
                                         "abc!",               "ABCD", "De kat slaapt op de mat.",
                                         "12345 ab",           "a b c", ""};
    for (const auto& t : texts) {
      const auto v1 = apply_chain(doc(t), only1);
      const auto v2 = apply_chain(doc(t), only2);
      const auto vb = apply_chain(doc(t), both);
      if (v1.reason) CHECK(is_stage1(*v1.reason));
      if (v2.reason) CHECK_FALSE(is_stage1(*v2.reason));
      CHECK(vb == (v1.keep() ? v2 : v1));
    }
  }

  TEST_CASE("raising a maximum never turns a keep into a reject") {
    std::mt19937_64 rng(3);
    const std::string alphabet = "abcDEF12!?., ";
    for (int trial = 0; trial < 500; ++trial) {
      std::string t;
      for (int i = 0; i < 20; ++i) t += alphabet[rng() % alphabet.size()];
      auto lo = FilterConfig::defaults();
      auto hi = lo;
      hi.punct_ratio_max = 0.5;
      hi.upper_ratio_max = 0.5;
      hi.digit_ratio_max = 0.5;
      hi.avg_token_len_max = 40;
      hi.avg_token_len_min = 1;
      if (apply_chain(doc(t), lo).keep()) CHECK(apply_chain(doc(t), hi).keep());
    }
  }

  TEST_CASE("shipped bad-word list equals the reference transcription") {
    const auto& words = default_bad_words();
    REQUIRE(words.size() == testing::kReferenceBadWords.size());
    for (std::size_t i = 0; i < words.size(); ++i) CHECK(words[i] == testing::kReferenceBadWords[i]);
    const auto from_file = load_word_list(testing::source_dir() / "data" / "bad_words_nl.txt");
    CHECK(from_file == words);
  }

  TEST_CASE("word list parsing strips comments and blanks") {
    CHECK(parse_word_list("# header\nzak\n\n  kut  # inline\n") == std::vector<std::string>{"zak", "kut"});
  }

  TEST_CASE("config loading, validation and fingerprint") {
    TempDir dir;
    write_file(dir / "words.txt", "foo\nbar\n");
    write_file(dir / "f.toml",
               "[filter]\npunct_ratio_max = 0.3\nbad_words_file = \"words.txt\"\napply_stage1 = false\n");
    const auto cfg = load_filter_config(dir / "f.toml");
    CHECK(cfg.punct_ratio_max == 0.3);
    CHECK(cfg.bad_words == std::unordered_set<std::string>{"foo", "bar"});
    CHECK_FALSE(cfg.apply_stage1);
    CHECK(cfg.upper_ratio_max == 0.22);

    write_file(dir / "f.json", "{\"punct_ratio_max\": 0.3, \"bad_words\": [\"bar\", \"foo\"], \"apply_stage1\": false}");
    CHECK(load_filter_config(dir / "f.json").fingerprint() == cfg.fingerprint());
    CHECK(FilterConfig::defaults().fingerprint() != cfg.fingerprint());
    CHECK(FilterConfig::defaults().fingerprint() == FilterConfig::defaults().fingerprint());

    write_file(dir / "bad.toml", "punct_ratio_max = 1.5\n");
    CHECK_THROWS_AS(load_filter_config(dir / "bad.toml"), DataError);
    write_file(dir / "upper.toml", "bad_words = [\"Zak\"]\n");
    CHECK_THROWS_AS(load_filter_config(dir / "upper.toml"), DataError);
    write_file(dir / "syntax.toml", "punct_ratio_max = \n");
    CHECK_THROWS_AS(load_filter_config(dir / "syntax.toml"), DataError);
  }

  TEST_CASE("shipped example config matches the defaults") {
    const auto cfg = load_filter_config(testing::source_dir() / "configs" / "filter.toml");
    CHECK(cfg.fingerprint() == FilterConfig::defaults().fingerprint());
  }
}
