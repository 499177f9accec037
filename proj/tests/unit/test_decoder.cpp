#include <cmath>
#include <set>

#include "corpusgate/decoder.hpp"
#include "corpusgate/error.hpp"
#include "corpusgate/harness.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace corpusgate;
using namespace corpusgate::decoder;
using testing::FunctionBackend;
using testing::TableTokenizer;

namespace {

TableTokenizer abc_tokenizer() { return TableTokenizer({{"ab", {0, 1}}, {"c", {2}}, {"a", {0}}}, 9); }

FunctionBackend uniform_backend() {
  return FunctionBackend([](auto, auto cands) { return std::vector<double>(cands.size(), 0.0); });
}

}  // namespace

TEST_SUITE("decoder") {
  TEST_CASE("disjoint labels give one leaf each") {
    const TableTokenizer tok({{"positief", {10, 11}}, {"negatief", {20, 11}}});
    const auto trie = build_trie({"positief", "negatief"}, tok);
    CHECK(trie.leaf_count() == 2);
    CHECK(std::vector<TokenId>(trie.allowed(LabelTrie::kRoot).begin(), trie.allowed(LabelTrie::kRoot).end()) ==
          std::vector<TokenId>{10, 20});
  }

  TEST_CASE("hand-built trie") {
    const auto tok = abc_tokenizer();
    const auto trie = build_trie({"ab", "c"}, tok);
    const auto root = trie.allowed(LabelTrie::kRoot);
    CHECK(std::vector<TokenId>(root.begin(), root.end()) == std::vector<TokenId>{0, 2});
    const auto after_a = trie.child(LabelTrie::kRoot, 0);
    REQUIRE(after_a.has_value());
    const auto next = trie.allowed(*after_a);
    CHECK(std::vector<TokenId>(next.begin(), next.end()) == std::vector<TokenId>{1});
    CHECK_FALSE(trie.child(LabelTrie::kRoot, 1).has_value());
  }

  TEST_CASE("invalid label sets") {
    const auto tok = abc_tokenizer();
    CHECK_THROWS_AS(build_trie({"a", "ab"}, tok), DataError);
    CHECK_THROWS_AS(build_trie({"ab"}, tok), DataError);
    CHECK_THROWS_AS(build_trie({"ab", "ab"}, tok), DataError);
    const TableTokenizer empty({{"x", {}}, {"y", {1}}});
    CHECK_THROWS_AS(build_trie({"x", "y"}, empty), DataError);
    const TableTokenizer no_eos({{"a", {0}}, {"ab", {0, 1}}});
    CHECK_THROWS_AS(build_trie({"a", "ab"}, no_eos, {"", true}), DataError);
  }

  TEST_CASE("eos termination resolves prefix conflicts") {
    const auto tok = abc_tokenizer();
    const auto trie = build_trie({"a", "ab"}, tok, {"", true});
    CHECK(trie.sequences()[0] == std::vector<TokenId>{0, 9});
    CHECK(trie.sequences()[1] == std::vector<TokenId>{0, 1, 9});
    const auto after_a = *trie.child(LabelTrie::kRoot, 0);
    const auto next = trie.allowed(after_a);
    CHECK(std::vector<TokenId>(next.begin(), next.end()) == std::vector<TokenId>{1, 9});
  }

  TEST_CASE("label prefix is tokenized but not returned") {
    const TableTokenizer tok({{" ja", {5}}, {" nee", {6}}});
    const auto trie = build_trie({"ja", "nee"}, tok, {" ", false});
    FunctionBackend backend([](auto, auto c) { return std::vector<double>{0.0, -1e9}; });
    Rng rng(1);
    CHECK(sample_label(trie, backend, std::vector<TokenId>{}, {}, rng).label == "ja");
  }

  TEST_CASE("softmax sampling frequency with logits ln 3 and ln 1") {
    const TableTokenizer tok({{"yes", {1}}, {"no", {2}}});
    const auto trie = build_trie({"yes", "no"}, tok);
    FunctionBackend backend([](auto, auto c) {
      std::vector<double> out;
      for (TokenId id : c) out.push_back(id == 1 ? std::log(3.0) : std::log(1.0));
      return out;
    });
    int yes = 0;
    const int n = 10000;
    for (int s = 0; s < n; ++s) {
      Rng rng(static_cast<uint64_t>(s));
      if (sample_label(trie, backend, std::vector<TokenId>{7}, {}, rng).label == "yes") ++yes;
    }
    CHECK(std::abs(yes / double(n) - 0.75) <= 0.03);
  }

  TEST_CASE("two-step trie: fair first step, forced second step") {
    const auto tok = abc_tokenizer();
    const auto trie = build_trie({"ab", "c"}, tok);
    auto backend = uniform_backend();
    int ab = 0;
    const int n = 10000;
    for (int s = 0; s < n; ++s) {
      Rng rng(static_cast<uint64_t>(s) * 7919 + 1);
      const auto r = sample_label(trie, backend, std::vector<TokenId>{}, {}, rng);
      CHECK(rng.draws() == 1);
      if (r.label == "ab") {
        ++ab;
        CHECK(r.steps == 2);
      } else {
        CHECK(r.steps == 1);
      }
    }
    CHECK(std::abs(ab / double(n) - 0.5) <= 0.03);
    CHECK(backend.calls() == static_cast<uint64_t>(n));
  }

  TEST_CASE("the backend only sees allowed ids and the growing context") {
    const auto tok = abc_tokenizer();
    const auto trie = build_trie({"ab", "c"}, tok, {"", true});
    std::vector<std::vector<TokenId>> contexts;
    FunctionBackend backend([&](auto prompt, auto cands) {
      contexts.emplace_back(prompt.begin(), prompt.end());
      for (TokenId id : cands) CHECK((id == 0 || id == 2));
      return std::vector<double>{10.0, -10.0};
    });
    Rng rng(3);
    const auto r = sample_label(trie, backend, std::vector<TokenId>{42}, {}, rng);
    CHECK(r.label == "ab");
    CHECK(r.steps == 3);
    REQUIRE(contexts.size() == 1);
    CHECK(contexts[0] == std::vector<TokenId>{42});
  }

  TEST_CASE("deterministic given seed and backend") {
    const auto tok = BpeModel::byte_level_base();
    const auto trie = build_trie({"positief", "negatief"}, tok);
    MockBackendConfig cfg;
    cfg.mode = MockBackendConfig::Mode::kHashLogits;
    cfg.seed = 99;
    MockBackend backend(cfg);
    const std::vector<TokenId> prompt = tok.encode("Het sentiment is ");
    for (uint64_t seed = 0; seed < 50; ++seed) {
      Rng a(seed), b(seed);
      const auto ra = sample_label(trie, backend, prompt, {}, a);
      const auto rb = sample_label(trie, backend, prompt, {}, b);
      CHECK(ra.label == rb.label);
      CHECK(ra.steps == rb.steps);
    }
  }

  TEST_CASE("bad scores are reported with the step") {
    const auto tok = abc_tokenizer();
    const auto trie = build_trie({"ab", "c"}, tok);
    FunctionBackend wrong_len([](auto, auto) { return std::vector<double>{0.0}; });
    Rng rng(1);
    CHECK_THROWS_AS(sample_label(trie, wrong_len, std::vector<TokenId>{}, {}, rng), BackendError);
    FunctionBackend nan([](auto, auto) { return std::vector<double>{0.0, std::nan("")}; });
    try {
      sample_label(trie, nan, std::vector<TokenId>{}, {}, rng);
      FAIL("expected BackendError");
    } catch (const BackendError& e) {
      CHECK(e.kind() == BackendError::Kind::kNonFinite);
    }
  }

  TEST_CASE("sampler policy is plain temperature-1 sampling") {
    SamplerPolicy p;
    CHECK_NOTHROW(p.validate());
    p.top_p = 0.9;
    CHECK_THROWS_AS(p.validate(), DataError);
    SamplerPolicy t;
    t.temperature = 0.7;
    CHECK_THROWS_AS(t.validate(), DataError);
  }

  TEST_CASE("softmax draws exactly once and follows the weights") {
    Rng rng(0);
    const std::vector<double> logits{0.0, 1000.0, -1000.0};
    for (int i = 0; i < 100; ++i) CHECK(sample_softmax(logits, rng) == 1);
    CHECK(rng.draws() == 100);
  }

  TEST_CASE("all samples are valid labels for every shipped label set") {
    const auto tok = BpeModel::byte_level_base();
    for (auto tmpl : {harness::PromptTemplate::kDbrd, harness::PromptTemplate::kDutchCola,
                      harness::PromptTemplate::kXlwic, harness::PromptTemplate::kArc,
                      harness::PromptTemplate::kGlobalMmlu}) {
      const auto cfg = harness::preset(tmpl);
      const auto trie = build_trie(cfg.labels, tok);
      MockBackendConfig mcfg;
      mcfg.mode = MockBackendConfig::Mode::kHashLogits;
      MockBackend backend(mcfg);
      const std::set<std::string> allowed(cfg.labels.begin(), cfg.labels.end());
      for (uint64_t s = 0; s < 400; ++s) {
        Rng rng(s);
        const std::vector<TokenId> prompt{static_cast<TokenId>(s % 256)};
        CHECK(allowed.contains(sample_label(trie, backend, prompt, {}, rng).label));
      }
    }
  }
}
