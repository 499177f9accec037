#include <algorithm>
#include <sstream>

#include "corpusgate/cli.hpp"
#include "doctest.h"
#include "json.hpp"
#include "test_support.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "corpusgate");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = corpusgate::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string src(const std::string& rel) { return (testing::source_dir() / rel).string(); }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("version and usage errors") {
    auto r = cli({"--version"});
    CHECK(r.code == 0);
    CHECK(r.out.starts_with("corpusgate "));

    r = cli({"filter", "--input", "x.jsonl", "--no-such-flag"});
    CHECK(r.code == 1);
    CHECK(r.err.find("Usage") != std::string::npos);

    r = cli({});
    CHECK(r.code == 1);
    r = cli({"filter", "--input", "x.jsonl", "--stage", "3"});
    CHECK(r.code == 1);
  }

  TEST_CASE("filter on the fixture corpus") {
    testing::TempDir dir;
    const auto out = (dir / "kept.jsonl").string();
    const auto r = cli({"--config", src("configs/filter.toml"), "--output-dir", dir.path().string(), "--jobs", "3",
                        "filter", "--input", src("tests/fixtures/filter_corpus.jsonl"), "--output", out,
                        "--batch", "7"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto expected = json::parse(testing::read_file(testing::fixtures_dir() / "filter_corpus.expected.json"));
    const auto summary = json::parse(r.out);
    CHECK(summary.at("total_read") == expected.at("total_read"));
    CHECK(summary.at("kept") == expected.at("kept"));
    CHECK(summary.at("rejected_by_reason") == expected.at("rejected_by_reason"));

    const auto manifest = json::parse(testing::read_file(dir / "kept.manifest.json"));
    CHECK(manifest.at("kept") == 8);
    CHECK(fs::exists(dir / "filter.resolved_config.json"));
    CHECK(fs::exists(dir / "filter.summary.json"));

    // Kept lines are the input lines, unchanged and in order.
    std::istringstream kept(testing::read_file(out));
    std::string line;
    std::size_t n = 0;
    while (std::getline(kept, line)) {
      CHECK(json::parse(line).at("expect") == "keep");
      ++n;
    }
    CHECK(n == 8);
  }

  TEST_CASE("filter errors map to exit codes") {
    testing::TempDir dir;
    auto r = cli({"--output-dir", dir.path().string(), "filter", "--input", (dir / "missing.jsonl").string()});
    CHECK(r.code == 3);
    testing::write_file(dir / "bad.jsonl", "{\"id\":\"a\",\"text\":\"ok\"}\nnot json\n");
    r = cli({"--output-dir", dir.path().string(), "filter", "--input", (dir / "bad.jsonl").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("line 2") != std::string::npos);
    r = cli({"--config", (dir / "none.toml").string(), "filter", "--input", "x"});
    CHECK(r.code == 3);
  }

  TEST_CASE("tokenize") {
    testing::TempDir dir;
    auto r = cli({"--output-dir", dir.path().string(), "tokenize", "--text", "Hallo wereld"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(json::parse(r.out).at("count") == 12);
    r = cli({"--output-dir", dir.path().string(), "tokenize", "--vocab", src("tests/fixtures/bpe/vocab.json"),
             "--merges", src("tests/fixtures/bpe/merges.txt"), "--text", "Hallo wereld"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(json::parse(r.out).at("count") < 12);
  }

  TEST_CASE("fertility and throughput") {
    testing::TempDir dir;
    testing::write_file(dir / "c.jsonl", "{\"id\":\"a\",\"text\":\"de kat\"}\n{\"id\":\"b\",\"text\":\"één\"}\n");
    auto r = cli({"--output-dir", dir.path().string(), "fertility", "--input", (dir / "c.jsonl").string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto f = json::parse(r.out);
    CHECK(f.at("total_words") == 3);
    CHECK(f.at("total_tokens") == 2 + 4 + 5);
    CHECK(fs::exists(dir / "fertility.json"));

    r = cli({"--output-dir", dir.path().string(), "throughput", "--input", (dir / "c.jsonl").string(), "--runs",
             "2"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(fs::exists(dir / "throughput.json"));
    CHECK(fs::exists(dir / "throughput.txt"));
  }

  TEST_CASE("eval is reproducible and report ranks the models") {
    testing::TempDir dir;
    const auto bench = src("benchmarks/dbrd.toml");
    const auto a = (dir / "a.jsonl").string(), b = (dir / "b.jsonl").string(), c = (dir / "c.jsonl").string();
    auto r = cli({"--output-dir", dir.path().string(), "eval", "--benchmark", bench, "--model", "m1",
                  "--predictions", a});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    r = cli({"--output-dir", dir.path().string(), "--jobs", "4", "eval", "--benchmark", bench, "--model", "m1",
             "--predictions", b});
    REQUIRE(r.code == 0);
    CHECK(testing::read_file(a) == testing::read_file(b));
    const auto lines = testing::read_file(a);
    CHECK(std::count(lines.begin(), lines.end(), '\n') == 20);

    r = cli({"--output-dir", dir.path().string(), "eval", "--benchmark", bench, "--model", "m2", "--mock-mode",
             "uniform", "--predictions", c});
    REQUIRE(r.code == 0);

    const auto report = (dir / "r.json").string();
    r = cli({"--output-dir", dir.path().string(), "report", "--predictions", a + "," + c, "--format", "json",
             "--output", report});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto j = json::parse(testing::read_file(report));
    CHECK(j.at("models").size() == 2);
    CHECK(j.at("benchmarks") == json{"dbrd"});

    r = cli({"--output-dir", dir.path().string(), "report", "--predictions", a});
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "report.md"));
  }

  TEST_CASE("eval with a bad benchmark config is a data error") {
    testing::TempDir dir;
    testing::write_file(dir / "b.toml", "[benchmark]\ntemplate = \"nope\"\n");
    const auto r = cli({"--output-dir", dir.path().string(), "eval", "--benchmark", (dir / "b.toml").string()});
    CHECK(r.code == 2);
  }

  TEST_CASE("config tables set flag defaults, flags win") {
    testing::TempDir dir;
    testing::write_file(dir / "c.jsonl", "{\"id\":\"a\",\"text\":\"de kat\"}\n");
    testing::write_file(dir / "cfg.toml", "[fertility]\nmode = \"doc\"\n");
    auto r = cli({"--config", (dir / "cfg.toml").string(), "--output-dir", dir.path().string(), "fertility",
                  "--input", (dir / "c.jsonl").string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(json::parse(r.out).at("mode") == "doc");
    r = cli({"--config", (dir / "cfg.toml").string(), "--output-dir", dir.path().string(), "fertility", "--input",
             (dir / "c.jsonl").string(), "--mode", "word"});
    CHECK(json::parse(r.out).at("mode") == "word");
  }

  TEST_CASE("import") {
    testing::TempDir dir;
    testing::write_file(dir / "in.csv", "text,label\nMooi,1\n");
    const auto r = cli({"--output-dir", dir.path().string(), "import", "--format", "dbrd", "--input",
                        (dir / "in.csv").string()});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(json::parse(r.out).at("records") == 1);
    CHECK(fs::exists(dir / "dbrd.jsonl"));
  }
}
