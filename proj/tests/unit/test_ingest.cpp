#include "corpusgate/error.hpp"
#include "corpusgate/ingest.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace corpusgate;
using testing::TempDir;
using testing::write_file;

TEST_SUITE("ingest") {
  TEST_CASE("three valid lines stream in order") {
    TempDir dir;
    write_file(dir / "c.jsonl",
               "{\"id\":\"a\",\"text\":\"een\"}\n{\"id\":\"b\",\"text\":\"twee\",\"url\":\"http://x\"}\n"
               "{\"id\":\"c\",\"text\":\"drie\",\"lang\":\"nl\",\"n\":3}\n");
    std::vector<Document> docs;
    for (const auto& d : stream_documents(dir / "c.jsonl")) docs.push_back(d);
    REQUIRE(docs.size() == 3);
    CHECK(docs[0].id == "a");
    CHECK(docs[1].text == "twee");
    CHECK(docs[1].url == std::optional<std::string>("http://x"));
    CHECK(docs[2].meta.at("lang") == "nl");
    CHECK(docs[2].meta.at("n") == "3");
  }

  TEST_CASE("empty file yields nothing") {
    TempDir dir;
    write_file(dir / "e.jsonl", "");
    DocumentReader reader(dir / "e.jsonl");
    CHECK_FALSE(reader.next().has_value());
  }

  TEST_CASE("non-string text names the line") {
    TempDir dir;
    write_file(dir / "t.jsonl", "{\"txt\":\"ok\"}\n{\"txt\": 5}\n");
    DocumentReader reader(dir / "t.jsonl", FieldMap{"txt", "id", "url"});
    CHECK(reader.next().has_value());
    try {
      reader.next();
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).starts_with("line 2: text field not a string"));
    }
  }

  TEST_CASE("missing text field and malformed JSON carry line numbers") {
    TempDir dir;
    write_file(dir / "m.jsonl", "\n{\"body\":\"x\"}\n");
    DocumentReader reader(dir / "m.jsonl");
    CHECK_THROWS_WITH_AS(reader.next(), "line 2: missing text field 'text'", DataError);

    write_file(dir / "j.jsonl", "{\"text\":\"a\"}\n{\"text\":\n");
    DocumentReader bad(dir / "j.jsonl");
    bad.next();
    try {
      bad.next();
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).starts_with("line 2: malformed JSON"));
    }
  }

  TEST_CASE("invalid UTF-8 is an error, not repaired") {
    TempDir dir;
    write_file(dir / "u.jsonl", "{\"text\":\"caf\xC3\"}\n");
    DocumentReader reader(dir / "u.jsonl");
    CHECK_THROWS_AS(reader.next(), DataError);
  }

  TEST_CASE("missing ids are synthesized from file and line; duplicates rejected") {
    TempDir dir;
    write_file(dir / "ids.jsonl", "{\"text\":\"a\"}\n\n{\"text\":\"b\"}\n");
    DocumentReader reader(dir / "ids.jsonl");
    CHECK(reader.next()->id == "ids.jsonl:1");
    CHECK(reader.next()->id == "ids.jsonl:3");

    write_file(dir / "dup.jsonl", "{\"id\":\"x\",\"text\":\"a\"}\n{\"id\":\"x\",\"text\":\"b\"}\n");
    DocumentReader dup(dir / "dup.jsonl");
    dup.next();
    CHECK_THROWS_AS(dup.next(), DataError);
  }

  TEST_CASE("CRLF line endings and raw line access") {
    TempDir dir;
    write_file(dir / "crlf.jsonl", "{\"id\":\"a\",\"text\":\"x\"}\r\n{\"id\":\"b\",\"text\":\"y\"}\r\n");
    DocumentReader reader(dir / "crlf.jsonl");
    CHECK(reader.next()->text == "x");
    CHECK(reader.last_raw_line() == "{\"id\":\"a\",\"text\":\"x\"}");
    CHECK(reader.next()->id == "b");
    CHECK(reader.last_line_number() == 2);
  }

  TEST_CASE("two passes give the same sequence") {
    TempDir dir;
    std::string body;
    for (int i = 0; i < 50; ++i) body += "{\"text\":\"doc " + std::to_string(i) + "\"}\n";
    write_file(dir / "d.jsonl", body);
    auto collect = [&] {
      std::vector<Document> docs;
      for (const auto& d : stream_documents(dir / "d.jsonl")) docs.push_back(d);
      return docs;
    };
    CHECK(collect() == collect());
  }

  TEST_CASE("manifest round trip") {
    TempDir dir;
    CorpusManifest m;
    m.total_read = 10;
    m.kept = 7;
    m.rejected_by_reason = {{"bad_word", 3}};
    m.started_at = "2024-01-01T00:00:00Z";
    m.finished_at = "2024-01-01T00:00:01Z";
    m.config_fingerprint = "0123456789abcdef";
    write_manifest(m, dir / "m.json");
    CHECK(read_manifest(dir / "m.json") == m);

    CorpusManifest empty;
    write_manifest(empty, dir / "e.json");
    CHECK(read_manifest(dir / "e.json") == empty);
  }

  TEST_CASE("manifest invariant is checked before writing") {
    TempDir dir;
    CorpusManifest m;
    m.total_read = 10;
    m.kept = 6;
    m.rejected_by_reason = {{"bad_word", 3}};
    CHECK_THROWS_AS(write_manifest(m, dir / "m.json"), DataError);
    CHECK_FALSE(std::filesystem::exists(dir / "m.json"));
  }

  TEST_CASE("unwritable manifest path is an I/O error") {
    TempDir dir;
    CorpusManifest m;
    CHECK_THROWS_AS(write_manifest(m, dir / "missing" / "sub" / "m.json"), IoError);
  }

  TEST_CASE("merge_counts adds per-reason counts") {
    CorpusManifest a, b;
    a.total_read = 3;
    a.kept = 2;
    a.rejected_by_reason = {{"bad_word", 1}};
    b.total_read = 4;
    b.kept = 1;
    b.rejected_by_reason = {{"bad_word", 1}, {"non_latin", 2}};
    a.merge_counts(b);
    CHECK(a.total_read == 7);
    CHECK(a.kept == 3);
    CHECK(a.rejected_by_reason.at("bad_word") == 2);
    CHECK(a.rejected_by_reason.at("non_latin") == 2);
    CHECK_NOTHROW(a.validate());
  }

  TEST_CASE("sidecar path") {
    CHECK(rejected_sidecar_path("out/kept.jsonl") == std::filesystem::path("out/kept.rejected.jsonl"));
  }
}
