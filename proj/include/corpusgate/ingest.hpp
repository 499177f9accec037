#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>

#include "json.hpp"

namespace corpusgate {

using Json = nlohmann::json;

struct Document {
  std::string id;
  std::string text;  // valid UTF-8
  std::optional<std::string> url;
  std::map<std::string, std::string> meta;

  bool operator==(const Document&) const = default;
};

// Which JSON keys hold the document fields.
struct FieldMap {
  std::string text = "text";
  std::string id = "id";
  std::string url = "url";
};

// One parsed JSON-lines record.
struct JsonlRecord {
  std::size_t line = 0;  // 1-based physical line number
  Json value;            // always an object
  std::string raw;       // the line as read, without the terminator
};

// Reads a JSON-lines file one record at a time. Blank lines are skipped but
// still counted for line numbers. Every record must be a JSON object.
class JsonlReader {
 public:
  explicit JsonlReader(const std::filesystem::path& path);

  std::optional<JsonlRecord> next();

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t line_ = 0;
};

// Lazily streams Documents from a JSON-lines corpus. Memory stays bounded by
// the longest line plus the set of ids seen so far.
class DocumentReader {
 public:
  DocumentReader(const std::filesystem::path& path, FieldMap fields = {});

  // Next document, or nullopt at end of file. Throws DataError with the line
  // number on malformed input.
  std::optional<Document> next();

  // Raw text of the line that produced the last returned document.
  const std::string& last_raw_line() const noexcept { return last_raw_; }
  std::size_t last_line_number() const noexcept { return last_line_; }

  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Document;
    using difference_type = std::ptrdiff_t;
    using pointer = const Document*;
    using reference = const Document&;

    iterator() = default;
    explicit iterator(DocumentReader* reader) : reader_(reader) { ++*this; }

    reference operator*() const { return *current_; }
    pointer operator->() const { return &*current_; }
    iterator& operator++() {
      current_ = reader_->next();
      if (!current_) reader_ = nullptr;
      return *this;
    }
    void operator++(int) { ++*this; }
    bool operator==(const iterator& other) const { return reader_ == other.reader_; }

   private:
    DocumentReader* reader_ = nullptr;
    std::optional<Document> current_;
  };

  iterator begin() { return iterator(this); }
  iterator end() { return iterator(); }

 private:
  JsonlReader reader_;
  FieldMap fields_;
  std::string file_name_;
  std::unordered_set<std::string> seen_ids_;
  std::string last_raw_;
  std::size_t last_line_ = 0;
};

inline DocumentReader stream_documents(const std::filesystem::path& path, FieldMap fields = {}) {
  return DocumentReader(path, std::move(fields));
}

// Audit record of one filtering pass.
struct CorpusManifest {
  uint64_t total_read = 0;
  uint64_t kept = 0;
  std::map<std::string, uint64_t> rejected_by_reason;
  std::string started_at;   // ISO-8601 UTC
  std::string finished_at;  // ISO-8601 UTC
  std::string config_fingerprint;

  uint64_t total_rejected() const;

  // Throws DataError if total_read != kept + sum(rejected_by_reason).
  void validate() const;

  // Adds the counts of `other`; timestamps and fingerprint are left alone.
  void merge_counts(const CorpusManifest& other);

  bool operator==(const CorpusManifest&) const = default;
};

Json to_json(const CorpusManifest& manifest);
CorpusManifest manifest_from_json(const Json& json);

// Validates, then writes pretty-printed JSON.
void write_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);
CorpusManifest read_manifest(const std::filesystem::path& path);

// Sidecar listing rejected documents as JSON lines of {"id", "reason"}.
class RejectionLog {
 public:
  explicit RejectionLog(const std::filesystem::path& path);

  void add(const std::string& id, const std::string& reason);
  void flush();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

// Sidecar path for an output file: "out.jsonl" -> "out.rejected.jsonl".
std::filesystem::path rejected_sidecar_path(const std::filesystem::path& output);

// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp();

// Opens `path` for writing, throwing IoError on failure.
std::ofstream open_for_write(const std::filesystem::path& path, bool append = false);

}  // namespace corpusgate
