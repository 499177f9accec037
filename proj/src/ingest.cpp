#include "corpusgate/ingest.hpp"

#include <chrono>
#include <ctime>
#include <numeric>

#include "corpusgate/error.hpp"
#include "corpusgate/unicode.hpp"

namespace corpusgate {

namespace {

std::string line_prefix(std::size_t line) { return "line " + std::to_string(line) + ": "; }

std::string scalar_to_string(const Json& value) {
  if (value.is_string()) return value.get<std::string>();
  return value.dump();
}

}  // namespace

JsonlReader::JsonlReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw IoError("cannot open " + path.string());
}

std::optional<JsonlRecord> JsonlReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    if (auto bad = unicode::find_invalid_utf8(line)) {
      throw DataError(line_prefix(line_) + "invalid UTF-8 at byte " + std::to_string(*bad));
    }
    JsonlRecord record;
    record.line = line_;
    try {
      record.value = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw DataError(line_prefix(line_) + "malformed JSON (" + e.what() + ")");
    }
    if (!record.value.is_object()) {
      throw DataError(line_prefix(line_) + "record is not a JSON object");
    }
    record.raw = std::move(line);
    return record;
  }
  if (in_.bad()) throw IoError("read error on " + path_.string());
  return std::nullopt;
}

DocumentReader::DocumentReader(const std::filesystem::path& path, FieldMap fields)
    : reader_(path), fields_(std::move(fields)), file_name_(path.filename().string()) {}

std::optional<Document> DocumentReader::next() {
  auto record = reader_.next();
  if (!record) return std::nullopt;
  const std::size_t line = record->line;
  const Json& obj = record->value;

  Document doc;
  auto text = obj.find(fields_.text);
  if (text == obj.end()) {
    throw DataError(line_prefix(line) + "missing text field '" + fields_.text + "'");
  }
  if (!text->is_string()) {
    throw DataError(line_prefix(line) + "text field not a string (key '" + fields_.text + "')");
  }
  doc.text = text->get<std::string>();

  auto id = obj.find(fields_.id);
  if (id == obj.end() || id->is_null()) {
    doc.id = file_name_ + ":" + std::to_string(line);
  } else if (id->is_string() || id->is_number_integer()) {
    doc.id = scalar_to_string(*id);
  } else {
    throw DataError(line_prefix(line) + "id field must be a string or integer (key '" + fields_.id + "')");
  }
  if (doc.id.empty()) throw DataError(line_prefix(line) + "empty document id");
  if (!seen_ids_.insert(doc.id).second) {
    throw DataError(line_prefix(line) + "duplicate document id '" + doc.id + "'");
  }

  auto url = obj.find(fields_.url);
  if (url != obj.end() && !url->is_null()) {
    if (!url->is_string()) {
      throw DataError(line_prefix(line) + "url field not a string (key '" + fields_.url + "')");
    }
    doc.url = url->get<std::string>();
  }

  for (const auto& [key, value] : obj.items()) {
    if (key == fields_.text || key == fields_.id || key == fields_.url) continue;
    if (value.is_primitive() && !value.is_null()) doc.meta.emplace(key, scalar_to_string(value));
  }

  last_raw_ = std::move(record->raw);
  last_line_ = line;
  return doc;
}

uint64_t CorpusManifest::total_rejected() const {
  return std::accumulate(rejected_by_reason.begin(), rejected_by_reason.end(), uint64_t{0},
                         [](uint64_t acc, const auto& kv) { return acc + kv.second; });
}

void CorpusManifest::validate() const {
  const uint64_t rejected = total_rejected();
  if (total_read != kept + rejected) {
    throw DataError("manifest invariant violated: total_read " + std::to_string(total_read) +
                    " != kept " + std::to_string(kept) + " + rejected " + std::to_string(rejected));
  }
}

void CorpusManifest::merge_counts(const CorpusManifest& other) {
  total_read += other.total_read;
  kept += other.kept;
  for (const auto& [reason, n] : other.rejected_by_reason) rejected_by_reason[reason] += n;
}

Json to_json(const CorpusManifest& m) {
  Json rejected = Json::object();
  for (const auto& [reason, n] : m.rejected_by_reason) rejected[reason] = n;
  return Json{{"total_read", m.total_read},
              {"kept", m.kept},
              {"rejected_by_reason", rejected},
              {"started_at", m.started_at},
              {"finished_at", m.finished_at},
              {"config_fingerprint", m.config_fingerprint}};
}

CorpusManifest manifest_from_json(const Json& json) {
  CorpusManifest m;
  try {
    m.total_read = json.at("total_read").get<uint64_t>();
    m.kept = json.at("kept").get<uint64_t>();
    for (const auto& [reason, n] : json.at("rejected_by_reason").items()) {
      m.rejected_by_reason[reason] = n.get<uint64_t>();
    }
    m.started_at = json.value("started_at", "");
    m.finished_at = json.value("finished_at", "");
    m.config_fingerprint = json.value("config_fingerprint", "");
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
  m.validate();
  return m;
}

void write_manifest(const CorpusManifest& manifest, const std::filesystem::path& path) {
  manifest.validate();
  auto out = open_for_write(path);
  out << to_json(manifest).dump(2) << '\n';
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

CorpusManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Json json;
  try {
    json = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return manifest_from_json(json);
}

RejectionLog::RejectionLog(const std::filesystem::path& path) : path_(path), out_(open_for_write(path)) {}

void RejectionLog::add(const std::string& id, const std::string& reason) {
  out_ << Json{{"id", id}, {"reason", reason}}.dump() << '\n';
}

void RejectionLog::flush() {
  out_.flush();
  if (!out_) throw IoError("write failed: " + path_.string());
}

std::filesystem::path rejected_sidecar_path(const std::filesystem::path& output) {
  auto sidecar = output;
  sidecar.replace_filename(output.stem().string() + ".rejected.jsonl");
  return sidecar;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::ofstream open_for_write(const std::filesystem::path& path, bool append) {
  std::ofstream out(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

}  // namespace corpusgate
