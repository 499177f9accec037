#include <fstream>
#include <set>

#include "corpusgate/error.hpp"
#include "corpusgate/harness.hpp"

namespace corpusgate::harness {

namespace {

struct FormatSpec {
  std::string prefix;                      // synthesized id prefix
  std::vector<std::string> text_fields;    // copied verbatim
  std::string label_field;                 // source field of the gold label
  std::map<std::string, std::string> label_map;
};

FormatSpec spec_for(ImportFormat format) {
  switch (format) {
    case ImportFormat::kDbrd:
      return {"dbrd", {"text"}, "label", {{"1", "positief"}, {"0", "negatief"}, {"pos", "positief"}, {"neg", "negatief"}}};
    case ImportFormat::kDutchCola:
      return {"dutch_cola", {"Sentence"}, "Acceptability", {{"1", "grammaticaal"}, {"0", "ongrammaticaal"}}};
    case ImportFormat::kXlwic:
      return {"xlwic", {"target_word", "example_1", "example_2"}, "label", {{"1", "identiek"}, {"0", "verschillend"}}};
  }
  return {};
}

bool quotes_balanced(std::string_view text) {
  std::size_t quotes = 0;
  for (char c : text) quotes += c == '"';
  return quotes % 2 == 0;
}

// Reads rows as JSON objects, from JSONL or from a delimited file with header.
template <typename Fn>
void for_each_row(const std::filesystem::path& input, Fn&& fn) {
  const auto ext = input.extension().string();
  if (ext == ".jsonl" || ext == ".json") {
    JsonlReader reader(input);
    while (auto record = reader.next()) fn(record->line, record->value);
    return;
  }
  if (ext != ".csv" && ext != ".tsv") {
    throw DataError("import: unsupported input extension '" + ext + "' (jsonl, csv, tsv)");
  }
  const char delimiter = ext == ".tsv" ? '\t' : ',';
  std::ifstream in(input, std::ios::binary);
  if (!in) throw IoError("cannot open " + input.string());

  std::vector<std::string> header;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    const std::size_t start_line = ++line_no;
    // Quoted fields may span lines.
    std::string next;
    while (!quotes_balanced(line) && std::getline(in, next)) {
      ++line_no;
      line += "\n" + next;
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_delimited(line, delimiter);
    if (header.empty()) {
      header = std::move(cells);
      continue;
    }
    if (cells.size() != header.size()) {
      throw DataError(input.string() + ": line " + std::to_string(start_line) + ": expected " +
                      std::to_string(header.size()) + " columns, got " + std::to_string(cells.size()));
    }
    Json row = Json::object();
    for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = cells[i];
    fn(start_line, row);
  }
}

std::string scalar(const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

std::optional<ImportFormat> parse_import_format(std::string_view name) noexcept {
  if (name == "dbrd") return ImportFormat::kDbrd;
  if (name == "dutch_cola") return ImportFormat::kDutchCola;
  if (name == "xlwic") return ImportFormat::kXlwic;
  return std::nullopt;
}

std::vector<std::string> split_delimited(std::string_view line, char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell.push_back(c);
      }
    } else if (c == '"' && cell.empty()) {
      quoted = true;
    } else if (c == delimiter) {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

ImportSummary import_dataset(ImportFormat format, const std::filesystem::path& input,
                             const std::filesystem::path& output) {
  const FormatSpec spec = spec_for(format);
  std::set<std::string> valid_labels;
  for (const auto& [raw, label] : spec.label_map) valid_labels.insert(label);

  auto out = open_for_write(output);
  ImportSummary summary;
  for_each_row(input, [&](std::size_t line, const Json& row) {
    const std::string where = input.filename().string() + ":" + std::to_string(line);
    Json record = Json::object();
    if (auto id = row.find("id"); id != row.end() && !id->is_null() && !scalar(*id).empty()) {
      record["id"] = scalar(*id);
    } else {
      record["id"] = spec.prefix + "-" + std::to_string(summary.records);
    }
    for (const auto& field : spec.text_fields) {
      auto it = row.find(field);
      if (it == row.end() || it->is_null()) throw DataError(where + ": missing field '" + field + "'");
      record[field] = scalar(*it);
    }
    auto label = row.find(spec.label_field);
    if (label == row.end() || label->is_null()) throw DataError(where + ": missing field '" + spec.label_field + "'");
    std::string value = scalar(*label);
    if (auto mapped = spec.label_map.find(value); mapped != spec.label_map.end()) value = mapped->second;
    if (!valid_labels.contains(value)) throw DataError(where + ": unrecognized label '" + scalar(*label) + "'");
    record["label"] = value;
    ++summary.label_counts[value];
    ++summary.records;
    out << record.dump() << '\n';
  });
  out.flush();
  if (!out) throw IoError("write failed: " + output.string());
  return summary;
}

}  // namespace corpusgate::harness
