#include "corpusgate/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "corpusgate/error.hpp"

namespace corpusgate::report {

namespace {

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string full_precision(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string markdown_row(const std::vector<std::string>& cells) {
  std::string out = "|";
  for (const auto& c : cells) out += " " + c + " |";
  return out + "\n";
}

std::string markdown_rule(std::size_t columns) {
  std::string out = "|";
  for (std::size_t i = 0; i < columns; ++i) out += "---|";
  return out + "\n";
}

std::string interval_or_dash(const std::optional<stats::Interval>& iv) {
  return iv ? format_score(iv->mean, iv->half_width) : "-";
}

std::string emit_markdown(const stats::ScoreTable& table, std::span<const OverviewRow> overview) {
  std::string out;
  if (!overview.empty()) {
    out += markdown_row({"model", "size", "wiki fertility", "wiki tps", "wiki s"});
    out += markdown_rule(5);
    for (const auto& row : overview) {
      out += markdown_row({row.model, row.size.empty() ? "-" : row.size,
                           row.fertility ? fixed2(*row.fertility) : "-", interval_or_dash(row.tokens_per_second),
                           interval_or_dash(row.seconds)});
    }
    out += "\n";
  }
  std::vector<std::string> header{"model"};
  for (const auto& b : table.benchmarks) {
    header.push_back(b);
    header.push_back(b + " rank");
  }
  header.push_back("median rank");
  out += markdown_row(header);
  out += markdown_rule(header.size());
  for (const auto& row : table.rows) {
    std::vector<std::string> cells{row.model};
    for (const auto& b : table.benchmarks) {
      const auto& cell = row.scores.at(b);
      cells.push_back(format_score(cell.mean, cell.half_width));
      cells.push_back(format_rank(row.ranks.at(b)));
    }
    cells.push_back(format_rank(row.median_rank));
    out += markdown_row(cells);
  }
  return out;
}

std::string emit_csv(const stats::ScoreTable& table) {
  std::string out = "model,benchmark,mean_f1,ci_half_width,rank,median_rank\n";
  for (const auto& row : table.rows) {
    for (const auto& b : table.benchmarks) {
      const auto& cell = row.scores.at(b);
      out += csv_field(row.model) + "," + csv_field(b) + "," + full_precision(cell.mean) + "," +
             full_precision(cell.half_width) + "," + full_precision(row.ranks.at(b)) + "," +
             full_precision(row.median_rank) + "\n";
    }
  }
  return out;
}

std::string emit_json(const stats::ScoreTable& table, std::span<const OverviewRow> overview) {
  Json models = Json::array();
  for (const auto& row : table.rows) {
    Json scores = Json::object();
    for (const auto& b : table.benchmarks) {
      const auto& cell = row.scores.at(b);
      scores[b] = {{"mean_f1", cell.mean}, {"ci_half_width", cell.half_width}, {"rank", row.ranks.at(b)}};
    }
    models.push_back({{"model", row.model}, {"median_rank", row.median_rank}, {"scores", std::move(scores)}});
  }
  auto interval = [](const std::optional<stats::Interval>& iv) {
    return iv ? Json{{"mean", iv->mean}, {"ci_half_width", iv->half_width}} : Json(nullptr);
  };
  Json rows = Json::array();
  for (const auto& row : overview) {
    rows.push_back({{"model", row.model},
                    {"size", row.size},
                    {"fertility", row.fertility ? Json(*row.fertility) : Json(nullptr)},
                    {"tokens_per_second", interval(row.tokens_per_second)},
                    {"seconds", interval(row.seconds)}});
  }
  return Json{{"benchmarks", table.benchmarks}, {"models", std::move(models)}, {"overview", std::move(rows)}}.dump(2) +
         "\n";
}

}  // namespace

std::optional<Format> parse_format(std::string_view name) noexcept {
  if (name == "markdown" || name == "md") return Format::kMarkdown;
  if (name == "csv") return Format::kCsv;
  if (name == "json") return Format::kJson;
  return std::nullopt;
}

stats::ScoreMap score_predictions(std::span<const harness::Prediction> predictions) {
  // (model, benchmark) -> repetition -> (golds, preds)
  std::map<std::pair<std::string, std::string>,
           std::map<std::size_t, std::pair<std::vector<std::string>, std::vector<std::string>>>>
      groups;
  std::map<std::pair<std::string, std::string>, std::set<std::string>> labels;
  std::set<std::tuple<std::string, std::string, std::size_t, std::string>> seen;
  for (const auto& p : predictions) {
    if (p.gold_label.empty()) throw DataError("prediction for item '" + p.item_id + "' has no gold label");
    if (!seen.emplace(p.model, p.benchmark, p.repetition, p.item_id).second) {
      throw DataError("duplicate prediction: model '" + p.model + "', benchmark '" + p.benchmark + "', repetition " +
                      std::to_string(p.repetition) + ", item '" + p.item_id + "'");
    }
    auto& [golds, preds] = groups[{p.model, p.benchmark}][p.repetition];
    golds.push_back(p.gold_label);
    preds.push_back(p.sampled_label);
    auto& set = labels[{p.model, p.benchmark}];
    set.insert(p.gold_label);
    set.insert(p.sampled_label);
  }

  stats::ScoreMap scores;
  for (const auto& [key, reps] : groups) {
    const std::vector<std::string> label_list(labels[key].begin(), labels[key].end());
    std::vector<double> f1s;
    for (const auto& [rep, gp] : reps) f1s.push_back(100.0 * stats::weighted_f1(gp.first, gp.second, label_list));
    if (f1s.size() < 2) {
      throw DataError("model '" + key.first + "' on '" + key.second + "': CI needs >=2 runs, found " +
                      std::to_string(f1s.size()));
    }
    const auto iv = stats::confidence_interval(f1s);
    scores[key] = {iv.mean, iv.half_width};
  }
  return scores;
}

std::string format_score(double mean, double half_width) { return fixed2(mean) + " ± " + fixed2(half_width); }

std::string format_rank(double rank) {
  char buf[32];
  if (rank == std::floor(rank)) {
    std::snprintf(buf, sizeof buf, "%.0f", rank);
  } else {
    std::snprintf(buf, sizeof buf, "%g", rank);
  }
  return buf;
}

std::string emit_report(const stats::ScoreTable& table, std::span<const OverviewRow> overview, Format format) {
  switch (format) {
    case Format::kMarkdown: return emit_markdown(table, overview);
    case Format::kCsv: return emit_csv(table);
    case Format::kJson: return emit_json(table, overview);
  }
  return {};
}

stats::ScoreTable score_table_from_csv(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line) || line != "model,benchmark,mean_f1,ci_half_width,rank,median_rank") {
    throw DataError("score CSV: unexpected header");
  }
  stats::ScoreTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = harness::split_delimited(line, ',');
    if (cells.size() != 6) throw DataError("score CSV line " + std::to_string(line_no) + ": expected 6 columns");
    const auto& model = cells[0];
    const auto& bench = cells[1];
    if (std::find(table.benchmarks.begin(), table.benchmarks.end(), bench) == table.benchmarks.end()) {
      table.benchmarks.push_back(bench);
    }
    if (table.rows.empty() || table.rows.back().model != model) {
      table.rows.push_back({});
      table.rows.back().model = model;
    }
    auto& row = table.rows.back();
    try {
      row.scores[bench] = {std::stod(cells[2]), std::stod(cells[3])};
      row.ranks[bench] = std::stod(cells[4]);
      row.median_rank = std::stod(cells[5]);
    } catch (const std::logic_error&) {
      throw DataError("score CSV line " + std::to_string(line_no) + ": bad number");
    }
  }
  return table;
}

}  // namespace corpusgate::report
