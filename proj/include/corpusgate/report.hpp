#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "corpusgate/harness.hpp"
#include "corpusgate/stats.hpp"

namespace corpusgate::report {

enum class Format { kMarkdown, kCsv, kJson };

std::optional<Format> parse_format(std::string_view name) noexcept;

// One line of the model overview table.
struct OverviewRow {
  std::string model;
  std::string size;
  std::optional<double> fertility;
  std::optional<stats::Interval> tokens_per_second;
  std::optional<stats::Interval> seconds;
};

// Weighted F1 per (model, benchmark, repetition), then mean ± CI over
// repetitions, as percentages. Needs at least two repetitions per cell.
stats::ScoreMap score_predictions(std::span<const harness::Prediction> predictions);

// "45.12 ± 1.03"
std::string format_score(double mean, double half_width);
// Whole ranks print without decimals: "3", "1.5".
std::string format_rank(double rank);

std::string emit_report(const stats::ScoreTable& table, std::span<const OverviewRow> overview, Format format);

// Parses the CSV emitted above back into a table.
stats::ScoreTable score_table_from_csv(std::string_view csv);

}  // namespace corpusgate::report
