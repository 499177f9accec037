#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace corpusgate::stats {

// rows = gold, cols = predicted
class ConfusionMatrix {
 public:
  ConfusionMatrix(std::span<const std::string> golds, std::span<const std::string> preds,
                  std::vector<std::string> labels);

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t count(std::size_t gold, std::size_t pred) const { return counts_[gold * labels_.size() + pred]; }
  std::size_t total() const noexcept { return total_; }
  std::size_t support(std::size_t gold) const;
  std::size_t predicted(std::size_t pred) const;

  // 2PR/(P+R), 0 when P+R == 0.
  double f1(std::size_t label) const;

 private:
  std::vector<std::string> labels_;
  std::vector<std::size_t> counts_;
  std::size_t total_ = 0;
};

// Per-class F1 averaged with weights proportional to gold support.
double weighted_f1(std::span<const std::string> golds, std::span<const std::string> preds,
                   std::span<const std::string> labels);

struct Interval {
  double mean = 0;
  double half_width = 0;
};

// Two-sided 97.5% Student-t quantile for `df` degrees of freedom; 1.96 above 30.
double t_quantile_975(std::size_t df);

// mean ± t(0.975, n-1) * s / sqrt(n), with the n-1 sample deviation.
Interval confidence_interval(std::span<const double> samples);

struct Cell {
  double mean = 0;        // percentage
  double half_width = 0;  // percentage
};

struct ScoreRow {
  std::string model;
  std::map<std::string, Cell> scores;   // per benchmark
  std::map<std::string, double> ranks;  // per benchmark; ties share the average rank
  double median_rank = 0;
};

struct ScoreTable {
  std::vector<std::string> benchmarks;  // column order
  std::vector<ScoreRow> rows;           // ascending median rank, then model name

  const ScoreRow* find(const std::string& model) const;
};

using ScoreMap = std::map<std::pair<std::string, std::string>, Cell>;  // (model, benchmark)

// Ranks every benchmark (1 = highest mean) and orders models by median rank.
ScoreTable rank_and_aggregate(const ScoreMap& scores);

double median(std::vector<double> values);

// Average ranks, 1 = highest value; exact ties share the mean of their ranks.
std::vector<double> descending_ranks(std::span<const double> values);

}  // namespace corpusgate::stats
