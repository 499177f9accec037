#include "corpusgate/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

#include "corpusgate/error.hpp"

namespace corpusgate::stats {

namespace {

// t(0.975, df) for df = 1..30.
constexpr std::array<double, 30> kT975 = {
    12.706205, 4.302653, 3.182446, 2.776445, 2.570582, 2.446912, 2.364624, 2.306004, 2.262157, 2.228139,
    2.200985,  2.178813, 2.160369, 2.144787, 2.131450, 2.119905, 2.109816, 2.100922, 2.093024, 2.085963,
    2.079614,  2.073873, 2.068658, 2.063899, 2.059539, 2.055529, 2.051831, 2.048407, 2.045230, 2.042272,
};

std::size_t index_of(const std::vector<std::string>& labels, const std::string& value) {
  auto it = std::find(labels.begin(), labels.end(), value);
  if (it == labels.end()) throw DataError("label '" + value + "' is not in the label set");
  return static_cast<std::size_t>(it - labels.begin());
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::span<const std::string> golds, std::span<const std::string> preds,
                                 std::vector<std::string> labels)
    : labels_(std::move(labels)), counts_(labels_.size() * labels_.size(), 0) {
  if (golds.size() != preds.size()) {
    throw DataError("gold/prediction length mismatch: " + std::to_string(golds.size()) + " vs " +
                    std::to_string(preds.size()));
  }
  if (std::set<std::string>(labels_.begin(), labels_.end()).size() != labels_.size()) {
    throw DataError("label set contains duplicates");
  }
  for (std::size_t i = 0; i < golds.size(); ++i) {
    ++counts_[index_of(labels_, golds[i]) * labels_.size() + index_of(labels_, preds[i])];
  }
  total_ = golds.size();
}

std::size_t ConfusionMatrix::support(std::size_t gold) const {
  std::size_t n = 0;
  for (std::size_t p = 0; p < labels_.size(); ++p) n += count(gold, p);
  return n;
}

std::size_t ConfusionMatrix::predicted(std::size_t pred) const {
  std::size_t n = 0;
  for (std::size_t g = 0; g < labels_.size(); ++g) n += count(g, pred);
  return n;
}

double ConfusionMatrix::f1(std::size_t label) const {
  const auto tp = static_cast<double>(count(label, label));
  const auto pred = static_cast<double>(predicted(label));
  const auto gold = static_cast<double>(support(label));
  const double precision = pred > 0 ? tp / pred : 0.0;
  const double recall = gold > 0 ? tp / gold : 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double weighted_f1(std::span<const std::string> golds, std::span<const std::string> preds,
                   std::span<const std::string> labels) {
  if (golds.empty()) throw DataError("weighted F1 of an empty sample");
  const ConfusionMatrix cm(golds, preds, std::vector<std::string>(labels.begin(), labels.end()));
  double score = 0.0;
  for (std::size_t k = 0; k < cm.labels().size(); ++k) {
    score += static_cast<double>(cm.support(k)) * cm.f1(k);
  }
  return score / static_cast<double>(cm.total());
}

double t_quantile_975(std::size_t df) {
  if (df == 0) throw DataError("t quantile needs at least one degree of freedom");
  return df <= kT975.size() ? kT975[df - 1] : 1.96;
}

Interval confidence_interval(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw DataError("CI needs >=2 runs");
  if (std::all_of(samples.begin(), samples.end(), [&](double x) { return x == samples[0]; })) {
    return {samples[0], 0.0};
  }
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return {mean, t_quantile_975(n - 1) * sd / std::sqrt(static_cast<double>(n))};
}

double median(std::vector<double> values) {
  if (values.empty()) throw DataError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : (values[mid - 1] + values[mid]) / 2.0;
}

std::vector<double> descending_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 hold ranks i+1..j
    const double shared = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = shared;
    i = j;
  }
  return ranks;
}

const ScoreRow* ScoreTable::find(const std::string& model) const {
  auto it = std::find_if(rows.begin(), rows.end(), [&](const ScoreRow& r) { return r.model == model; });
  return it == rows.end() ? nullptr : &*it;
}

ScoreTable rank_and_aggregate(const ScoreMap& scores) {
  std::set<std::string> models, benchmarks;
  for (const auto& [key, cell] : scores) {
    models.insert(key.first);
    benchmarks.insert(key.second);
  }
  if (models.empty()) throw DataError("no scores to aggregate");
  for (const auto& m : models) {
    for (const auto& b : benchmarks) {
      if (!scores.contains({m, b})) throw DataError("missing score for model '" + m + "' on benchmark '" + b + "'");
    }
  }

  ScoreTable table;
  table.benchmarks.assign(benchmarks.begin(), benchmarks.end());
  for (const auto& m : models) {
    ScoreRow row;
    row.model = m;
    for (const auto& b : benchmarks) row.scores[b] = scores.at({m, b});
    table.rows.push_back(std::move(row));
  }

  for (const auto& b : table.benchmarks) {
    std::vector<double> means;
    for (const auto& row : table.rows) means.push_back(row.scores.at(b).mean);
    const auto ranks = descending_ranks(means);
    for (std::size_t i = 0; i < table.rows.size(); ++i) table.rows[i].ranks[b] = ranks[i];
  }
  for (auto& row : table.rows) {
    std::vector<double> ranks;
    for (const auto& [b, r] : row.ranks) ranks.push_back(r);
    row.median_rank = median(std::move(ranks));
  }
  std::stable_sort(table.rows.begin(), table.rows.end(), [](const ScoreRow& a, const ScoreRow& b) {
    return a.median_rank != b.median_rank ? a.median_rank < b.median_rank : a.model < b.model;
  });
  return table;
}

}  // namespace corpusgate::stats
