#include "corpusgate/textmetrics.hpp"

#include <algorithm>

#include "corpusgate/error.hpp"
#include "corpusgate/unicode.hpp"

namespace corpusgate::metrics {

namespace {

std::vector<std::string> split_words(std::string_view text) {
  const std::u32string cps = unicode::decode_utf8(text);
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < cps.size()) {
    if (unicode::is_whitespace(cps[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < cps.size() && !unicode::is_whitespace(cps[j])) ++j;
    words.push_back(unicode::encode_utf8(std::u32string_view(cps).substr(i, j - i)));
    i = j;
  }
  return words;
}

}  // namespace

std::optional<FertilityMode> parse_fertility_mode(std::string_view name) {
  if (name == "word") return FertilityMode::kWord;
  if (name == "doc") return FertilityMode::kDoc;
  return std::nullopt;
}

DocFertility count_document(const Tokenizer& tokenizer, const Document& doc, FertilityMode mode) {
  DocFertility counts{doc.id, 0, 0};
  const auto words = split_words(doc.text);
  counts.words = words.size();
  if (mode == FertilityMode::kDoc) {
    counts.tokens = tokenizer.encode(doc.text).size();
    return counts;
  }
  std::string buffer;
  for (std::size_t i = 0; i < words.size(); ++i) {
    buffer.clear();
    if (i > 0) buffer.push_back(' ');
    buffer += words[i];
    counts.tokens += tokenizer.encode(buffer).size();
  }
  return counts;
}

void FertilityAccumulator::add(DocFertility counts) {
  words_ += counts.words;
  tokens_ += counts.tokens;
  if (keep_per_doc_) per_doc_.push_back(std::move(counts));
}

void FertilityAccumulator::merge(FertilityAccumulator&& other) {
  words_ += other.words_;
  tokens_ += other.tokens_;
  if (keep_per_doc_) {
    per_doc_.insert(per_doc_.end(), std::make_move_iterator(other.per_doc_.begin()),
                    std::make_move_iterator(other.per_doc_.end()));
  }
}

FertilityStats FertilityAccumulator::finish() const {
  if (words_ == 0) throw DataError("empty corpus");
  FertilityStats stats;
  stats.total_words = words_;
  stats.total_tokens = tokens_;
  stats.fertility = static_cast<double>(tokens_) / static_cast<double>(words_);
  stats.per_doc = per_doc_;
  return stats;
}

FertilityStats fertility(const Tokenizer& tokenizer, std::span<const Document> docs, FertilityMode mode,
                         bool keep_per_doc) {
  FertilityAccumulator acc(keep_per_doc);
  for (const auto& doc : docs) acc.add(count_document(tokenizer, doc, mode));
  return acc.finish();
}

TimingReport throughput(ModelBackend& backend, const Tokenizer& tokenizer, std::span<const Document> docs,
                        std::size_t max_context, std::size_t runs, Clock& clock) {
  if (runs == 0) throw DataError("throughput needs at least one run");
  if (max_context == 0) throw DataError("max_context must be positive");

  TimingReport report;
  report.runs = runs;
  report.max_context = std::min(max_context, kMaxContextCeiling);

  // Encoding is identical across runs and not part of the timed region.
  std::vector<std::vector<TokenId>> encoded;
  encoded.reserve(docs.size());
  for (const auto& doc : docs) {
    auto ids = tokenizer.encode(doc.text);
    if (ids.size() > report.max_context) ids.resize(report.max_context);
    encoded.push_back(std::move(ids));
  }

  std::vector<double> tps, seconds;
  for (std::size_t run = 0; run < runs; ++run) {
    RunTiming timing;
    uint64_t processed = 0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      const auto& ids = encoded[i];
      if (ids.empty()) continue;
      const auto start = clock.now();
      try {
        backend.forward(ids);
      } catch (const BackendError& e) {
        throw BackendError(e.kind(), "run " + std::to_string(run) + ", doc '" + docs[i].id + "': " + e.what());
      }
      timing.elapsed += clock.now() - start;
      timing.tokens += ids.size();
      ++processed;
    }
    if (timing.elapsed.count() <= 0) throw DataError("run " + std::to_string(run) + " measured no elapsed time");
    timing.seconds = static_cast<double>(timing.elapsed.count()) / 1e9;
    timing.tokens_per_second = static_cast<double>(timing.tokens) * 1e9 / static_cast<double>(timing.elapsed.count());
    tps.push_back(timing.tokens_per_second);
    seconds.push_back(timing.seconds);
    report.per_run.push_back(timing);
    report.docs_processed = processed;
  }

  if (runs >= 2) {
    report.tokens_per_second = stats::confidence_interval(tps);
    report.total_seconds = stats::confidence_interval(seconds);
    report.has_ci = true;
  } else {
    report.tokens_per_second = {tps.front(), 0.0};
    report.total_seconds = {seconds.front(), 0.0};
  }
  return report;
}

Json to_json(const FertilityStats& stats) {
  Json json{{"total_words", stats.total_words}, {"total_tokens", stats.total_tokens}, {"fertility", stats.fertility}};
  if (!stats.per_doc.empty()) {
    Json docs = Json::array();
    for (const auto& d : stats.per_doc) docs.push_back({{"id", d.id}, {"tokens", d.tokens}, {"words", d.words}});
    json["per_doc"] = std::move(docs);
  }
  return json;
}

Json to_json(const TimingReport& report) {
  auto interval = [&](const stats::Interval& iv) {
    Json j{{"mean", iv.mean}};
    j["ci_half_width"] = report.has_ci ? Json(iv.half_width) : Json(nullptr);
    return j;
  };
  Json runs = Json::array();
  for (const auto& r : report.per_run) {
    runs.push_back({{"tokens", r.tokens}, {"seconds", r.seconds}, {"tokens_per_second", r.tokens_per_second}});
  }
  return Json{{"runs", report.runs},
              {"tokens_per_second", interval(report.tokens_per_second)},
              {"total_seconds", interval(report.total_seconds)},
              {"docs_processed", report.docs_processed},
              {"max_context", report.max_context},
              {"per_run", std::move(runs)}};
}

}  // namespace corpusgate::metrics
