#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "corpusgate/backends.hpp"
#include "corpusgate/ingest.hpp"
#include "corpusgate/stats.hpp"
#include "corpusgate/tokenizer.hpp"

namespace corpusgate::metrics {

// Word-mode encodes every whitespace-delimited word on its own (non-initial
// words with one leading space); doc-mode encodes the whole document once.
enum class FertilityMode { kWord, kDoc };

std::optional<FertilityMode> parse_fertility_mode(std::string_view name);

struct DocFertility {
  std::string id;
  uint64_t tokens = 0;
  uint64_t words = 0;
};

struct FertilityStats {
  uint64_t total_words = 0;
  uint64_t total_tokens = 0;
  double fertility = 0;  // total_tokens / total_words
  std::vector<DocFertility> per_doc;
};

// Counts for one document.
DocFertility count_document(const Tokenizer& tokenizer, const Document& doc, FertilityMode mode);

// Associative accumulator; partial accumulators from parallel workers merge.
class FertilityAccumulator {
 public:
  explicit FertilityAccumulator(bool keep_per_doc = false) : keep_per_doc_(keep_per_doc) {}

  void add(DocFertility counts);
  void merge(FertilityAccumulator&& other);

  // Throws DataError("empty corpus") when no words were seen.
  FertilityStats finish() const;

 private:
  bool keep_per_doc_;
  uint64_t words_ = 0;
  uint64_t tokens_ = 0;
  std::vector<DocFertility> per_doc_;
};

FertilityStats fertility(const Tokenizer& tokenizer, std::span<const Document> docs,
                         FertilityMode mode = FertilityMode::kWord, bool keep_per_doc = false);

// Monotonic time source, injectable for tests.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::chrono::nanoseconds now() = 0;
};

class SteadyClock final : public Clock {
 public:
  std::chrono::nanoseconds now() override { return std::chrono::steady_clock::now().time_since_epoch(); }
};

// Advances by a fixed step on every reading.
class ScriptedClock final : public Clock {
 public:
  explicit ScriptedClock(std::chrono::nanoseconds step, std::chrono::nanoseconds start = {})
      : step_(step), current_(start) {}

  std::chrono::nanoseconds now() override {
    const auto t = current_;
    current_ += step_;
    return t;
  }

 private:
  std::chrono::nanoseconds step_;
  std::chrono::nanoseconds current_;
};

inline constexpr std::size_t kMaxContextCeiling = 8192;

struct RunTiming {
  uint64_t tokens = 0;
  std::chrono::nanoseconds elapsed{0};
  double tokens_per_second = 0;
  double seconds = 0;
};

struct TimingReport {
  std::size_t runs = 0;
  stats::Interval tokens_per_second;  // half_width only meaningful when runs >= 2
  stats::Interval total_seconds;
  bool has_ci = false;
  uint64_t docs_processed = 0;  // per run
  std::size_t max_context = 0;  // effective context after the ceiling
  std::vector<RunTiming> per_run;
};

// Batch size 1: every document is encoded, truncated to the effective
// context, and sent through one forward call. Only the forward call is timed.
// Documents that encode to nothing are skipped.
TimingReport throughput(ModelBackend& backend, const Tokenizer& tokenizer, std::span<const Document> docs,
                        std::size_t max_context, std::size_t runs, Clock& clock);

Json to_json(const FertilityStats& stats);
Json to_json(const TimingReport& report);

}  // namespace corpusgate::metrics
