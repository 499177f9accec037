#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "corpusgate/backends.hpp"
#include "corpusgate/decoder.hpp"
#include "corpusgate/ingest.hpp"
#include "corpusgate/tokenizer.hpp"

namespace corpusgate::harness {

enum class TaskKind { kMultipleChoice, kBinaryLabel, kWicPair };

// The built-in Dutch prompt templates.
enum class PromptTemplate { kDbrd, kDutchCola, kXlwic, kArc, kGlobalMmlu };

enum class ChatMode { kNone, kChatMl };

std::string_view to_string(TaskKind kind) noexcept;
std::string_view to_string(PromptTemplate tmpl) noexcept;
std::optional<TaskKind> parse_task_kind(std::string_view name) noexcept;
std::optional<PromptTemplate> parse_prompt_template(std::string_view name) noexcept;
std::optional<ChatMode> parse_chat_mode(std::string_view name) noexcept;

// Task kind a template belongs to.
TaskKind task_kind_of(PromptTemplate tmpl) noexcept;

// Template variables a template reads from each record.
std::vector<std::string> template_variables(PromptTemplate tmpl);

struct BenchmarkConfig {
  std::string name;
  TaskKind task_kind = TaskKind::kBinaryLabel;
  PromptTemplate prompt = PromptTemplate::kDbrd;
  std::filesystem::path data_path;
  std::map<std::string, std::string> field_map;  // record field -> template variable
  std::vector<std::string> labels;
  std::vector<std::string> option_fields;        // multiple choice, aligned with labels
  std::string gold_field = "label";
  std::map<std::string, std::string> gold_map;   // raw gold value -> label
  std::string id_field = "id";
  std::string base_suffix;                       // may reference {variables}
  std::string label_prefix;
  std::size_t repetitions = 5;
  uint64_t base_seed = 0;

  // Throws DataError on violated invariants.
  void validate() const;

  Json to_json() const;
};

// Relative data paths are resolved against `base_dir`.
BenchmarkConfig benchmark_config_from_json(const Json& json, const std::filesystem::path& base_dir = {});
BenchmarkConfig load_benchmark_config(const std::filesystem::path& path);

// The shipped configuration for a built-in template.
BenchmarkConfig preset(PromptTemplate tmpl);

// Record field holding a template variable.
std::string field_for(const BenchmarkConfig& cfg, const std::string& variable);

// Replaces {name} placeholders; unknown names throw DataError.
std::string substitute(std::string_view text, const std::map<std::string, std::string>& vars);

// "'A', 'B', 'C' of 'D'"
std::string join_quoted_alternatives(const std::vector<std::string>& items);

std::string chatml_wrap(std::string_view prompt);

// Renders one record. `item_id` only appears in error messages.
std::string render_prompt(const BenchmarkConfig& cfg, const Json& record, ChatMode chat_mode,
                          std::string_view item_id = "?");

struct EvalItem {
  std::string id;
  std::string rendered_prompt;
  std::string gold_label;
};

// Reads and renders every record of cfg.data_path, in file order.
std::vector<EvalItem> load_items(const BenchmarkConfig& cfg, ChatMode chat_mode);

// Normalizes a raw gold value through cfg.gold_map and checks membership.
std::string normalize_gold(const BenchmarkConfig& cfg, const Json& value, std::string_view item_id);

struct Prediction {
  std::string benchmark;
  std::string model;
  std::string item_id;
  std::size_t repetition = 0;
  std::string sampled_label;
  std::string gold_label;
  std::size_t steps = 0;
  uint64_t seed = 0;

  bool operator==(const Prediction&) const = default;
};

Json to_json(const Prediction& p);
Prediction prediction_from_json(const Json& json);
std::vector<Prediction> load_predictions(const std::filesystem::path& path);

// FNV-1a over base seed, repetition (8 bytes LE each) and the item id bytes.
uint64_t item_seed(uint64_t base_seed, std::size_t repetition, std::string_view item_id);

struct RunOptions {
  ChatMode chat_mode = ChatMode::kNone;
  std::string model_name = "model";
  std::size_t jobs = 1;
  // Repetitions to run; empty = all of [0, cfg.repetitions).
  std::vector<std::size_t> only_repetitions;
  // Predictions are appended here as each repetition completes.
  std::optional<std::filesystem::path> predictions_path;
};

std::vector<Prediction> run_benchmark(const BenchmarkConfig& cfg, ModelBackend& backend, const Tokenizer& tokenizer,
                                      const decoder::LabelTrie& trie, const RunOptions& options = {});

// Same, over pre-rendered items.
std::vector<Prediction> run_items(const BenchmarkConfig& cfg, const std::vector<EvalItem>& items,
                                  ModelBackend& backend, const Tokenizer& tokenizer, const decoder::LabelTrie& trie,
                                  const RunOptions& options = {});

// Dataset converters from common published layouts into the JSONL the
// benchmark configs expect.
enum class ImportFormat { kDbrd, kDutchCola, kXlwic };

std::optional<ImportFormat> parse_import_format(std::string_view name) noexcept;

struct ImportSummary {
  std::size_t records = 0;
  std::map<std::string, std::size_t> label_counts;
};

// Input may be JSONL or a CSV/TSV file with a header row.
ImportSummary import_dataset(ImportFormat format, const std::filesystem::path& input,
                             const std::filesystem::path& output);

// One row of a delimited file; handles double-quoted fields.
std::vector<std::string> split_delimited(std::string_view line, char delimiter);

}  // namespace corpusgate::harness
