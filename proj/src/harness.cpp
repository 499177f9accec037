#include "corpusgate/harness.hpp"

#include <algorithm>
#include <set>

#include "corpusgate/config.hpp"
#include "corpusgate/error.hpp"
#include "corpusgate/hash.hpp"
#include "parallel.hpp"

namespace corpusgate::harness {

namespace {

constexpr std::string_view kTaskKindNames[] = {"multiple_choice", "binary_label", "wic_pair"};
constexpr std::string_view kTemplateNames[] = {"dbrd", "dutch_cola", "xlwic", "arc", "global_mmlu"};

std::string record_string(const Json& record, const std::string& field, std::string_view item_id) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) {
    throw DataError("item " + std::string(item_id) + ": missing field '" + field + "'");
  }
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number() || it->is_boolean()) return it->dump();
  throw DataError("item " + std::string(item_id) + ": field '" + field + "' is not a scalar");
}

std::map<std::string, std::string> template_values(const BenchmarkConfig& cfg, const Json& record,
                                                   std::string_view item_id) {
  std::map<std::string, std::string> vars;
  for (const auto& var : template_variables(cfg.prompt)) vars[var] = record_string(record, field_for(cfg, var), item_id);
  return vars;
}

std::string render_multiple_choice(const BenchmarkConfig& cfg, const Json& record, const std::string& stem,
                                   std::string_view item_id) {
  std::string out = stem;
  out += "\n\nAntwoordopties:\n";
  std::vector<std::string> letters;
  for (std::size_t i = 0; i < cfg.option_fields.size(); ++i) {
    const auto& field = cfg.option_fields[i];
    if (!record.contains(field)) {
      throw DataError("item " + std::string(item_id) + ": missing field '" + field + "'");
    }
    const Json& value = record.at(field);
    // Absent options (null or empty) are left out, as in questions with
    // fewer than four answers.
    if (value.is_null() || (value.is_string() && value.get<std::string>().empty())) continue;
    out += cfg.labels[i] + ". " + record_string(record, field, item_id) + "\n";
    letters.push_back(cfg.labels[i]);
  }
  if (letters.empty()) throw DataError("item " + std::string(item_id) + ": no answer options");
  out += "\nAntwoord met " + join_quoted_alternatives(letters) + ".";
  return out;
}

template <typename T>
void read_if(const Json& json, const char* key, T& out) {
  auto it = json.find(key);
  if (it == json.end()) return;
  try {
    out = it->get<T>();
  } catch (const Json::exception& e) {
    throw DataError(std::string("benchmark config key '") + key + "': " + e.what());
  }
}

}  // namespace

std::string_view to_string(TaskKind kind) noexcept { return kTaskKindNames[static_cast<std::size_t>(kind)]; }
std::string_view to_string(PromptTemplate tmpl) noexcept { return kTemplateNames[static_cast<std::size_t>(tmpl)]; }

std::optional<TaskKind> parse_task_kind(std::string_view name) noexcept {
  for (std::size_t i = 0; i < std::size(kTaskKindNames); ++i) {
    if (kTaskKindNames[i] == name) return static_cast<TaskKind>(i);
  }
  return std::nullopt;
}

std::optional<PromptTemplate> parse_prompt_template(std::string_view name) noexcept {
  for (std::size_t i = 0; i < std::size(kTemplateNames); ++i) {
    if (kTemplateNames[i] == name) return static_cast<PromptTemplate>(i);
  }
  return std::nullopt;
}

std::optional<ChatMode> parse_chat_mode(std::string_view name) noexcept {
  if (name == "none") return ChatMode::kNone;
  if (name == "chatml") return ChatMode::kChatMl;
  return std::nullopt;
}

TaskKind task_kind_of(PromptTemplate tmpl) noexcept {
  switch (tmpl) {
    case PromptTemplate::kDbrd:
    case PromptTemplate::kDutchCola: return TaskKind::kBinaryLabel;
    case PromptTemplate::kXlwic: return TaskKind::kWicPair;
    case PromptTemplate::kArc:
    case PromptTemplate::kGlobalMmlu: return TaskKind::kMultipleChoice;
  }
  return TaskKind::kBinaryLabel;
}

std::vector<std::string> template_variables(PromptTemplate tmpl) {
  switch (tmpl) {
    case PromptTemplate::kDbrd: return {"text"};
    case PromptTemplate::kDutchCola: return {"Sentence"};
    case PromptTemplate::kXlwic: return {"target_word", "example_1", "example_2"};
    case PromptTemplate::kArc: return {"instruction"};
    case PromptTemplate::kGlobalMmlu: return {"question"};
  }
  return {};
}

void BenchmarkConfig::validate() const {
  if (name.empty()) throw DataError("benchmark config: name is empty");
  if (task_kind != task_kind_of(prompt)) {
    throw DataError("benchmark config '" + name + "': template '" + std::string(to_string(prompt)) +
                    "' is a " + std::string(to_string(task_kind_of(prompt))) + " task, not " +
                    std::string(to_string(task_kind)));
  }
  if (labels.empty()) throw DataError("benchmark config '" + name + "': labels are empty");
  if (std::set<std::string>(labels.begin(), labels.end()).size() != labels.size()) {
    throw DataError("benchmark config '" + name + "': labels are not distinct");
  }
  if (task_kind == TaskKind::kMultipleChoice && option_fields.size() != labels.size()) {
    throw DataError("benchmark config '" + name + "': " + std::to_string(option_fields.size()) +
                    " option fields for " + std::to_string(labels.size()) + " labels");
  }
  if (repetitions == 0) throw DataError("benchmark config '" + name + "': repetitions must be >= 1");
  for (const auto& [raw, label] : gold_map) {
    if (std::find(labels.begin(), labels.end(), label) == labels.end()) {
      throw DataError("benchmark config '" + name + "': gold_map target '" + label + "' is not a label");
    }
  }
}

Json BenchmarkConfig::to_json() const {
  return Json{{"name", name},
              {"task_kind", to_string(task_kind)},
              {"template", to_string(prompt)},
              {"data_path", data_path.string()},
              {"field_map", field_map},
              {"labels", labels},
              {"option_fields", option_fields},
              {"gold_field", gold_field},
              {"gold_map", gold_map},
              {"id_field", id_field},
              {"base_suffix", base_suffix},
              {"label_prefix", label_prefix},
              {"repetitions", repetitions},
              {"base_seed", base_seed}};
}

BenchmarkConfig preset(PromptTemplate tmpl) {
  BenchmarkConfig cfg;
  cfg.prompt = tmpl;
  cfg.task_kind = task_kind_of(tmpl);
  switch (tmpl) {
    case PromptTemplate::kDbrd:
      cfg.name = "dbrd";
      cfg.labels = {"positief", "negatief"};
      cfg.base_suffix = "Het sentiment is ";
      break;
    case PromptTemplate::kDutchCola:
      cfg.name = "dutch_cola";
      cfg.labels = {"grammaticaal", "ongrammaticaal"};
      cfg.base_suffix = "De tekst is ";
      break;
    case PromptTemplate::kXlwic:
      cfg.name = "xlwic_nl";
      cfg.labels = {"identiek", "verschillend"};
      cfg.base_suffix = "De betekenis van '{target_word}' is ";
      break;
    case PromptTemplate::kArc:
    case PromptTemplate::kGlobalMmlu:
      cfg.name = tmpl == PromptTemplate::kArc ? "arc_nl" : "global_mmlu_nl";
      cfg.labels = {"A", "B", "C", "D"};
      cfg.option_fields = {"option_a", "option_b", "option_c", "option_d"};
      cfg.gold_field = "answer";
      cfg.base_suffix = "Het antwoord is ";
      break;
  }
  return cfg;
}

BenchmarkConfig benchmark_config_from_json(const Json& json, const std::filesystem::path& base_dir) {
  if (!json.is_object()) throw DataError("benchmark config must be an object");
  std::string tmpl_name;
  read_if(json, "template", tmpl_name);
  const auto tmpl = parse_prompt_template(tmpl_name);
  if (!tmpl) throw DataError("benchmark config: unknown template '" + tmpl_name + "'");

  BenchmarkConfig cfg = preset(*tmpl);
  read_if(json, "name", cfg.name);
  if (json.contains("task_kind")) {
    const auto kind = parse_task_kind(json.at("task_kind").get<std::string>());
    if (!kind) throw DataError("benchmark config: unknown task_kind " + json.at("task_kind").dump());
    cfg.task_kind = *kind;
  }
  std::string data_path;
  read_if(json, "data_path", data_path);
  cfg.data_path = data_path;
  if (!data_path.empty() && cfg.data_path.is_relative() && !base_dir.empty()) cfg.data_path = base_dir / cfg.data_path;
  read_if(json, "field_map", cfg.field_map);
  read_if(json, "labels", cfg.labels);
  read_if(json, "option_fields", cfg.option_fields);
  read_if(json, "gold_field", cfg.gold_field);
  read_if(json, "gold_map", cfg.gold_map);
  read_if(json, "id_field", cfg.id_field);
  read_if(json, "base_suffix", cfg.base_suffix);
  read_if(json, "label_prefix", cfg.label_prefix);
  read_if(json, "repetitions", cfg.repetitions);
  read_if(json, "base_seed", cfg.base_seed);
  cfg.validate();
  return cfg;
}

BenchmarkConfig load_benchmark_config(const std::filesystem::path& path) {
  Json json = load_config_file(path);
  if (json.contains("benchmark") && json["benchmark"].is_object()) json = json["benchmark"];
  return benchmark_config_from_json(json, path.parent_path());
}

std::string field_for(const BenchmarkConfig& cfg, const std::string& variable) {
  for (const auto& [field, var] : cfg.field_map) {
    if (var == variable) return field;
  }
  return variable;
}

std::string substitute(std::string_view text, const std::map<std::string, std::string>& vars) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto open = text.find('{', i);
    if (open == std::string_view::npos) {
      out.append(text.substr(i));
      break;
    }
    const auto close = text.find('}', open);
    if (close == std::string_view::npos) throw DataError("unterminated placeholder in '" + std::string(text) + "'");
    out.append(text.substr(i, open - i));
    const std::string name(text.substr(open + 1, close - open - 1));
    auto it = vars.find(name);
    if (it == vars.end()) throw DataError("unknown placeholder {" + name + "}");
    out += it->second;
    i = close + 1;
  }
  return out;
}

std::string join_quoted_alternatives(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += i + 1 == items.size() ? " of " : ", ";
    out += "'" + items[i] + "'";
  }
  return out;
}

std::string chatml_wrap(std::string_view prompt) {
  std::string out = "<|im_start|>user\n";
  out.append(prompt);
  out += "<|im_end|>\n<|im_start|>assistant\n";
  return out;
}

std::string render_prompt(const BenchmarkConfig& cfg, const Json& record, ChatMode chat_mode,
                          std::string_view item_id) {
  const auto vars = template_values(cfg, record, item_id);
  std::string prompt;
  switch (cfg.prompt) {
    case PromptTemplate::kDbrd:
      prompt = "Is het sentiment in de volgende Nederlandstalige boekrecensie positief of negatief?\n\n"
               "Boekrecensie: " + vars.at("text") + "\n\n"
               "Antwoord met 'positief' of 'negatief'.";
      break;
    case PromptTemplate::kDutchCola:
      prompt = "Is de volgende tekst grammaticaal (correct Nederlands) of ongrammaticaal (onjuist Nederlands)?\n\n"
               "Tekst: " + vars.at("Sentence") + "\n\n"
               "Antwoord met 'grammaticaal' of 'ongrammaticaal'.";
      break;
    case PromptTemplate::kXlwic:
      prompt = "Is de betekenis van '" + vars.at("target_word") + "' in de volgende zinnen identiek of verschillend?\n\n"
               "Zin 1: " + vars.at("example_1") + "\n"
               "Zin 2: " + vars.at("example_2") + "\n\n"
               "Antwoord met 'identiek' of 'verschillend'.";
      break;
    case PromptTemplate::kArc:
      prompt = render_multiple_choice(cfg, record, vars.at("instruction"), item_id);
      break;
    case PromptTemplate::kGlobalMmlu:
      prompt = render_multiple_choice(cfg, record, vars.at("question"), item_id);
      break;
  }
  if (chat_mode == ChatMode::kChatMl) return chatml_wrap(prompt);
  return prompt + substitute(cfg.base_suffix, vars);
}

std::string normalize_gold(const BenchmarkConfig& cfg, const Json& value, std::string_view item_id) {
  if (value.is_null()) throw DataError("item " + std::string(item_id) + ": missing gold field '" + cfg.gold_field + "'");
  std::string raw = value.is_string() ? value.get<std::string>() : value.dump();
  if (auto it = cfg.gold_map.find(raw); it != cfg.gold_map.end()) raw = it->second;
  if (std::find(cfg.labels.begin(), cfg.labels.end(), raw) == cfg.labels.end()) {
    throw DataError("item " + std::string(item_id) + ": gold label '" + raw + "' is not one of the benchmark labels");
  }
  return raw;
}

std::vector<EvalItem> load_items(const BenchmarkConfig& cfg, ChatMode chat_mode) {
  JsonlReader reader(cfg.data_path);
  const std::string file_name = cfg.data_path.filename().string();
  std::vector<EvalItem> items;
  std::set<std::string> seen;
  while (auto record = reader.next()) {
    EvalItem item;
    auto id = record->value.find(cfg.id_field);
    if (id == record->value.end() || id->is_null()) {
      item.id = file_name + ":" + std::to_string(record->line);
    } else {
      item.id = id->is_string() ? id->get<std::string>() : id->dump();
    }
    if (!seen.insert(item.id).second) throw DataError("duplicate item id '" + item.id + "'");
    item.rendered_prompt = render_prompt(cfg, record->value, chat_mode, item.id);
    auto gold = record->value.find(cfg.gold_field);
    item.gold_label = normalize_gold(cfg, gold == record->value.end() ? Json() : *gold, item.id);
    items.push_back(std::move(item));
  }
  return items;
}

Json to_json(const Prediction& p) {
  return Json{{"benchmark", p.benchmark},   {"model", p.model},          {"item_id", p.item_id},
              {"repetition", p.repetition}, {"sampled_label", p.sampled_label}, {"gold_label", p.gold_label},
              {"steps", p.steps},           {"seed", p.seed}};
}

Prediction prediction_from_json(const Json& json) {
  Prediction p;
  try {
    p.item_id = json.at("item_id").get<std::string>();
    p.repetition = json.at("repetition").get<std::size_t>();
    p.sampled_label = json.at("sampled_label").get<std::string>();
    p.seed = json.at("seed").get<uint64_t>();
    p.benchmark = json.value("benchmark", "");
    p.model = json.value("model", "");
    p.gold_label = json.value("gold_label", "");
    p.steps = json.value("steps", std::size_t{0});
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed prediction: ") + e.what());
  }
  return p;
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
  JsonlReader reader(path);
  std::vector<Prediction> out;
  while (auto record = reader.next()) {
    try {
      out.push_back(prediction_from_json(record->value));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(record->line) + ": " + e.what());
    }
  }
  return out;
}

uint64_t item_seed(uint64_t base_seed, std::size_t repetition, std::string_view item_id) {
  return Fnv1a{}.u64(base_seed).u64(static_cast<uint64_t>(repetition)).bytes(item_id).digest();
}

std::vector<Prediction> run_items(const BenchmarkConfig& cfg, const std::vector<EvalItem>& items,
                                  ModelBackend& backend, const Tokenizer& tokenizer, const decoder::LabelTrie& trie,
                                  const RunOptions& options) {
  if (trie.labels() != cfg.labels) throw DataError("label trie was not built from the benchmark labels");

  std::vector<std::size_t> repetitions = options.only_repetitions;
  if (repetitions.empty()) {
    for (std::size_t r = 0; r < cfg.repetitions; ++r) repetitions.push_back(r);
  }
  for (std::size_t r : repetitions) {
    if (r >= cfg.repetitions) {
      throw DataError("repetition " + std::to_string(r) + " out of range (benchmark has " +
                      std::to_string(cfg.repetitions) + ")");
    }
  }

  std::vector<std::vector<TokenId>> prompts;
  prompts.reserve(items.size());
  for (const auto& item : items) prompts.push_back(tokenizer.encode(item.rendered_prompt));

  std::optional<std::ofstream> sink;
  if (options.predictions_path) sink = open_for_write(*options.predictions_path);

  std::vector<Prediction> all;
  for (std::size_t r : repetitions) {
    std::vector<Prediction> batch(items.size());
    try {
      detail::parallel_for(items.size(), options.jobs, [&](std::size_t i) {
        const uint64_t seed = item_seed(cfg.base_seed, r, items[i].id);
        Rng rng(seed);
        decoder::SamplerPolicy policy;
        policy.seed = seed;
        try {
          const auto sample = decoder::sample_label(trie, backend, prompts[i], policy, rng);
          batch[i] = Prediction{cfg.name, options.model_name, items[i].id, r, sample.label,
                                items[i].gold_label, sample.steps, seed};
        } catch (const BackendError& e) {
          throw BackendError(e.kind(),
                             "repetition " + std::to_string(r) + ", item '" + items[i].id + "': " + e.what());
        }
      });
    } catch (...) {
      // Completed repetitions stay in the predictions file.
      if (sink) sink->flush();
      throw;
    }

    if (sink) {
      for (const auto& p : batch) *sink << to_json(p).dump() << '\n';
      sink->flush();
      if (!*sink) throw IoError("write failed: " + options.predictions_path->string());
    }
    all.insert(all.end(), std::make_move_iterator(batch.begin()), std::make_move_iterator(batch.end()));
  }
  return all;
}

std::vector<Prediction> run_benchmark(const BenchmarkConfig& cfg, ModelBackend& backend, const Tokenizer& tokenizer,
                                      const decoder::LabelTrie& trie, const RunOptions& options) {
  return run_items(cfg, load_items(cfg, options.chat_mode), backend, tokenizer, trie, options);
}

}  // namespace corpusgate::harness
