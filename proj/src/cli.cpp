#include "corpusgate/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "corpusgate/backends.hpp"
#include "corpusgate/config.hpp"
#include "corpusgate/decoder.hpp"
#include "corpusgate/error.hpp"
#include "corpusgate/filters.hpp"
#include "corpusgate/harness.hpp"
#include "corpusgate/hash.hpp"
#include "corpusgate/ingest.hpp"
#include "corpusgate/report.hpp"
#include "corpusgate/textmetrics.hpp"
#include "corpusgate/tokenizer.hpp"
#include "corpusgate/version.hpp"
#include "parallel.hpp"

namespace corpusgate::cli {

namespace fs = std::filesystem;

namespace {

enum class Level { kDebug, kInfo, kWarn, kError };

class Log {
 public:
  explicit Log(std::ostream& err) : err_(err) {}

  void set_level(Level level) { level_ = level; }

  void debug(const std::string& msg) { write(Level::kDebug, "debug", msg); }
  void info(const std::string& msg) { write(Level::kInfo, "info", msg); }
  void warn(const std::string& msg) { write(Level::kWarn, "warn", msg); }
  void error(const std::string& msg) { write(Level::kError, "error", msg); }

 private:
  void write(Level level, const char* tag, const std::string& msg) {
    if (level < level_) return;
    err_ << "corpusgate: " << tag << ": " << msg << '\n';
  }

  std::ostream& err_;
  Level level_ = Level::kInfo;
};

std::optional<Level> parse_level(std::string_view name) {
  if (name == "debug") return Level::kDebug;
  if (name == "info") return Level::kInfo;
  if (name == "warn") return Level::kWarn;
  if (name == "error") return Level::kError;
  return std::nullopt;
}

struct Globals {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string log_level = "info";
  std::string output_dir = "corpusgate-out";
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
};

struct TokenizerArgs {
  std::string vocab;
  std::string merges;
};

struct FieldArgs {
  std::string text = "text";
  std::string id = "id";
  std::string url = "url";

  FieldMap map() const { return FieldMap{text, id, url}; }
};

struct MockArgs {
  std::string mode;
  uint64_t seed = 0;
  std::string script;
};

struct BackendArgs {
  std::string kind = "mock";
  std::string endpoint;
  std::size_t timeout_ms = 30000;
  std::size_t max_in_flight = 4;
  std::string model_name;
  MockArgs mock;
};

void add_tokenizer_options(CLI::App* app, TokenizerArgs& args) {
  app->add_option("--vocab", args.vocab, "vocab.json of a byte-level BPE model");
  app->add_option("--merges", args.merges, "merges.txt of a byte-level BPE model");
}

void add_field_options(CLI::App* app, FieldArgs& args) {
  app->add_option("--text-field", args.text, "JSON key holding the document text")->capture_default_str();
  app->add_option("--id-field", args.id, "JSON key holding the document id")->capture_default_str();
  app->add_option("--url-field", args.url, "JSON key holding the document URL")->capture_default_str();
}

void add_backend_options(CLI::App* app, BackendArgs& args, const std::string& default_mock_mode) {
  args.mock.mode = default_mock_mode;
  app->add_option("--backend", args.kind, "mock or http")->check(CLI::IsMember({"mock", "http"}))->capture_default_str();
  app->add_option("--endpoint", args.endpoint, "inference server URL (default: $CORPUSGATE_BACKEND_URL)");
  app->add_option("--timeout-ms", args.timeout_ms, "per-request timeout")->capture_default_str();
  app->add_option("--max-in-flight", args.max_in_flight, "concurrent HTTP requests")->capture_default_str();
  app->add_option("--mock-mode", args.mock.mode, "uniform, hash_logits or scripted")
      ->check(CLI::IsMember({"uniform", "hash_logits", "scripted"}))
      ->capture_default_str();
  app->add_option("--mock-seed", args.mock.seed, "seed of the hash_logits mock")->capture_default_str();
  app->add_option("--mock-script", args.mock.script, "JSON script for the scripted mock");
}

std::unique_ptr<Tokenizer> make_tokenizer(const TokenizerArgs& args, Log& log) {
  if (args.vocab.empty() != args.merges.empty()) {
    throw CLI::ValidationError("--vocab and --merges must be given together");
  }
  if (args.vocab.empty()) {
    log.info("no --vocab/--merges given; using the byte-level base tokenizer");
    return std::make_unique<BpeModel>(BpeModel::byte_level_base());
  }
  return std::make_unique<BpeModel>(load_bpe(args.vocab, args.merges));
}

std::unique_ptr<ModelBackend> make_backend(const BackendArgs& args) {
  if (args.kind == "http") {
    HttpBackendConfig cfg;
    cfg.endpoint = !args.endpoint.empty() ? args.endpoint : default_backend_url().value_or("");
    if (cfg.endpoint.empty()) throw CLI::ValidationError("http backend needs --endpoint or CORPUSGATE_BACKEND_URL");
    cfg.timeout = std::chrono::milliseconds(args.timeout_ms);
    cfg.max_in_flight = std::max<std::size_t>(args.max_in_flight, 1);
    if (const char* token = std::getenv("CORPUSGATE_BACKEND_TOKEN"); token && *token) cfg.bearer_token = token;
    return std::make_unique<HttpBackend>(std::move(cfg));
  }
  MockBackendConfig cfg;
  cfg.mode = *parse_mock_mode(args.mock.mode);
  cfg.seed = args.mock.seed;
  if (!args.mock.script.empty()) load_mock_script(cfg, args.mock.script);
  if (cfg.mode == MockBackendConfig::Mode::kScripted && args.mock.script.empty()) {
    throw CLI::ValidationError("--mock-mode scripted needs --mock-script");
  }
  return std::make_unique<MockBackend>(std::move(cfg));
}

Json backend_json(const BackendArgs& args) {
  Json j{{"kind", args.kind}};
  if (args.kind == "http") {
    j["endpoint"] = !args.endpoint.empty() ? args.endpoint : default_backend_url().value_or("");
    j["timeout_ms"] = args.timeout_ms;
    j["max_in_flight"] = args.max_in_flight;
  } else {
    j["mock_mode"] = args.mock.mode;
    j["mock_seed"] = args.mock.seed;
    j["mock_script"] = args.mock.script;
  }
  return j;
}

Json tokenizer_json(const TokenizerArgs& args, const Tokenizer& tok) {
  return Json{{"name", tok.name()}, {"vocab", args.vocab}, {"merges", args.merges}, {"vocab_size", tok.vocab_size()}};
}

// Values of every option of `app` as given on the command line or taken
// from defaults.
Json option_values(const CLI::App* app) {
  Json j = Json::object();
  for (const CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "version" || name == "config") continue;
    const auto results = opt->results();
    if (!results.empty()) {
      j[name] = opt->get_expected_max() > 1 ? Json(results) : Json(results.back());
    } else if (!opt->get_default_str().empty()) {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

std::string config_key(std::string name) {
  std::replace(name.begin(), name.end(), '-', '_');
  return name;
}

std::string scalar_text(const Json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  return value.dump();
}

// Applies a config table as option defaults; command-line flags still win.
// Keys may use dashes or underscores.
void apply_config_defaults(CLI::App* app, const Json& table) {
  if (!table.is_object()) return;
  for (CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    const Json* value = nullptr;
    if (auto it = table.find(name); it != table.end()) value = &*it;
    if (auto it = table.find(config_key(name)); !value && it != table.end()) value = &*it;
    if (!value) continue;
    if (value->is_array()) {
      std::string joined;
      for (const auto& v : *value) joined += (joined.empty() ? "" : ",") + scalar_text(v);
      opt->delimiter(',');
      opt->default_val(joined);
    } else if (!value->is_object()) {
      opt->default_val(scalar_text(*value));
    } else {
      continue;
    }
    opt->required(false);
  }
}

std::optional<fs::path> find_config_arg(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string_view arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return fs::path(argv[i + 1]);
    if (arg.starts_with("--config=")) return fs::path(std::string(arg.substr(9)));
  }
  return std::nullopt;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_for_write(path);
  out << text;
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

void write_json(const fs::path& path, const Json& json) { write_text(path, json.dump(2) + "\n"); }

fs::path sibling(const fs::path& path, const std::string& suffix) {
  fs::path out = path;
  out.replace_extension();
  out += suffix;
  return out;
}

std::vector<Document> read_documents(const fs::path& path, const FieldMap& fields, std::size_t limit) {
  std::vector<Document> docs;
  DocumentReader reader(path, fields);
  while (docs.size() < limit) {
    auto doc = reader.next();
    if (!doc) break;
    docs.push_back(std::move(*doc));
  }
  return docs;
}

struct Context {
  Globals globals;
  Json config = Json::object();
  std::ostream& out;
  Log& log;
  std::string subcommand;
  Json resolved = Json::object();

  fs::path output_dir() const { return globals.output_dir; }

  // Snapshot of the resolved configuration; fingerprints derive from it.
  std::string write_resolved() {
    fs::create_directories(output_dir());
    const std::string fingerprint = hex64(fnv1a(resolved.dump()));
    Json snapshot = resolved;
    snapshot["fingerprint"] = fingerprint;
    write_json(output_dir() / (subcommand + ".resolved_config.json"), snapshot);
    return fingerprint;
  }

  void finish(Json summary) {
    summary["subcommand"] = subcommand;
    write_json(output_dir() / (subcommand + ".summary.json"), summary);
    out << summary.dump() << std::endl;
  }
};

// ---- filter ----

struct FilterArgs {
  std::string input;
  std::string output;
  std::string stage = "both";
  std::size_t batch = 4096;
  FieldArgs fields;
};

int run_filter(Context& ctx, const FilterArgs& args) {
  filters::FilterConfig cfg = filters::filter_config_from_json(
      ctx.config.contains("filter") ? ctx.config["filter"] : ctx.config,
      ctx.globals.config_path.empty() ? fs::path{} : fs::path(ctx.globals.config_path).parent_path());
  if (args.stage == "1") {
    cfg.apply_stage2 = false;
  } else if (args.stage == "2") {
    cfg.apply_stage1 = false;
  }
  cfg.validate();

  const fs::path output = args.output.empty() ? ctx.output_dir() / "filtered.jsonl" : fs::path(args.output);
  ctx.resolved = Json{{"input", args.input},
                      {"output", output.string()},
                      {"fields", {{"text", args.fields.text}, {"id", args.fields.id}, {"url", args.fields.url}}},
                      {"filter", cfg.to_json()}};
  ctx.write_resolved();

  if (output.has_parent_path()) fs::create_directories(output.parent_path());
  auto kept_out = open_for_write(output);
  RejectionLog rejected(rejected_sidecar_path(output));

  CorpusManifest manifest;
  manifest.started_at = utc_timestamp();
  manifest.config_fingerprint = cfg.fingerprint();
  for (auto reason : filters::kAllReasons) manifest.rejected_by_reason[std::string(filters::to_string(reason))] = 0;

  DocumentReader reader(args.input, args.fields.map());
  std::vector<Document> docs;
  std::vector<std::string> raw;
  std::vector<filters::FilterVerdict> verdicts;
  const std::size_t batch = std::max<std::size_t>(args.batch, 1);
  bool done = false;
  while (!done) {
    docs.clear();
    raw.clear();
    while (docs.size() < batch) {
      auto doc = reader.next();
      if (!doc) {
        done = true;
        break;
      }
      raw.push_back(reader.last_raw_line());
      docs.push_back(std::move(*doc));
    }
    verdicts.assign(docs.size(), {});
    detail::parallel_for(docs.size(), ctx.globals.jobs,
                         [&](std::size_t i) { verdicts[i] = filters::apply_chain(docs[i], cfg); });
    for (std::size_t i = 0; i < docs.size(); ++i) {
      ++manifest.total_read;
      if (verdicts[i].keep()) {
        ++manifest.kept;
        kept_out << raw[i] << '\n';
      } else {
        const std::string tag(filters::to_string(*verdicts[i].reason));
        ++manifest.rejected_by_reason[tag];
        rejected.add(docs[i].id, tag);
        ctx.log.debug("reject " + docs[i].id + ": " + tag + " (" + verdicts[i].detail + ")");
      }
    }
  }
  kept_out.flush();
  if (!kept_out) throw IoError("write failed: " + output.string());
  rejected.flush();
  manifest.finished_at = utc_timestamp();
  const fs::path manifest_path = sibling(output, ".manifest.json");
  write_manifest(manifest, manifest_path);

  ctx.log.info("kept " + std::to_string(manifest.kept) + " of " + std::to_string(manifest.total_read) + " documents");
  ctx.finish(Json{{"output", output.string()},
                  {"rejected", rejected_sidecar_path(output).string()},
                  {"manifest", manifest_path.string()},
                  {"total_read", manifest.total_read},
                  {"kept", manifest.kept},
                  {"rejected_by_reason", manifest.rejected_by_reason},
                  {"config_fingerprint", manifest.config_fingerprint}});
  return kOk;
}

// ---- tokenize ----

struct TokenizeArgs {
  TokenizerArgs tokenizer;
  std::string text;
  std::string input;
};

int run_tokenize(Context& ctx, const TokenizeArgs& args) {
  const auto tok = make_tokenizer(args.tokenizer, ctx.log);
  std::string text = args.text;
  if (!args.input.empty()) {
    std::ifstream in(args.input, std::ios::binary);
    if (!in) throw IoError("cannot open " + args.input);
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }
  ctx.resolved = Json{{"tokenizer", tokenizer_json(args.tokenizer, *tok)}, {"text", text}};
  ctx.write_resolved();

  const auto ids = tok->encode(text);
  Json tokens = Json::array();
  for (TokenId id : ids) tokens.push_back(tok->token_text(id));
  const std::string decoded = tok->decode(ids);
  if (decoded != text) throw InvariantError("tokenizer round trip changed the text");
  ctx.finish(Json{{"ids", ids}, {"tokens", tokens}, {"count", ids.size()}});
  return kOk;
}

// ---- fertility ----

struct FertilityArgs {
  TokenizerArgs tokenizer;
  std::string input;
  std::string mode = "word";
  std::size_t limit = 10000;
  bool per_doc = false;
  FieldArgs fields;
};

int run_fertility(Context& ctx, const FertilityArgs& args) {
  const auto tok = make_tokenizer(args.tokenizer, ctx.log);
  const auto mode = *metrics::parse_fertility_mode(args.mode);
  ctx.resolved = Json{{"tokenizer", tokenizer_json(args.tokenizer, *tok)},
                      {"input", args.input},
                      {"mode", args.mode},
                      {"limit", args.limit}};
  ctx.write_resolved();

  const auto docs = read_documents(args.input, args.fields.map(), args.limit);
  const std::size_t chunks = std::min<std::size_t>(std::max<std::size_t>(ctx.globals.jobs, 1) * 4, docs.size());
  std::vector<metrics::FertilityAccumulator> parts(std::max<std::size_t>(chunks, 1),
                                                   metrics::FertilityAccumulator(args.per_doc));
  detail::parallel_for(chunks, ctx.globals.jobs, [&](std::size_t c) {
    const std::size_t begin = docs.size() * c / chunks;
    const std::size_t end = docs.size() * (c + 1) / chunks;
    for (std::size_t i = begin; i < end; ++i) parts[c].add(metrics::count_document(*tok, docs[i], mode));
  });
  metrics::FertilityAccumulator total(args.per_doc);
  for (auto& part : parts) total.merge(std::move(part));
  const auto stats = total.finish();

  Json summary = metrics::to_json(stats);
  summary["documents"] = docs.size();
  summary["mode"] = args.mode;
  write_json(ctx.output_dir() / "fertility.json", summary);
  ctx.finish(summary);
  return kOk;
}

// ---- throughput ----

struct ThroughputArgs {
  TokenizerArgs tokenizer;
  BackendArgs backend;
  std::string input;
  std::size_t limit = 10000;
  std::size_t max_context = metrics::kMaxContextCeiling;
  std::size_t runs = 3;
  FieldArgs fields;
};

std::string timing_table(const metrics::TimingReport& report) {
  std::vector<std::vector<std::string>> rows{{"run", "tokens", "seconds", "tokens/s"}};
  char buf[64];
  for (std::size_t r = 0; r < report.per_run.size(); ++r) {
    const auto& t = report.per_run[r];
    std::vector<std::string> row{std::to_string(r), std::to_string(t.tokens)};
    std::snprintf(buf, sizeof buf, "%.4f", t.seconds);
    row.push_back(buf);
    std::snprintf(buf, sizeof buf, "%.1f", t.tokens_per_second);
    row.push_back(buf);
    rows.push_back(std::move(row));
  }
  std::vector<std::string> last{"mean", ""};
  std::snprintf(buf, sizeof buf, report.has_ci ? "%.4f ± %.4f" : "%.4f", report.total_seconds.mean,
                report.total_seconds.half_width);
  last.push_back(buf);
  std::snprintf(buf, sizeof buf, report.has_ci ? "%.1f ± %.1f" : "%.1f", report.tokens_per_second.mean,
                report.tokens_per_second.half_width);
  last.push_back(buf);
  rows.push_back(std::move(last));

  std::vector<std::size_t> widths(4, 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string pad(widths[c] - row[c].size(), ' ');
      out += c == 0 ? row[c] + pad : "  " + pad + row[c];
    }
    out += "\n";
  }
  return out;
}

int run_throughput(Context& ctx, const ThroughputArgs& args) {
  const auto tok = make_tokenizer(args.tokenizer, ctx.log);
  auto backend = make_backend(args.backend);
  ctx.resolved = Json{{"tokenizer", tokenizer_json(args.tokenizer, *tok)},
                      {"backend", backend_json(args.backend)},
                      {"input", args.input},
                      {"limit", args.limit},
                      {"max_context", args.max_context},
                      {"runs", args.runs}};
  ctx.write_resolved();

  const auto docs = read_documents(args.input, args.fields.map(), args.limit);
  metrics::SteadyClock clock;
  const auto report = metrics::throughput(*backend, *tok, docs, args.max_context, args.runs, clock);
  const Json summary = metrics::to_json(report);
  write_json(ctx.output_dir() / "throughput.json", summary);
  const std::string table = timing_table(report);
  write_text(ctx.output_dir() / "throughput.txt", table);
  ctx.log.info("throughput\n" + table);
  ctx.finish(summary);
  return kOk;
}

// ---- eval ----

struct EvalArgs {
  std::string benchmark;
  TokenizerArgs tokenizer;
  BackendArgs backend;
  std::string chat_mode = "none";
  std::string model = "model";
  std::optional<std::size_t> repetitions;
  std::vector<std::size_t> only_repetitions;
  std::optional<std::string> label_prefix;
  bool eos_labels = false;
  std::string predictions;
};

int run_eval(Context& ctx, const EvalArgs& args) {
  auto cfg = harness::load_benchmark_config(args.benchmark);
  if (ctx.globals.seed) cfg.base_seed = *ctx.globals.seed;
  if (args.repetitions) cfg.repetitions = *args.repetitions;
  if (args.label_prefix) cfg.label_prefix = *args.label_prefix;
  cfg.validate();

  const auto tok = make_tokenizer(args.tokenizer, ctx.log);
  auto backend = make_backend(args.backend);
  const auto chat_mode = *harness::parse_chat_mode(args.chat_mode);
  const fs::path predictions =
      args.predictions.empty() ? ctx.output_dir() / (cfg.name + "." + args.model + ".predictions.jsonl")
                               : fs::path(args.predictions);

  ctx.resolved = Json{{"benchmark", cfg.to_json()},
                      {"tokenizer", tokenizer_json(args.tokenizer, *tok)},
                      {"backend", backend_json(args.backend)},
                      {"chat_mode", args.chat_mode},
                      {"model", args.model},
                      {"only_repetitions", args.only_repetitions},
                      {"eos_labels", args.eos_labels},
                      {"predictions", predictions.string()}};
  ctx.write_resolved();

  decoder::TrieOptions trie_options;
  trie_options.label_prefix = cfg.label_prefix;
  trie_options.eos_terminated = args.eos_labels;
  const auto trie = decoder::build_trie(cfg.labels, *tok, trie_options);

  harness::RunOptions options;
  options.chat_mode = chat_mode;
  options.model_name = args.model;
  options.jobs = ctx.globals.jobs;
  options.only_repetitions = args.only_repetitions;
  options.predictions_path = predictions;
  if (predictions.has_parent_path()) fs::create_directories(predictions.parent_path());
  const auto preds = harness::run_benchmark(cfg, *backend, *tok, trie, options);

  Json per_rep = Json::object();
  for (const auto& p : preds) {
    auto& counts = per_rep[std::to_string(p.repetition)];
    if (counts.is_null()) counts = Json{{"items", 0}, {"correct", 0}};
    counts["items"] = counts["items"].get<std::size_t>() + 1;
    if (p.sampled_label == p.gold_label) counts["correct"] = counts["correct"].get<std::size_t>() + 1;
  }
  ctx.log.info("wrote " + std::to_string(preds.size()) + " predictions to " + predictions.string());
  ctx.finish(Json{{"benchmark", cfg.name},
                  {"model", args.model},
                  {"predictions", predictions.string()},
                  {"count", preds.size()},
                  {"repetitions", per_rep}});
  return kOk;
}

// ---- report ----

struct ReportArgs {
  std::vector<std::string> predictions;
  std::string format = "markdown";
  std::string output;
  std::string overview;
};

std::vector<report::OverviewRow> load_overview(const fs::path& path) {
  const Json json = load_config_file(path);
  const Json& rows = json.contains("models") ? json["models"] : json;
  if (!rows.is_array()) throw DataError(path.string() + ": expected an array of models");
  auto interval = [](const Json& row, const char* key) -> std::optional<stats::Interval> {
    auto it = row.find(key);
    if (it == row.end() || it->is_null()) return std::nullopt;
    return stats::Interval{it->at("mean").get<double>(), it->value("ci_half_width", 0.0)};
  };
  std::vector<report::OverviewRow> out;
  try {
    for (const auto& row : rows) {
      report::OverviewRow r;
      r.model = row.at("model").get<std::string>();
      r.size = row.value("size", "");
      if (row.contains("fertility") && !row["fertility"].is_null()) r.fertility = row["fertility"].get<double>();
      r.tokens_per_second = interval(row, "tokens_per_second");
      r.seconds = interval(row, "seconds");
      out.push_back(std::move(r));
    }
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return out;
}

int run_report(Context& ctx, const ReportArgs& args) {
  const auto format = *report::parse_format(args.format);
  ctx.resolved = Json{{"predictions", args.predictions}, {"format", args.format}, {"overview", args.overview}};
  ctx.write_resolved();

  std::vector<harness::Prediction> all;
  for (const auto& path : args.predictions) {
    auto preds = harness::load_predictions(path);
    all.insert(all.end(), std::make_move_iterator(preds.begin()), std::make_move_iterator(preds.end()));
  }
  if (all.empty()) throw DataError("no predictions to report");
  const auto table = stats::rank_and_aggregate(report::score_predictions(all));
  std::vector<report::OverviewRow> overview;
  if (!args.overview.empty()) overview = load_overview(args.overview);
  const std::string text = report::emit_report(table, overview, format);

  const char* ext = format == report::Format::kCsv ? ".csv" : format == report::Format::kJson ? ".json" : ".md";
  const fs::path output = args.output.empty() ? ctx.output_dir() / (std::string("report") + ext) : fs::path(args.output);
  if (output.has_parent_path()) fs::create_directories(output.parent_path());
  write_text(output, text);

  Json models = Json::array();
  for (const auto& row : table.rows) models.push_back({{"model", row.model}, {"median_rank", row.median_rank}});
  ctx.finish(Json{{"output", output.string()}, {"benchmarks", table.benchmarks}, {"models", models}});
  return kOk;
}

// ---- import ----

struct ImportArgs {
  std::string format;
  std::string input;
  std::string output;
};

int run_import(Context& ctx, const ImportArgs& args) {
  const auto format = *harness::parse_import_format(args.format);
  const fs::path output = args.output.empty() ? ctx.output_dir() / (args.format + ".jsonl") : fs::path(args.output);
  ctx.resolved = Json{{"format", args.format}, {"input", args.input}, {"output", output.string()}};
  ctx.write_resolved();
  if (output.has_parent_path()) fs::create_directories(output.parent_path());
  const auto summary = harness::import_dataset(format, args.input, output);
  ctx.finish(Json{{"output", output.string()}, {"records", summary.records}, {"label_counts", summary.label_counts}});
  return kOk;
}

std::string version_text() {
  return std::string("corpusgate ") + kVersion + " (" + (*kBuildType ? kBuildType : "default") + ", " + kCompiler +
         ")";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Log log(err);
  Globals globals;

  CLI::App app{"Corpus filtering, tokenizer metrics and constrained-label evaluation", "corpusgate"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", version_text());
  app.add_option("--config", globals.config_path, "TOML or JSON config; a [<subcommand>] table sets flag defaults");
  app.add_option("--seed", globals.seed, "base seed (overrides the config)");
  app.add_option("--log-level", globals.log_level, "debug, info, warn or error")
      ->check(CLI::IsMember({"debug", "info", "warn", "error"}))
      ->capture_default_str();
  app.add_option("--output-dir", globals.output_dir, "directory for snapshots, summaries and default outputs")
      ->capture_default_str();
  app.add_option("--jobs", globals.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  FilterArgs filter_args;
  auto* filter = app.add_subcommand("filter", "Run the quality-filter chain over a JSONL corpus");
  filter->add_option("--input", filter_args.input, "input JSONL")->required();
  filter->add_option("--output", filter_args.output, "kept documents (JSONL)");
  filter->add_option("--stage", filter_args.stage, "1, 2 or both")
      ->check(CLI::IsMember({"1", "2", "both"}))
      ->capture_default_str();
  filter->add_option("--batch", filter_args.batch, "documents per parallel batch")->capture_default_str();
  add_field_options(filter, filter_args.fields);

  TokenizeArgs tokenize_args;
  auto* tokenize = app.add_subcommand("tokenize", "Encode text and print the token ids");
  add_tokenizer_options(tokenize, tokenize_args.tokenizer);
  auto* text_opt = tokenize->add_option("--text", tokenize_args.text, "text to encode");
  auto* input_opt = tokenize->add_option("--input", tokenize_args.input, "file to encode");
  text_opt->excludes(input_opt);

  FertilityArgs fertility_args;
  auto* fertility = app.add_subcommand("fertility", "Average tokens per word over a corpus");
  add_tokenizer_options(fertility, fertility_args.tokenizer);
  fertility->add_option("--input", fertility_args.input, "input JSONL")->required();
  fertility->add_option("--mode", fertility_args.mode, "word or doc")
      ->check(CLI::IsMember({"word", "doc"}))
      ->capture_default_str();
  fertility->add_option("--limit", fertility_args.limit, "documents to read, in file order")->capture_default_str();
  fertility->add_flag("--per-doc", fertility_args.per_doc, "include per-document counts");
  add_field_options(fertility, fertility_args.fields);

  ThroughputArgs throughput_args;
  auto* throughput = app.add_subcommand("throughput", "Forward-pass tokens per second over a corpus");
  add_tokenizer_options(throughput, throughput_args.tokenizer);
  add_backend_options(throughput, throughput_args.backend, "uniform");
  throughput->add_option("--input", throughput_args.input, "input JSONL")->required();
  throughput->add_option("--limit", throughput_args.limit, "documents to read, in file order")->capture_default_str();
  throughput->add_option("--max-context", throughput_args.max_context, "token truncation length")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  throughput->add_option("--runs", throughput_args.runs, "timed runs")->check(CLI::PositiveNumber)->capture_default_str();
  add_field_options(throughput, throughput_args.fields);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Constrained-label evaluation on a benchmark");
  eval->add_option("--benchmark", eval_args.benchmark, "benchmark config (TOML or JSON)")->required();
  add_tokenizer_options(eval, eval_args.tokenizer);
  add_backend_options(eval, eval_args.backend, "hash_logits");
  eval->add_option("--chat-mode", eval_args.chat_mode, "none or chatml")
      ->check(CLI::IsMember({"none", "chatml"}))
      ->capture_default_str();
  eval->add_option("--model", eval_args.model, "model name recorded in predictions")->capture_default_str();
  eval->add_option("--repetitions", eval_args.repetitions, "override the configured repetition count")
      ->check(CLI::PositiveNumber);
  eval->add_option("--only-repetition", eval_args.only_repetitions, "run only these repetition indices")
      ->delimiter(',');
  eval->add_option("--label-prefix", eval_args.label_prefix, "text prepended to every label before tokenizing");
  eval->add_flag("--eos-labels", eval_args.eos_labels, "terminate every label with the eos token");
  eval->add_option("--predictions", eval_args.predictions, "predictions JSONL path");

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Score prediction files and rank models");
  report->add_option("--predictions", report_args.predictions, "prediction JSONL files")
      ->required()
      ->delimiter(',');
  report->add_option("--format", report_args.format, "markdown, csv or json")
      ->check(CLI::IsMember({"markdown", "md", "csv", "json"}))
      ->capture_default_str();
  report->add_option("--output", report_args.output, "report path");
  report->add_option("--overview", report_args.overview, "JSON/TOML with per-model size, fertility and timings");

  ImportArgs import_args;
  auto* import = app.add_subcommand("import", "Convert a published dataset layout into benchmark JSONL");
  import->add_option("--format", import_args.format, "dbrd, dutch_cola or xlwic")
      ->required()
      ->check(CLI::IsMember({"dbrd", "dutch_cola", "xlwic"}));
  import->add_option("--input", import_args.input, "CSV, TSV or JSONL input")->required();
  import->add_option("--output", import_args.output, "JSONL output");

  Context ctx{globals, Json::object(), out, log, {}, {}};
  try {
    if (auto config_path = find_config_arg(argc, argv)) {
      ctx.config = load_config_file(*config_path);
      for (CLI::App* sub : app.get_subcommands({})) {
        if (auto it = ctx.config.find(sub->get_name()); it != ctx.config.end()) apply_config_defaults(sub, *it);
      }
      apply_config_defaults(&app, ctx.config);
    }
  } catch (const Error& e) {
    log.error(e.what());
    return dynamic_cast<const IoError*>(&e) ? kBackendOrIo : kDataError;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << version_text() << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "corpusgate: " << e.what() << "\n\n";
    const CLI::App* failed = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << failed->help();
    return kUsage;
  }

  log.set_level(*parse_level(globals.log_level));
  ctx.globals = globals;
  CLI::App* sub = app.get_subcommands().front();
  ctx.subcommand = sub->get_name();
  log.debug("options: " + option_values(sub).dump());

  try {
    if (sub == filter) return run_filter(ctx, filter_args);
    if (sub == tokenize) return run_tokenize(ctx, tokenize_args);
    if (sub == fertility) return run_fertility(ctx, fertility_args);
    if (sub == throughput) return run_throughput(ctx, throughput_args);
    if (sub == eval) return run_eval(ctx, eval_args);
    if (sub == report) return run_report(ctx, report_args);
    if (sub == import) return run_import(ctx, import_args);
  } catch (const CLI::ValidationError& e) {
    err << "corpusgate: " << e.what() << "\n\n" << sub->help();
    return kUsage;
  } catch (const BackendError& e) {
    log.error(std::string("backend (") + to_string(e.kind()) + "): " + e.what());
    return kBackendOrIo;
  } catch (const IoError& e) {
    log.error(e.what());
    return kBackendOrIo;
  } catch (const fs::filesystem_error& e) {
    log.error(e.what());
    return kBackendOrIo;
  } catch (const InvariantError& e) {
    log.error(std::string("internal error: ") + e.what());
    return kDataError;
  } catch (const Error& e) {
    log.error(e.what());
    return kDataError;
  }
  return kUsage;
}

}  // namespace corpusgate::cli
