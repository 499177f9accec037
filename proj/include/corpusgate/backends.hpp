#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "corpusgate/tokenizer.hpp"
#include "json.hpp"

namespace corpusgate {

struct BackendInfo {
  std::string name;
  std::size_t max_context = 8192;
  bool supports_chat = false;
};

// Next-token scoring boundary. Implementations must accept concurrent calls.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  // Raw logits for each candidate, aligned with `candidate_ids`.
  virtual std::vector<double> next_token_scores(std::span<const TokenId> prompt_ids,
                                                std::span<const TokenId> candidate_ids) = 0;

  virtual BackendInfo info() const = 0;

  // One forward pass over the prompt. Used for throughput timing.
  virtual void forward(std::span<const TokenId> prompt_ids) { next_token_scores(prompt_ids, {}); }
};

// Throws BackendError unless `scores` has one finite value per candidate.
void check_scores(std::span<const double> scores, std::size_t expected, const std::string& source);

// Hash of a prompt as used by scripted mock entries.
uint64_t prompt_hash(std::span<const TokenId> prompt_ids);

// FNV-1a over seed (8 bytes LE), prompt ids and candidate (4 bytes LE each).
uint64_t mock_logit_hash(uint64_t seed, std::span<const TokenId> prompt_ids, TokenId candidate);

// Maps a 64-bit hash into [-5, 5].
double hash_to_logit(uint64_t hash);

struct MockBackendConfig {
  enum class Mode { kUniform, kHashLogits, kScripted };

  uint64_t seed = 0;
  Mode mode = Mode::kUniform;
  // (prompt hash, candidate) -> logit. A nullopt prompt hash matches any prompt.
  std::map<std::pair<std::optional<uint64_t>, TokenId>, double> script;
  BackendInfo info{"mock", 8192, true};

  void set_logit(std::optional<uint64_t> prompt, TokenId candidate, double logit) {
    script[{prompt, candidate}] = logit;
  }
};

std::optional<MockBackendConfig::Mode> parse_mock_mode(std::string_view name);

// Script file: JSON array of {"prompt_hash": "<16 hex digits>" (optional),
// "candidate": id, "logit": value}.
void load_mock_script(MockBackendConfig& cfg, const std::filesystem::path& path);

std::vector<double> mock_scores(const MockBackendConfig& cfg, std::span<const TokenId> prompt_ids,
                                std::span<const TokenId> candidate_ids);

class MockBackend final : public ModelBackend {
 public:
  explicit MockBackend(MockBackendConfig cfg) : cfg_(std::move(cfg)) {}

  std::vector<double> next_token_scores(std::span<const TokenId> prompt_ids,
                                        std::span<const TokenId> candidate_ids) override;
  BackendInfo info() const override { return cfg_.info; }
  void forward(std::span<const TokenId> prompt_ids) override;

  uint64_t calls() const noexcept { return calls_.load(); }
  const MockBackendConfig& config() const noexcept { return cfg_; }

 private:
  MockBackendConfig cfg_;
  std::atomic<uint64_t> calls_{0};
};

struct HttpBackendConfig {
  std::string endpoint;  // scheme://host[:port][/base]
  std::chrono::milliseconds timeout{30000};
  std::optional<std::string> bearer_token;
  std::size_t max_in_flight = 4;
  BackendInfo info{"http", 8192, false};
};

// Endpoint from CORPUSGATE_BACKEND_URL, if set.
std::optional<std::string> default_backend_url();

// Request body of the wire protocol.
nlohmann::json logits_request(std::span<const TokenId> prompt_ids, std::span<const TokenId> candidate_ids);

// Parses and validates a response body; `source` names the endpoint in errors.
std::vector<double> parse_logits_response(std::string_view body, std::size_t expected, const std::string& source);

// POST <endpoint>/v1/next_token_logits. No retries.
class HttpBackend final : public ModelBackend {
 public:
  explicit HttpBackend(HttpBackendConfig cfg);

  std::vector<double> next_token_scores(std::span<const TokenId> prompt_ids,
                                        std::span<const TokenId> candidate_ids) override;
  BackendInfo info() const override { return cfg_.info; }

  const std::string& endpoint() const noexcept { return cfg_.endpoint; }

 private:
  HttpBackendConfig cfg_;
  std::string origin_;  // scheme://host:port
  std::string path_;    // base path + /v1/next_token_logits
  std::unique_ptr<std::counting_semaphore<>> slots_;
};

inline std::vector<double> http_scores(HttpBackend& backend, std::span<const TokenId> prompt_ids,
                                       std::span<const TokenId> candidate_ids) {
  return backend.next_token_scores(prompt_ids, candidate_ids);
}

}  // namespace corpusgate
