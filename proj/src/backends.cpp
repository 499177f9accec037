#include "corpusgate/backends.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>

#include "corpusgate/error.hpp"
#include "corpusgate/hash.hpp"
#include "httplib.h"

namespace corpusgate {

void check_scores(std::span<const double> scores, std::size_t expected, const std::string& source) {
  if (scores.size() != expected) {
    throw BackendError(BackendError::Kind::kLengthMismatch,
                       source + ": expected " + std::to_string(expected) + " logits, got " +
                           std::to_string(scores.size()));
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw BackendError(BackendError::Kind::kNonFinite,
                         source + ": logit " + std::to_string(i) + " is not finite");
    }
  }
}

uint64_t prompt_hash(std::span<const TokenId> prompt_ids) { return Fnv1a{}.i32s(prompt_ids).digest(); }

uint64_t mock_logit_hash(uint64_t seed, std::span<const TokenId> prompt_ids, TokenId candidate) {
  return Fnv1a{}.u64(seed).i32s(prompt_ids).u32(static_cast<uint32_t>(candidate)).digest();
}

double hash_to_logit(uint64_t hash) { return static_cast<double>(hash >> 11) * 0x1.0p-53 * 10.0 - 5.0; }

std::optional<MockBackendConfig::Mode> parse_mock_mode(std::string_view name) {
  if (name == "uniform") return MockBackendConfig::Mode::kUniform;
  if (name == "hash_logits") return MockBackendConfig::Mode::kHashLogits;
  if (name == "scripted") return MockBackendConfig::Mode::kScripted;
  return std::nullopt;
}

void load_mock_script(MockBackendConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mock script " + path.string());
  nlohmann::json json;
  try {
    json = nlohmann::json::parse(in);
    if (!json.is_array()) throw DataError(path.string() + ": mock script must be a JSON array");
    for (const auto& entry : json) {
      std::optional<uint64_t> prompt;
      if (auto it = entry.find("prompt_hash"); it != entry.end() && !it->is_null()) {
        prompt = it->is_string() ? std::stoull(it->get<std::string>(), nullptr, 16) : it->get<uint64_t>();
      }
      cfg.set_logit(prompt, entry.at("candidate").get<TokenId>(), entry.at("logit").get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const std::logic_error& e) {
    throw DataError(path.string() + ": bad prompt_hash (" + e.what() + ")");
  }
}

std::vector<double> mock_scores(const MockBackendConfig& cfg, std::span<const TokenId> prompt_ids,
                                std::span<const TokenId> candidate_ids) {
  std::vector<double> scores;
  scores.reserve(candidate_ids.size());
  switch (cfg.mode) {
    case MockBackendConfig::Mode::kUniform:
      scores.assign(candidate_ids.size(), 0.0);
      break;
    case MockBackendConfig::Mode::kHashLogits:
      for (TokenId c : candidate_ids) scores.push_back(hash_to_logit(mock_logit_hash(cfg.seed, prompt_ids, c)));
      break;
    case MockBackendConfig::Mode::kScripted: {
      const uint64_t h = prompt_hash(prompt_ids);
      for (TokenId c : candidate_ids) {
        auto it = cfg.script.find({h, c});
        if (it == cfg.script.end()) it = cfg.script.find({std::nullopt, c});
        if (it == cfg.script.end()) {
          throw BackendError(BackendError::Kind::kScriptMiss,
                             "mock script has no entry for (prompt " + hex64(h) + ", candidate " +
                                 std::to_string(c) + ")");
        }
        scores.push_back(it->second);
      }
      break;
    }
  }
  return scores;
}

std::vector<double> MockBackend::next_token_scores(std::span<const TokenId> prompt_ids,
                                                   std::span<const TokenId> candidate_ids) {
  calls_.fetch_add(1, std::memory_order_relaxed);
  return mock_scores(cfg_, prompt_ids, candidate_ids);
}

void MockBackend::forward(std::span<const TokenId> /*prompt_ids*/) { calls_.fetch_add(1, std::memory_order_relaxed); }

std::optional<std::string> default_backend_url() {
  if (const char* url = std::getenv("CORPUSGATE_BACKEND_URL"); url && *url) return std::string(url);
  return std::nullopt;
}

nlohmann::json logits_request(std::span<const TokenId> prompt_ids, std::span<const TokenId> candidate_ids) {
  return nlohmann::json{{"prompt_token_ids", std::vector<TokenId>(prompt_ids.begin(), prompt_ids.end())},
                        {"candidate_token_ids", std::vector<TokenId>(candidate_ids.begin(), candidate_ids.end())}};
}

std::vector<double> parse_logits_response(std::string_view body, std::size_t expected, const std::string& source) {
  nlohmann::json json;
  try {
    json = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error& e) {
    throw BackendError(BackendError::Kind::kMalformedResponse, source + ": response is not JSON (" + e.what() + ")");
  }
  auto it = json.find("logits");
  if (!json.is_object() || it == json.end() || !it->is_array()) {
    throw BackendError(BackendError::Kind::kMalformedResponse, source + ": response lacks a \"logits\" array");
  }
  std::vector<double> scores;
  scores.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number()) {
      throw BackendError(BackendError::Kind::kNonFinite, source + ": logit is not a number: " + v.dump());
    }
    scores.push_back(v.get<double>());
  }
  check_scores(scores, expected, source);
  return scores;
}

HttpBackend::HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
  const auto scheme_end = cfg_.endpoint.find("://");
  if (scheme_end == std::string::npos) throw DataError("backend endpoint lacks a scheme: " + cfg_.endpoint);
  const std::string scheme = cfg_.endpoint.substr(0, scheme_end);
  if (scheme != "http") throw DataError("unsupported backend scheme '" + scheme + "' (only http)");
  const auto path_start = cfg_.endpoint.find('/', scheme_end + 3);
  origin_ = cfg_.endpoint.substr(0, path_start);
  std::string base = path_start == std::string::npos ? "" : cfg_.endpoint.substr(path_start);
  while (!base.empty() && base.back() == '/') base.pop_back();
  path_ = base + "/v1/next_token_logits";
  if (cfg_.max_in_flight == 0) throw DataError("max_in_flight must be >= 1");
  slots_ = std::make_unique<std::counting_semaphore<>>(static_cast<std::ptrdiff_t>(cfg_.max_in_flight));
  if (cfg_.info.name == "http") cfg_.info.name = cfg_.endpoint;
}

std::vector<double> HttpBackend::next_token_scores(std::span<const TokenId> prompt_ids,
                                                   std::span<const TokenId> candidate_ids) {
  const std::string body = logits_request(prompt_ids, candidate_ids).dump();

  slots_->acquire();
  struct Release {
    std::counting_semaphore<>* s;
    ~Release() { s->release(); }
  } release{slots_.get()};

  httplib::Client client(origin_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (cfg_.bearer_token) headers.emplace("Authorization", "Bearer " + *cfg_.bearer_token);

  const auto started = std::chrono::steady_clock::now();
  auto result = client.Post(path_, headers, body, "application/json");
  if (!result) {
    const auto elapsed = std::chrono::steady_clock::now() - started;
    const auto err = result.error();
    if (err == httplib::Error::ConnectionTimeout ||
        (err == httplib::Error::Read && elapsed >= cfg_.timeout * 9 / 10)) {
      throw BackendError(BackendError::Kind::kTimeout,
                         cfg_.endpoint + ": timed out after " + std::to_string(cfg_.timeout.count()) + " ms");
    }
    throw BackendError(BackendError::Kind::kConnection, cfg_.endpoint + ": " + httplib::to_string(err));
  }
  if (result->status != 200) {
    throw BackendError(BackendError::Kind::kHttpStatus,
                       cfg_.endpoint + ": HTTP " + std::to_string(result->status));
  }
  return parse_logits_response(result->body, candidate_ids.size(), cfg_.endpoint);
}

}  // namespace corpusgate
