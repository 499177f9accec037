#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace corpusgate {

using TokenId = int32_t;

// Text <-> token-id mapping. Implementations are immutable after
// construction (or internally synchronized) so one instance can be shared
// across threads.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  // Encodes without adding special tokens.
  virtual std::vector<TokenId> encode(std::string_view text) const = 0;
  virtual std::string decode(std::span<const TokenId> ids) const = 0;
  virtual std::size_t vocab_size() const = 0;
  virtual std::string token_text(TokenId id) const = 0;
  virtual std::optional<TokenId> eos_id() const { return std::nullopt; }
  virtual std::string name() const = 0;
};

// One token per whitespace-delimited word. Whitespace is attached to the
// following word (trailing whitespace to the last one) so decoding is
// lossless. Ids are assigned on first sight.
class WhitespaceTokenizer final : public Tokenizer {
 public:
  std::vector<TokenId> encode(std::string_view text) const override;
  std::string decode(std::span<const TokenId> ids) const override;
  std::size_t vocab_size() const override;
  std::string token_text(TokenId id) const override;
  std::string name() const override { return "whitespace"; }

 private:
  TokenId intern(std::string_view piece) const;

  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<std::string, TokenId> ids_;
  mutable std::vector<std::string> pieces_;
};

std::unique_ptr<Tokenizer> whitespace_tokenizer();

namespace bpe {

// The byte -> printable character table of byte-level BPE, as UTF-8 strings.
const std::array<std::string, 256>& byte_encoder();

// Inverse of byte_encoder(); nullopt for characters outside the table.
std::optional<uint8_t> byte_decoder(char32_t cp);

// Splits text into the pieces BPE merges operate on, following the GPT-2
// pattern: contractions, optionally space-prefixed letter / number / other
// runs, and whitespace runs that leave their last space to the next word.
// Returned views alias `text`.
std::vector<std::string_view> pretokenize(std::string_view text);

}  // namespace bpe

// Byte-level BPE model loaded from a vocab.json / merges.txt pair.
class BpeModel final : public Tokenizer {
 public:
  using Merge = std::pair<std::string, std::string>;

  // Throws DataError when a merge's concatenation is missing from the vocab
  // or two entries share an id.
  BpeModel(std::unordered_map<std::string, TokenId> vocab, std::vector<Merge> merges);

  // 256 single-byte tokens (id == byte value) and no merges.
  static BpeModel byte_level_base();

  std::vector<TokenId> encode(std::string_view text) const override;
  std::string decode(std::span<const TokenId> ids) const override;
  std::size_t vocab_size() const override { return id_to_token_.size(); }
  std::string token_text(TokenId id) const override;
  std::optional<TokenId> eos_id() const override { return eos_id_; }
  std::string name() const override { return "bpe"; }

  std::size_t merge_count() const noexcept { return merges_.size(); }
  const std::vector<Merge>& merges() const noexcept { return merges_; }
  std::optional<TokenId> token_id(std::string_view token) const;

  // Rank of a merge pair, or nullopt.
  std::optional<uint32_t> merge_rank(std::string_view left, std::string_view right) const;

  // Applies merges to one pre-tokenized piece and returns the symbol strings
  // (in byte-encoder alphabet).
  std::vector<std::string> merge_piece(std::string_view piece) const;

 private:
  std::unordered_map<std::string, TokenId> vocab_;
  std::vector<std::string> id_to_token_;
  std::vector<Merge> merges_;
  std::unordered_map<std::string, uint32_t> merge_ranks_;  // key: left + ' ' + right
  std::optional<TokenId> eos_id_;
};

BpeModel load_bpe(const std::filesystem::path& vocab_path, const std::filesystem::path& merges_path);

// In-memory variants used by load_bpe.
std::unordered_map<std::string, TokenId> parse_bpe_vocab(std::string_view json_text);
std::vector<BpeModel::Merge> parse_bpe_merges(std::string_view text);

}  // namespace corpusgate
