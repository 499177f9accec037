#include "corpusgate/tokenizer.hpp"

#include <fstream>
#include <mutex>
#include <queue>
#include <sstream>

#include "corpusgate/error.hpp"
#include "corpusgate/unicode.hpp"
#include "json.hpp"

namespace corpusgate {

// ---------------------------------------------------------------------------
// WhitespaceTokenizer

TokenId WhitespaceTokenizer::intern(std::string_view piece) const {
  const std::string key(piece);
  {
    std::shared_lock lock(mutex_);
    if (auto it = ids_.find(key); it != ids_.end()) return it->second;
  }
  std::unique_lock lock(mutex_);
  auto [it, inserted] = ids_.try_emplace(key, static_cast<TokenId>(pieces_.size()));
  if (inserted) pieces_.push_back(key);
  return it->second;
}

std::vector<TokenId> WhitespaceTokenizer::encode(std::string_view text) const {
  const std::u32string cps = unicode::decode_utf8(text);
  std::vector<std::u32string> pieces;
  std::u32string pending;  // whitespace waiting for the next word
  std::size_t i = 0;
  while (i < cps.size()) {
    if (unicode::is_whitespace(cps[i])) {
      pending.push_back(cps[i++]);
      continue;
    }
    std::size_t j = i;
    while (j < cps.size() && !unicode::is_whitespace(cps[j])) ++j;
    pieces.push_back(pending + cps.substr(i, j - i));
    pending.clear();
    i = j;
  }
  if (!pending.empty()) {
    if (pieces.empty()) {
      pieces.push_back(pending);
    } else {
      pieces.back() += pending;
    }
  }

  std::vector<TokenId> ids;
  ids.reserve(pieces.size());
  for (const auto& piece : pieces) ids.push_back(intern(unicode::encode_utf8(piece)));
  return ids;
}

std::string WhitespaceTokenizer::decode(std::span<const TokenId> ids) const {
  std::shared_lock lock(mutex_);
  std::string out;
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size()) {
      throw DataError("token id " + std::to_string(id) + " out of range");
    }
    out += pieces_[static_cast<std::size_t>(id)];
  }
  return out;
}

std::size_t WhitespaceTokenizer::vocab_size() const {
  std::shared_lock lock(mutex_);
  return pieces_.size();
}

std::string WhitespaceTokenizer::token_text(TokenId id) const {
  std::shared_lock lock(mutex_);
  if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size()) {
    throw DataError("token id " + std::to_string(id) + " out of range");
  }
  return pieces_[static_cast<std::size_t>(id)];
}

std::unique_ptr<Tokenizer> whitespace_tokenizer() { return std::make_unique<WhitespaceTokenizer>(); }

// ---------------------------------------------------------------------------
// Byte-level BPE

namespace bpe {

namespace {

struct ByteTables {
  std::array<std::string, 256> encoder;
  std::array<char32_t, 256> codepoints{};
  std::unordered_map<char32_t, uint8_t> decoder;
};

const ByteTables& tables() {
  static const ByteTables t = [] {
    ByteTables t;
    char32_t next = 256;
    for (int b = 0; b < 256; ++b) {
      const bool printable = (b >= '!' && b <= '~') || (b >= 0xA1 && b <= 0xAC) || (b >= 0xAE && b <= 0xFF);
      const char32_t cp = printable ? static_cast<char32_t>(b) : next++;
      t.codepoints[b] = cp;
      t.encoder[b] = unicode::encode_utf8(std::u32string(1, cp));
      t.decoder.emplace(cp, static_cast<uint8_t>(b));
    }
    return t;
  }();
  return t;
}

enum class CharClass { kLetter, kNumber, kSpace, kOther };

CharClass classify(char32_t cp) {
  if (unicode::is_whitespace(cp)) return CharClass::kSpace;
  if (unicode::is_letter(cp)) return CharClass::kLetter;
  if (unicode::is_number(cp)) return CharClass::kNumber;
  return CharClass::kOther;
}

// Length of a contraction suffix ('s 't 're 've 'm 'll 'd) starting at i, or 0.
std::size_t contraction_at(std::u32string_view cps, std::size_t i) {
  if (cps[i] != U'\'') return 0;
  static constexpr std::u32string_view kSuffixes[] = {U"s", U"t", U"re", U"ve", U"m", U"ll", U"d"};
  const auto rest = cps.substr(i + 1);
  for (auto suffix : kSuffixes) {
    if (rest.starts_with(suffix)) return 1 + suffix.size();
  }
  return 0;
}

}  // namespace

const std::array<std::string, 256>& byte_encoder() { return tables().encoder; }

std::optional<uint8_t> byte_decoder(char32_t cp) {
  const auto& d = tables().decoder;
  if (auto it = d.find(cp); it != d.end()) return it->second;
  return std::nullopt;
}

std::vector<std::string_view> pretokenize(std::string_view text) {
  const std::u32string cps = unicode::decode_utf8(text);
  // Byte offset of every code point, plus the end.
  std::vector<std::size_t> offsets;
  offsets.reserve(cps.size() + 1);
  {
    std::size_t off = 0;
    for (char32_t cp : cps) {
      offsets.push_back(off);
      off += cp < 0x80 ? 1 : cp < 0x800 ? 2 : cp < 0x10000 ? 3 : 4;
    }
    offsets.push_back(off);
  }

  std::vector<std::string_view> pieces;
  const std::size_t n = cps.size();
  std::size_t i = 0;
  auto run_end = [&](std::size_t from, CharClass cls) {
    while (from < n && classify(cps[from]) == cls) ++from;
    return from;
  };

  while (i < n) {
    std::size_t j;
    if (std::size_t len = contraction_at(cps, i)) {
      j = i + len;
    } else if (cps[i] == U' ' && i + 1 < n && classify(cps[i + 1]) != CharClass::kSpace) {
      j = run_end(i + 1, classify(cps[i + 1]));
    } else if (const CharClass cls = classify(cps[i]); cls != CharClass::kSpace) {
      j = run_end(i, cls);
    } else {
      const std::size_t end = run_end(i, CharClass::kSpace);
      // A whitespace run followed by text gives up its last character, which
      // then prefixes the next piece.
      j = (end == n || end - 1 == i) ? end : end - 1;
    }
    pieces.push_back(text.substr(offsets[i], offsets[j] - offsets[i]));
    i = j;
  }
  return pieces;
}

}  // namespace bpe

namespace {

std::string merge_key(std::string_view left, std::string_view right) {
  std::string key;
  key.reserve(left.size() + right.size() + 1);
  key.append(left).push_back(' ');
  key.append(right);
  return key;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

BpeModel::BpeModel(std::unordered_map<std::string, TokenId> vocab, std::vector<Merge> merges)
    : vocab_(std::move(vocab)), merges_(std::move(merges)) {
  TokenId max_id = -1;
  for (const auto& [token, id] : vocab_) {
    if (id < 0) throw DataError("vocab entry '" + token + "' has negative id " + std::to_string(id));
    max_id = std::max(max_id, id);
  }
  id_to_token_.resize(static_cast<std::size_t>(max_id + 1));
  std::vector<bool> used(id_to_token_.size(), false);
  for (const auto& [token, id] : vocab_) {
    const auto slot = static_cast<std::size_t>(id);
    if (used[slot]) {
      throw DataError("duplicate vocab id " + std::to_string(id) + " ('" + id_to_token_[slot] + "' and '" +
                      token + "')");
    }
    used[slot] = true;
    id_to_token_[slot] = token;
  }

  merge_ranks_.reserve(merges_.size());
  for (std::size_t rank = 0; rank < merges_.size(); ++rank) {
    const auto& [left, right] = merges_[rank];
    if (!vocab_.contains(left + right)) {
      throw DataError("merge '" + left + " " + right + "' has no vocab entry");
    }
    merge_ranks_.try_emplace(merge_key(left, right), static_cast<uint32_t>(rank));
  }

  if (auto it = vocab_.find("<|endoftext|>"); it != vocab_.end()) eos_id_ = it->second;
}

BpeModel BpeModel::byte_level_base() {
  std::unordered_map<std::string, TokenId> vocab;
  const auto& enc = bpe::byte_encoder();
  for (int b = 0; b < 256; ++b) vocab.emplace(enc[static_cast<std::size_t>(b)], b);
  return BpeModel(std::move(vocab), {});
}

std::optional<TokenId> BpeModel::token_id(std::string_view token) const {
  if (auto it = vocab_.find(std::string(token)); it != vocab_.end()) return it->second;
  return std::nullopt;
}

std::optional<uint32_t> BpeModel::merge_rank(std::string_view left, std::string_view right) const {
  if (auto it = merge_ranks_.find(merge_key(left, right)); it != merge_ranks_.end()) return it->second;
  return std::nullopt;
}

std::vector<std::string> BpeModel::merge_piece(std::string_view piece) const {
  struct Symbol {
    std::string text;
    int prev;
    int next;
  };
  struct Candidate {
    uint32_t rank;
    int left;
    int right;
    bool operator>(const Candidate& o) const { return rank != o.rank ? rank > o.rank : left > o.left; }
  };

  const auto& enc = bpe::byte_encoder();
  std::vector<Symbol> symbols;
  symbols.reserve(piece.size());
  for (std::size_t i = 0; i < piece.size(); ++i) {
    symbols.push_back({enc[static_cast<unsigned char>(piece[i])], static_cast<int>(i) - 1,
                       i + 1 < piece.size() ? static_cast<int>(i) + 1 : -1});
  }
  if (merge_ranks_.empty() || symbols.size() < 2) {
    std::vector<std::string> out;
    for (auto& s : symbols) out.push_back(std::move(s.text));
    return out;
  }

  // Lowest rank first, leftmost on ties. Stale entries are detected by
  // re-checking adjacency and the pair's rank when popped.
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> queue;
  auto push = [&](int left) {
    if (left < 0) return;
    const int right = symbols[static_cast<std::size_t>(left)].next;
    if (right < 0) return;
    if (auto rank = merge_rank(symbols[static_cast<std::size_t>(left)].text,
                               symbols[static_cast<std::size_t>(right)].text)) {
      queue.push({*rank, left, right});
    }
  };
  for (int i = 0; i + 1 < static_cast<int>(symbols.size()); ++i) push(i);

  std::vector<bool> alive(symbols.size(), true);
  while (!queue.empty()) {
    const Candidate top = queue.top();
    queue.pop();
    auto& left = symbols[static_cast<std::size_t>(top.left)];
    if (!alive[static_cast<std::size_t>(top.left)] || left.next != top.right) continue;
    auto& right = symbols[static_cast<std::size_t>(top.right)];
    const auto rank = merge_rank(left.text, right.text);
    if (!rank || *rank != top.rank) continue;

    left.text += right.text;
    alive[static_cast<std::size_t>(top.right)] = false;
    left.next = right.next;
    if (left.next >= 0) symbols[static_cast<std::size_t>(left.next)].prev = top.left;
    push(left.prev);
    push(top.left);
  }

  std::vector<std::string> out;
  for (int i = 0; i >= 0; i = symbols[static_cast<std::size_t>(i)].next) {
    out.push_back(std::move(symbols[static_cast<std::size_t>(i)].text));
  }
  return out;
}

std::vector<TokenId> BpeModel::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (std::string_view piece : bpe::pretokenize(text)) {
    for (const auto& symbol : merge_piece(piece)) {
      auto it = vocab_.find(symbol);
      if (it == vocab_.end()) throw DataError("symbol '" + symbol + "' is not in the vocabulary");
      ids.push_back(it->second);
    }
  }
  return ids;
}

std::string BpeModel::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    const std::u32string cps = unicode::decode_utf8(token_text(id));
    for (char32_t cp : cps) {
      auto byte = bpe::byte_decoder(cp);
      if (!byte) throw DataError("token " + std::to_string(id) + " contains a non byte-level character");
      out.push_back(static_cast<char>(*byte));
    }
  }
  return out;
}

std::string BpeModel::token_text(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw DataError("token id " + std::to_string(id) + " out of range");
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::unordered_map<std::string, TokenId> parse_bpe_vocab(std::string_view json_text) {
  nlohmann::json json;
  try {
    json = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("vocab: ") + e.what());
  }
  if (!json.is_object()) throw DataError("vocab: expected a JSON object of token -> id");
  std::unordered_map<std::string, TokenId> vocab;
  vocab.reserve(json.size());
  for (const auto& [token, id] : json.items()) {
    if (!id.is_number_integer()) throw DataError("vocab: id of '" + token + "' is not an integer");
    vocab.emplace(token, id.get<TokenId>());
  }
  return vocab;
}

std::vector<BpeModel::Merge> parse_bpe_merges(std::string_view text) {
  std::vector<BpeModel::Merge> merges;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.starts_with('#')) continue;
    const auto space = line.find(' ');
    if (space == std::string::npos || space == 0 || space + 1 == line.size() ||
        line.find(' ', space + 1) != std::string::npos) {
      throw DataError("merges line " + std::to_string(line_no) + ": expected two space-separated symbols");
    }
    merges.emplace_back(line.substr(0, space), line.substr(space + 1));
  }
  return merges;
}

BpeModel load_bpe(const std::filesystem::path& vocab_path, const std::filesystem::path& merges_path) {
  return BpeModel(parse_bpe_vocab(read_file(vocab_path)), parse_bpe_merges(read_file(merges_path)));
}

}  // namespace corpusgate
