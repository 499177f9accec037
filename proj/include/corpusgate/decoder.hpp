#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "corpusgate/backends.hpp"
#include "corpusgate/rng.hpp"
#include "corpusgate/tokenizer.hpp"

namespace corpusgate::decoder {

struct TrieOptions {
  // Prepended to every label before tokenization; the returned label is the
  // bare string.
  std::string label_prefix;
  // Append the tokenizer's eos id to every label sequence. Makes any label
  // set prefix-free; a label is only complete once eos is sampled.
  bool eos_terminated = false;
};

// Token-id prefix tree over the allowed labels. Immutable after build.
class LabelTrie {
 public:
  struct Node {
    std::vector<TokenId> ids;           // allowed next tokens, ascending
    std::vector<std::uint32_t> children;  // aligned with ids
    std::optional<std::size_t> label;   // set on leaves only
  };

  static constexpr std::uint32_t kRoot = 0;

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<std::vector<TokenId>>& sequences() const noexcept { return sequences_; }
  const Node& node(std::uint32_t index) const { return nodes_.at(index); }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t leaf_count() const;

  std::span<const TokenId> allowed(std::uint32_t index) const { return node(index).ids; }
  // Child reached from `index` via `id`, or nullopt if `id` is not allowed.
  std::optional<std::uint32_t> child(std::uint32_t index, TokenId id) const;

 private:
  friend LabelTrie build_trie(const std::vector<std::string>&, const Tokenizer&, const TrieOptions&);

  std::vector<std::string> labels_;
  std::vector<std::vector<TokenId>> sequences_;
  std::vector<Node> nodes_;
};

// Throws DataError for fewer than two labels, duplicates, labels that encode
// to nothing, or a label whose sequence is a prefix of another's.
LabelTrie build_trie(const std::vector<std::string>& labels, const Tokenizer& tokenizer,
                     const TrieOptions& options = {});

// Plain temperature-1 sampling over the allowed tokens; no top-p / top-k.
struct SamplerPolicy {
  double temperature = 1.0;
  std::optional<double> top_p;
  std::optional<std::size_t> top_k;
  uint64_t seed = 0;

  void validate() const;
};

struct SampleResult {
  std::string label;
  std::size_t label_index = 0;
  std::size_t steps = 0;  // tokens emitted, forced ones included
};

// Index drawn from softmax(logits); consumes exactly one uniform draw.
std::size_t sample_softmax(std::span<const double> logits, Rng& rng);

// Walks the trie from the root, asking the backend only for the allowed ids
// at each node. Nodes with a single allowed id are taken without drawing.
SampleResult sample_label(const LabelTrie& trie, ModelBackend& backend, std::span<const TokenId> prompt_ids,
                          const SamplerPolicy& policy, Rng& rng);

}  // namespace corpusgate::decoder
