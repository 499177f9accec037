#include "corpusgate/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "corpusgate/error.hpp"

namespace corpusgate::decoder {

std::size_t LabelTrie::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.label.has_value(); }));
}

std::optional<std::uint32_t> LabelTrie::child(std::uint32_t index, TokenId id) const {
  const Node& n = node(index);
  auto it = std::lower_bound(n.ids.begin(), n.ids.end(), id);
  if (it == n.ids.end() || *it != id) return std::nullopt;
  return n.children[static_cast<std::size_t>(it - n.ids.begin())];
}

LabelTrie build_trie(const std::vector<std::string>& labels, const Tokenizer& tokenizer, const TrieOptions& options) {
  if (labels.size() < 2) throw DataError("a label trie needs at least two labels");
  if (std::set<std::string>(labels.begin(), labels.end()).size() != labels.size()) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      for (std::size_t j = i + 1; j < labels.size(); ++j) {
        if (labels[i] == labels[j]) throw DataError("duplicate label '" + labels[i] + "'");
      }
    }
  }

  std::optional<TokenId> eos;
  if (options.eos_terminated) {
    eos = tokenizer.eos_id();
    if (!eos) throw DataError("eos-terminated labels need a tokenizer with an eos token");
  }

  LabelTrie trie;
  trie.labels_ = labels;
  for (const auto& label : labels) {
    auto ids = tokenizer.encode(options.label_prefix + label);
    if (ids.empty()) throw DataError("label '" + label + "' encodes to no tokens");
    if (eos) ids.push_back(*eos);
    trie.sequences_.push_back(std::move(ids));
  }

  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = 0; j < labels.size(); ++j) {
      const auto& a = trie.sequences_[i];
      const auto& b = trie.sequences_[j];
      if (i != j && a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin())) {
        throw DataError("label '" + labels[i] + "' is a token prefix of label '" + labels[j] +
                        "'; use eos-terminated labels or change the label set");
      }
    }
  }

  trie.nodes_.emplace_back();
  for (std::size_t label = 0; label < labels.size(); ++label) {
    std::uint32_t current = LabelTrie::kRoot;
    for (TokenId id : trie.sequences_[label]) {
      auto& n = trie.nodes_[current];
      auto it = std::lower_bound(n.ids.begin(), n.ids.end(), id);
      const auto pos = static_cast<std::size_t>(it - n.ids.begin());
      if (it != n.ids.end() && *it == id) {
        current = n.children[pos];
        continue;
      }
      const auto next = static_cast<std::uint32_t>(trie.nodes_.size());
      n.ids.insert(it, id);
      n.children.insert(n.children.begin() + static_cast<std::ptrdiff_t>(pos), next);
      trie.nodes_.emplace_back();
      current = next;
    }
    trie.nodes_[current].label = label;
  }
  return trie;
}

void SamplerPolicy::validate() const {
  if (temperature != 1.0) throw DataError("sampler temperature must be 1.0");
  if (top_p || top_k) throw DataError("top-p / top-k truncation is not part of the sampling protocol");
}

std::size_t sample_softmax(std::span<const double> logits, Rng& rng) {
  if (logits.empty()) throw InvariantError("softmax over an empty candidate set");
  const double max = *std::max_element(logits.begin(), logits.end());
  std::vector<double> weights(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    weights[i] = std::exp(logits[i] - max);
    total += weights[i];
  }
  const double target = rng.uniform() * total;
  double cumulative = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cumulative += weights[i];
    if (target < cumulative) return i;
  }
  // Rounding can leave target == total; the last positive weight wins.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0) return i;
  }
  return weights.size() - 1;
}

SampleResult sample_label(const LabelTrie& trie, ModelBackend& backend, std::span<const TokenId> prompt_ids,
                          const SamplerPolicy& policy, Rng& rng) {
  policy.validate();
  std::vector<TokenId> context(prompt_ids.begin(), prompt_ids.end());
  std::uint32_t current = LabelTrie::kRoot;
  SampleResult result;

  while (!trie.node(current).label) {
    const auto allowed = trie.allowed(current);
    if (allowed.empty()) throw InvariantError("trie node without allowed tokens and without a label");

    std::size_t pick = 0;
    if (allowed.size() > 1) {
      std::vector<double> scores;
      try {
        scores = backend.next_token_scores(context, allowed);
      } catch (const BackendError& e) {
        throw BackendError(e.kind(), "step " + std::to_string(result.steps) + ": " + e.what());
      }
      check_scores(scores, allowed.size(), "step " + std::to_string(result.steps));
      pick = sample_softmax(scores, rng);
    }
    context.push_back(allowed[pick]);
    current = trie.node(current).children[pick];
    ++result.steps;
  }

  result.label_index = *trie.node(current).label;
  result.label = trie.labels()[result.label_index];
  return result;
}

}  // namespace corpusgate::decoder
