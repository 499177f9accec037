#pragma once

#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "corpusgate/tokenizer.hpp"
#include "test_support.hpp"

namespace testing {

using corpusgate::TokenId;

// Small vocabulary over {a, b, c, space} used by the brute-force oracle.
struct OracleVocab {
  std::vector<std::pair<std::string, std::string>> merges;
  std::unordered_map<std::string, TokenId> vocab;
};

inline OracleVocab oracle_vocab() {
  OracleVocab v;
  const std::vector<std::pair<std::string, std::string>> merges{
      {"a", "b"},    {g(" "), "a"}, {"b", "c"},    {g(" a"), "b"}, {"a", "a"},  {"ab", "c"},
      {"c", "a"},    {g(" "), g(" ")}, {g(" "), "b"}, {"aa", "b"}, {"b", "b"},  {"ca", "b"},
      {g(" "), "c"}, {"bb", "c"},   {g("  "), "a"}, {"c", "c"},   {g(" ab"), "c"}};
  v.merges = merges;
  TokenId next = 0;
  for (const std::string& s : std::vector<std::string>{"a", "b", "c", g(" ")}) v.vocab[s] = next++;
  for (const auto& [l, r] : merges) {
    if (!v.vocab.contains(l + r)) v.vocab[l + r] = next++;
  }
  return v;
}

// GPT-2 pre-tokenization restricted to letters and spaces.
inline std::vector<std::string> oracle_pieces(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != ' ') {
      std::size_t j = i;
      while (j < s.size() && s[j] != ' ') ++j;
      out.push_back(s.substr(i, j - i));
      i = j;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && s[j] == ' ') ++j;
    if (j == s.size()) {
      out.push_back(s.substr(i));
      i = j;
    } else if (j - i == 1) {
      std::size_t k = j;
      while (k < s.size() && s[k] != ' ') ++k;
      out.push_back(s.substr(i, k - i));
      i = k;
    } else {
      out.push_back(s.substr(i, j - i - 1));
      i = j - 1;
    }
  }
  return out;
}

// Repeatedly merges the adjacent pair with the lowest rank, leftmost first.
inline std::vector<std::string> naive_merge(const std::string& piece, const OracleVocab& v) {
  std::vector<std::string> sym;
  for (char c : piece) sym.push_back(c == ' ' ? g(" ") : std::string(1, c));
  for (;;) {
    std::size_t best_rank = v.merges.size(), best_pos = 0;
    for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
      for (std::size_t r = 0; r < best_rank; ++r) {
        if (v.merges[r].first == sym[i] && v.merges[r].second == sym[i + 1]) {
          best_rank = r;
          best_pos = i;
          break;
        }
      }
    }
    if (best_rank == v.merges.size()) return sym;
    sym[best_pos] += sym[best_pos + 1];
    sym.erase(sym.begin() + static_cast<std::ptrdiff_t>(best_pos) + 1);
  }
}

inline std::string random_text(std::mt19937_64& rng) {
  static const std::vector<std::string> atoms{
      "a",  "e",  "de",   " ",  "  ",  "\t", "\n", "\r\n", "kat", "Het", "'s",  "'ll", "1",  "2024", ".",
      ",",  "!?", "é",    "ë",  "ij",  "é", "ñ", "😀", "👍🏽", "中", "Ж", "ا", " ", "​",
      "\xE2\x80\x94",  "€",  "\x7f", "\x01", "ß", "İ", "ǅ",  "\"", "(", ")", "<|im_start|>", "𝔘", "\U0010FFFF"};
  std::string s;
  const int n = static_cast<int>(rng() % 12);
  for (int i = 0; i < n; ++i) s += atoms[rng() % atoms.size()];
  return s;
}

}  // namespace testing
