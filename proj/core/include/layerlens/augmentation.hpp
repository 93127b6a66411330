#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "layerlens/rng.hpp"

namespace layerlens {

struct AugmentSpec {
  double split_p = 0.3;
  double char_p = 0.3;
  double keyboard_p = 0.3;
  std::uint64_t seed = 0;
  std::size_t num_outputs = 2;
};

/// Characters one key away on a QWERTY keyboard. ASCII alphanumerics only.
class KeyboardLayout {
 public:
  static KeyboardLayout qwerty();

  std::span<const char32_t> neighbors(char32_t c) const;
  const std::map<char32_t, std::vector<char32_t>>& adjacency() const noexcept { return adjacency_; }

  void add_edge(char32_t a, char32_t b);

 private:
  std::map<char32_t, std::vector<char32_t>> adjacency_;
};

enum class CharEditKind { Insert = 0, Substitute = 1, Swap = 2, Delete = 3 };

struct CharEdit {
  std::size_t word_index;
  CharEditKind kind;
};

// All stages operate on Unicode scalar values of UTF-8 input; a "word" is a
// maximal run of non-whitespace. Whitespace runs are preserved verbatim except
// where a word is deleted entirely.

/// Splits each word of >= 4 characters, with probability p, at a uniform interior point.
std::string split_aug(std::string_view text, double p, SplitMix64& rng);

/// Applies one uniform edit (insert, substitute, swap, delete) to each word
/// selected with probability p. Edits are appended to `log` when given.
std::string random_char_aug(std::string_view text, double p, SplitMix64& rng, std::vector<CharEdit>* log = nullptr);

/// Replaces each mapped character, with probability p, by a uniform neighbor.
std::string keyboard_aug(std::string_view text, double p, const KeyboardLayout& layout, SplitMix64& rng);

/// split -> random char -> keyboard, with an independent stream per output.
std::vector<std::string> augment_pair(std::string_view text, const AugmentSpec& spec, std::uint64_t prompt_index = 0);

std::u32string utf8_decode(std::string_view text);
std::string utf8_encode(std::u32string_view text);

}  // namespace layerlens
