#include "layerlens/augmentation.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>

#include "layerlens/errors.hpp"

namespace layerlens {
namespace {

constexpr std::u32string_view kEditAlphabet = U"abcdefghijklmnopqrstuvwxyz0123456789";

struct Segment {
  bool space;
  std::u32string text;
};

bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' || c == U'\f';
}

std::vector<Segment> segment(std::string_view text) {
  std::vector<Segment> out;
  for (char32_t c : utf8_decode(text)) {
    const bool sp = is_space(c);
    if (out.empty() || out.back().space != sp) out.push_back({sp, {}});
    out.back().text.push_back(c);
  }
  return out;
}

// Drops words emptied by deletion together with one adjacent whitespace run.
std::string join(std::vector<Segment> segs) {
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (segs[i].space || !segs[i].text.empty()) continue;
    if (i + 1 < segs.size() && segs[i + 1].space) {
      segs.erase(segs.begin() + static_cast<std::ptrdiff_t>(i + 1));
    } else if (i > 0 && segs[i - 1].space) {
      segs.erase(segs.begin() + static_cast<std::ptrdiff_t>(i - 1));
      --i;
    }
  }
  std::u32string out;
  for (const auto& s : segs) out += s.text;
  return utf8_encode(out);
}

void check_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "augmentation probability must lie in [0, 1]");
}

bool is_ascii_alnum(char32_t c) {
  return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z') || (c >= U'0' && c <= U'9');
}

}  // namespace

void KeyboardLayout::add_edge(char32_t a, char32_t b) {
  auto insert = [this](char32_t from, char32_t to) {
    auto& v = adjacency_[from];
    auto it = std::lower_bound(v.begin(), v.end(), to);
    if (it == v.end() || *it != to) v.insert(it, to);
  };
  insert(a, b);
  insert(b, a);
}

KeyboardLayout KeyboardLayout::qwerty() {
  // Physical stagger in quarter-key units: the letter rows start half, three
  // quarters and one and a quarter keys right of the digit row. Keys in
  // adjacent rows touch when their centres are at most half a key apart,
  // which gives k -> {i, j, l, m}.
  static constexpr std::array<std::u32string_view, 4> rows = {U"1234567890", U"qwertyuiop", U"asdfghjkl",
                                                              U"zxcvbnm"};
  static constexpr std::array<int, 4> offset = {0, 2, 3, 5};
  auto upper = [](char32_t c) { return (c >= U'a' && c <= U'z') ? c - U'a' + U'A' : c; };
  KeyboardLayout layout;
  // Letter edges are mirrored in upper case; digit-letter edges therefore
  // reach both cases of the letter.
  auto link = [&](char32_t a, char32_t b) {
    layout.add_edge(a, b);
    layout.add_edge(upper(a), upper(b));
  };
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto row = rows[r];
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i + 1 < row.size()) link(row[i], row[i + 1]);
      if (r == 0) continue;
      const auto above = rows[r - 1];
      const int x = offset[r] + 4 * static_cast<int>(i);
      for (std::size_t j = 0; j < above.size(); ++j)
        if (std::abs(offset[r - 1] + 4 * static_cast<int>(j) - x) <= 2) link(row[i], above[j]);
    }
  }
  return layout;
}

std::span<const char32_t> KeyboardLayout::neighbors(char32_t c) const {
  auto it = adjacency_.find(c);
  if (it == adjacency_.end()) return {};
  return it->second;
}

std::string split_aug(std::string_view text, double p, SplitMix64& rng) {
  check_probability(p);
  auto segs = segment(text);
  for (auto& s : segs) {
    if (s.space || s.text.size() < 4) continue;
    if (!rng.bernoulli(p)) continue;
    const std::size_t cut = 1 + rng.below(s.text.size() - 1);
    s.text.insert(s.text.begin() + static_cast<std::ptrdiff_t>(cut), U' ');
  }
  return join(std::move(segs));
}

std::string random_char_aug(std::string_view text, double p, SplitMix64& rng, std::vector<CharEdit>* log) {
  check_probability(p);
  auto segs = segment(text);
  std::size_t word_index = 0;
  for (auto& s : segs) {
    if (s.space) continue;
    const std::size_t w = word_index++;
    if (!rng.bernoulli(p)) continue;
    auto& word = s.text;
    const auto kind = static_cast<CharEditKind>(rng.below(4));
    switch (kind) {
      case CharEditKind::Insert: {
        const auto pos = static_cast<std::ptrdiff_t>(rng.below(word.size() + 1));
        word.insert(word.begin() + pos, kEditAlphabet[rng.below(kEditAlphabet.size())]);
        break;
      }
      case CharEditKind::Substitute:
        word[rng.below(word.size())] = kEditAlphabet[rng.below(kEditAlphabet.size())];
        break;
      case CharEditKind::Swap:
        if (word.size() >= 2) {
          const std::size_t pos = rng.below(word.size() - 1);
          std::swap(word[pos], word[pos + 1]);
        }
        break;
      case CharEditKind::Delete:
        word.erase(word.begin() + static_cast<std::ptrdiff_t>(rng.below(word.size())));
        break;
    }
    if (log) log->push_back({w, kind});
  }
  return join(std::move(segs));
}

std::string keyboard_aug(std::string_view text, double p, const KeyboardLayout& layout, SplitMix64& rng) {
  check_probability(p);
  std::u32string chars = utf8_decode(text);
  for (char32_t& c : chars) {
    if (!is_ascii_alnum(c)) continue;
    const auto nbrs = layout.neighbors(c);
    if (nbrs.empty()) continue;
    if (rng.bernoulli(p)) c = nbrs[rng.below(nbrs.size())];
  }
  return utf8_encode(chars);
}

std::vector<std::string> augment_pair(std::string_view text, const AugmentSpec& spec, std::uint64_t prompt_index) {
  if (spec.num_outputs < 1) throw Error(ErrorCode::InvalidArgument, "num_outputs must be >= 1");
  check_probability(spec.split_p);
  check_probability(spec.char_p);
  check_probability(spec.keyboard_p);

  static const KeyboardLayout layout = KeyboardLayout::qwerty();
  std::vector<std::string> out;
  out.reserve(spec.num_outputs);
  for (std::size_t k = 0; k < spec.num_outputs; ++k) {
    const std::uint64_t base = stream_key(spec.seed, prompt_index, k);
    SplitMix64 split_rng(stream_key(base, 0));
    SplitMix64 char_rng(stream_key(base, 1));
    SplitMix64 key_rng(stream_key(base, 2));
    std::string s = split_aug(text, spec.split_p, split_rng);
    s = random_char_aug(s, spec.char_p, char_rng);
    s = keyboard_aug(s, spec.keyboard_p, layout, key_rng);
    out.push_back(std::move(s));
  }
  return out;
}

std::u32string utf8_decode(std::string_view text) {
  constexpr char32_t kReplacement = 0xFFFD;
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    if (i + len > text.size()) {
      out.push_back(kReplacement);
      break;
    }
    bool ok = true;
    for (std::size_t k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(text[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    static constexpr std::array<char32_t, 5> min_for_len = {0, 0, 0x80, 0x800, 0x10000};
    if (!ok || cp < min_for_len[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string utf8_encode(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t cp : text) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

}  // namespace layerlens
