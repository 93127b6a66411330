#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace layerlens {

using TokenId = std::uint32_t;

struct TokenSequence {
  std::vector<TokenId> ids;
  std::uint32_t vocab_size = 0;
};

enum class PerturbKind { Repetition, Randomness, RandomLength };

std::string_view to_string(PerturbKind kind) noexcept;
PerturbKind parse_perturb_kind(std::string_view name);

struct PerturbSpec {
  PerturbKind kind = PerturbKind::Repetition;
  double p = 0.0;            // repetition / randomness
  std::size_t length = 1;    // random_length
  std::uint64_t seed = 0;
};

// Every random decision is drawn from a SplitMix64 stream keyed by
// (seed, prompt_index, slot): slot 0 picks the repetition token, slot i+1
// drives position i. Outputs therefore do not depend on processing order.

/// Positions selected for replacement at probability p.
std::vector<bool> replacement_mask(std::size_t length, double p, std::uint64_t seed, std::uint64_t prompt_index = 0);

/// Replaces each position, with probability p, by one token drawn once from the prompt.
TokenSequence inject_repetition(const TokenSequence& s, double p, std::uint64_t seed, std::uint64_t prompt_index = 0);

/// Replaces each position, with probability p, by a uniform vocabulary draw.
TokenSequence inject_randomness(const TokenSequence& s, double p, std::uint64_t seed, std::uint64_t prompt_index = 0);

/// T i.i.d. uniform tokens.
TokenSequence random_prompt(std::size_t length, std::uint32_t vocab_size, std::uint64_t seed,
                            std::uint64_t prompt_index = 0);

/// Dispatches on spec.kind. For RandomLength the input only supplies vocab_size.
TokenSequence apply_perturbation(const TokenSequence& s, const PerturbSpec& spec, std::uint64_t prompt_index = 0);

}  // namespace layerlens
