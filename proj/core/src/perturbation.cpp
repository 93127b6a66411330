#include "layerlens/perturbation.hpp"

#include <cmath>
#include <string>

#include "layerlens/errors.hpp"
#include "layerlens/rng.hpp"

namespace layerlens {
namespace {

void check_sequence(const TokenSequence& s) {
  if (s.vocab_size < 2) throw Error(ErrorCode::InvalidArgument, "vocab_size must be >= 2");
  if (s.ids.empty()) throw Error(ErrorCode::InvalidArgument, "token sequence is empty");
  for (TokenId id : s.ids)
    if (id >= s.vocab_size)
      throw Error(ErrorCode::InvalidArgument, "token id " + std::to_string(id) + " is outside the vocabulary");
}

void check_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "probability must lie in [0, 1]");
}

SplitMix64 position_stream(std::uint64_t seed, std::uint64_t prompt_index, std::size_t position) {
  return SplitMix64(stream_key(seed, prompt_index, static_cast<std::uint64_t>(position) + 1));
}

}  // namespace

std::string_view to_string(PerturbKind kind) noexcept {
  switch (kind) {
    case PerturbKind::Repetition: return "repetition";
    case PerturbKind::Randomness: return "randomness";
    case PerturbKind::RandomLength: return "random_length";
  }
  return "unknown";
}

PerturbKind parse_perturb_kind(std::string_view name) {
  if (name == "repetition") return PerturbKind::Repetition;
  if (name == "randomness") return PerturbKind::Randomness;
  if (name == "random_length" || name == "random-length") return PerturbKind::RandomLength;
  throw Error(ErrorCode::ConfigError, "unknown perturbation kind '" + std::string(name) + "'");
}

std::vector<bool> replacement_mask(std::size_t length, double p, std::uint64_t seed, std::uint64_t prompt_index) {
  check_probability(p);
  std::vector<bool> mask(length);
  for (std::size_t i = 0; i < length; ++i) mask[i] = position_stream(seed, prompt_index, i).bernoulli(p);
  return mask;
}

TokenSequence inject_repetition(const TokenSequence& s, double p, std::uint64_t seed, std::uint64_t prompt_index) {
  check_sequence(s);
  check_probability(p);
  SplitMix64 choice(stream_key(seed, prompt_index, 0));
  const TokenId fixed = s.ids[choice.below(s.ids.size())];

  TokenSequence out = s;
  for (std::size_t i = 0; i < out.ids.size(); ++i) {
    if (position_stream(seed, prompt_index, i).bernoulli(p)) out.ids[i] = fixed;
  }
  return out;
}

TokenSequence inject_randomness(const TokenSequence& s, double p, std::uint64_t seed, std::uint64_t prompt_index) {
  check_sequence(s);
  check_probability(p);
  TokenSequence out = s;
  for (std::size_t i = 0; i < out.ids.size(); ++i) {
    SplitMix64 rng = position_stream(seed, prompt_index, i);
    if (rng.bernoulli(p)) out.ids[i] = static_cast<TokenId>(rng.below(s.vocab_size));
  }
  return out;
}

TokenSequence random_prompt(std::size_t length, std::uint32_t vocab_size, std::uint64_t seed,
                            std::uint64_t prompt_index) {
  if (length < 1) throw Error(ErrorCode::InvalidArgument, "random prompt length must be >= 1");
  if (vocab_size < 2) throw Error(ErrorCode::InvalidArgument, "vocab_size must be >= 2");
  TokenSequence out;
  out.vocab_size = vocab_size;
  out.ids.resize(length);
  for (std::size_t i = 0; i < length; ++i)
    out.ids[i] = static_cast<TokenId>(position_stream(seed, prompt_index, i).below(vocab_size));
  return out;
}

TokenSequence apply_perturbation(const TokenSequence& s, const PerturbSpec& spec, std::uint64_t prompt_index) {
  switch (spec.kind) {
    case PerturbKind::Repetition: return inject_repetition(s, spec.p, spec.seed, prompt_index);
    case PerturbKind::Randomness: return inject_randomness(s, spec.p, spec.seed, prompt_index);
    case PerturbKind::RandomLength: return random_prompt(spec.length, s.vocab_size, spec.seed, prompt_index);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown perturbation kind");
}

}  // namespace layerlens
