#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace vgnmn {

/// Next-token logits given the tokens decoded so far (without <sos>).
using StepFn = std::function<std::vector<double>(std::span<const std::size_t> prefix)>;

struct BeamHypothesis {
  std::vector<std::size_t> tokens;  // excludes the closing <eos>
  double log_prob = 0.0;
  bool finished = false;  // closed by <eos>; false means cut at max_len

  /// Scored length: generated tokens, counting <eos>.
  std::size_t length() const { return tokens.size() + (finished ? 1 : 0); }
  double score() const { return length() == 0 ? 0.0 : log_prob / static_cast<double>(length()); }
};

struct BeamOptions {
  std::size_t beam_width = 5;
  std::size_t max_len = 24;
  std::size_t eos = 2;
};

/// Length-capped beam search. Each step keeps the `beam_width` best
/// expansions by length-normalized log-probability; expansions ending in
/// <eos> retire as finished. Ties go to the lexicographically smaller token
/// sequence. Returns at most `beam_width` hypotheses, best first.
std::vector<BeamHypothesis> beam_search(const StepFn& step, const BeamOptions& options);

/// Argmax decoding, lowest index on ties.
BeamHypothesis greedy_decode(const StepFn& step, const BeamOptions& options);

/// Every sequence the decoder can emit within max_len, scored like
/// beam_search and sorted best first. Exponential; for tests on tiny vocabularies.
std::vector<BeamHypothesis> exhaustive_search(const StepFn& step, std::size_t vocab_size, const BeamOptions& options);

/// Numerically stable log-softmax of one logit vector.
std::vector<double> log_softmax(std::span<const double> logits);

}  // namespace vgnmn
