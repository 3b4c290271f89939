#include "vgnmn/beam_search.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vgnmn/tensor.hpp"

namespace vgnmn {

namespace {

// Emitted sequence, with <eos> as a token when present.
std::vector<std::size_t> emitted(const BeamHypothesis& h, std::size_t eos) {
  auto seq = h.tokens;
  if (h.finished) seq.push_back(eos);
  return seq;
}

auto ranking(std::size_t eos) {
  return [eos](const BeamHypothesis& a, const BeamHypothesis& b) {
    if (a.score() != b.score()) return a.score() > b.score();
    return emitted(a, eos) < emitted(b, eos);
  };
}

}  // namespace

std::vector<double> log_softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - m);
  const double lz = m + std::log(z);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lz;
  return out;
}

std::vector<BeamHypothesis> beam_search(const StepFn& step, const BeamOptions& options) {
  if (options.beam_width == 0) throw ConfigError("beam width must be at least 1");
  std::vector<BeamHypothesis> alive{BeamHypothesis{}}, finished;
  for (std::size_t t = 0; t < options.max_len && !alive.empty(); ++t) {
    std::vector<BeamHypothesis> candidates;
    for (const auto& hyp : alive) {
      auto lp = log_softmax(step(hyp.tokens));
      for (std::size_t tok = 0; tok < lp.size(); ++tok) {
        BeamHypothesis next = hyp;
        next.log_prob += lp[tok];
        if (tok == options.eos)
          next.finished = true;
        else
          next.tokens.push_back(tok);
        candidates.push_back(std::move(next));
      }
    }
    const std::size_t keep = std::min(options.beam_width, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                      ranking(options.eos));
    alive.clear();
    for (std::size_t i = 0; i < keep; ++i)
      (candidates[i].finished ? finished : alive).push_back(std::move(candidates[i]));
    if (finished.size() >= options.beam_width) break;
  }
  // survivors at the length cap count as (truncated) completions
  for (auto& hyp : alive) finished.push_back(std::move(hyp));
  std::sort(finished.begin(), finished.end(), ranking(options.eos));
  if (finished.size() > options.beam_width) finished.resize(options.beam_width);
  return finished;
}

BeamHypothesis greedy_decode(const StepFn& step, const BeamOptions& options) {
  BeamHypothesis hyp;
  for (std::size_t t = 0; t < options.max_len; ++t) {
    auto lp = log_softmax(step(hyp.tokens));
    const auto best = static_cast<std::size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    hyp.log_prob += lp[best];
    if (best == options.eos) {
      hyp.finished = true;
      break;
    }
    hyp.tokens.push_back(best);
  }
  return hyp;
}

std::vector<BeamHypothesis> exhaustive_search(const StepFn& step, std::size_t vocab_size, const BeamOptions& options) {
  std::vector<BeamHypothesis> out;
  std::vector<BeamHypothesis> frontier{BeamHypothesis{}};
  for (std::size_t t = 0; t < options.max_len; ++t) {
    std::vector<BeamHypothesis> next;
    for (const auto& hyp : frontier) {
      auto lp = log_softmax(step(hyp.tokens));
      if (lp.size() != vocab_size) throw DimensionError("exhaustive_search: step returned the wrong vocabulary size");
      for (std::size_t tok = 0; tok < vocab_size; ++tok) {
        BeamHypothesis h = hyp;
        h.log_prob += lp[tok];
        if (tok == options.eos) {
          h.finished = true;
          out.push_back(std::move(h));
        } else {
          h.tokens.push_back(tok);
          next.push_back(std::move(h));
        }
      }
    }
    frontier = std::move(next);
  }
  for (auto& h : frontier) out.push_back(std::move(h));
  std::sort(out.begin(), out.end(), ranking(options.eos));
  return out;
}

}  // namespace vgnmn
