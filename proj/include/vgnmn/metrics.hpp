#pragma once

#include <string>
#include <vector>

namespace vgnmn {

using Sentence = std::vector<std::string>;

/// Corpus-level BLEU-4: clipped n-gram precisions pooled over the corpus,
/// uniform geometric mean, brevity penalty exp(1 − r/c) when c ≤ r. No
/// smoothing, so any empty n-gram order gives 0. One reference per candidate.
double corpus_bleu4(const std::vector<Sentence>& candidates, const std::vector<Sentence>& references);

struct TokenAccuracy {
  std::size_t matches = 0;
  std::size_t compared = 0;     // Σ min(|pred|, |gold|)
  std::size_t spanned = 0;      // Σ max(|pred|, |gold|)

  void add(const Sentence& pred, const Sentence& gold);
  /// Position-wise accuracy over the overlapping prefix of each pair.
  double overlap() const;
  /// Matches over the longer of each pair; missing or extra tokens count against.
  double strict() const;
};

struct Metrics {
  std::size_t samples = 0;
  double dialogue_program_em = 0.0;
  double video_program_em = 0.0;
  double response_token_accuracy = 0.0;         // overlap form
  double response_token_accuracy_strict = 0.0;  // over the longer sequence
  double bleu4 = 0.0;

  std::string to_json() const;
};

}  // namespace vgnmn
