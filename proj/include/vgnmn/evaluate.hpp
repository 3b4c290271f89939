#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vgnmn/corpus.hpp"
#include "vgnmn/metrics.hpp"
#include "vgnmn/model.hpp"

namespace vgnmn {

struct SamplePrediction {
  const DialogueSample* sample = nullptr;
  Prediction prediction;
  bool dialogue_match = false;
  bool video_match = false;
};

/// Full inference on every sample: predicted programs are executed and the
/// response is beam-decoded. An invalid parse never counts as a match.
std::vector<SamplePrediction> predict_samples(const Model& model, const std::vector<DialogueSample>& samples,
                                              const Corpus& corpus, std::size_t threads = 0);

Metrics score_predictions(const std::vector<SamplePrediction>& predictions);

Metrics evaluate_split(const Model& model, const Corpus& corpus, const std::string& split, std::size_t threads = 0);

}  // namespace vgnmn
