#include "vgnmn/evaluate.hpp"

#include <omp.h>

#include <exception>

namespace vgnmn {

std::vector<SamplePrediction> predict_samples(const Model& model, const std::vector<DialogueSample>& samples,
                                              const Corpus& corpus, std::size_t threads) {
  std::vector<SamplePrediction> out(samples.size());
  std::vector<std::exception_ptr> errors(samples.size());
  const int nt = threads == 0 ? omp_get_max_threads() : static_cast<int>(threads);
#pragma omp parallel for schedule(dynamic) num_threads(nt)
  for (std::size_t i = 0; i < samples.size(); ++i) {
    try {
      const auto& s = samples[i];
      auto& r = out[i];
      r.sample = &s;
      r.prediction = model.predict(s.history, s.question, corpus.video(s.video_id));
      r.dialogue_match = r.prediction.dialogue_program_valid &&
                         program_exact_match(r.prediction.dialogue_program, s.dialogue_program);
      r.video_match =
          r.prediction.video_program_valid && program_exact_match(r.prediction.video_program, s.video_program);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

Metrics score_predictions(const std::vector<SamplePrediction>& predictions) {
  Metrics m;
  m.samples = predictions.size();
  if (predictions.empty()) return m;
  std::size_t dial = 0, vid = 0;
  TokenAccuracy acc;
  std::vector<Sentence> candidates, references;
  for (const auto& p : predictions) {
    dial += p.dialogue_match;
    vid += p.video_match;
    acc.add(p.prediction.response, p.sample->response);
    candidates.push_back(p.prediction.response);
    references.push_back(p.sample->response);
  }
  const double n = static_cast<double>(predictions.size());
  m.dialogue_program_em = static_cast<double>(dial) / n;
  m.video_program_em = static_cast<double>(vid) / n;
  m.response_token_accuracy = acc.overlap();
  m.response_token_accuracy_strict = acc.strict();
  m.bleu4 = corpus_bleu4(candidates, references);
  return m;
}

Metrics evaluate_split(const Model& model, const Corpus& corpus, const std::string& split, std::size_t threads) {
  return score_predictions(predict_samples(model, corpus.split(split), corpus, threads));
}

}  // namespace vgnmn
