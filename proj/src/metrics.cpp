#include "vgnmn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "json.hpp"
#include "vgnmn/tensor.hpp"

namespace vgnmn {

namespace {

std::map<Sentence, std::size_t> ngram_counts(const Sentence& s, std::size_t n) {
  std::map<Sentence, std::size_t> counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++counts[Sentence(s.begin() + i, s.begin() + i + n)];
  return counts;
}

}  // namespace

double corpus_bleu4(const std::vector<Sentence>& candidates, const std::vector<Sentence>& references) {
  if (candidates.size() != references.size())
    throw DimensionError("corpus_bleu4: " + std::to_string(candidates.size()) + " candidates vs " +
                         std::to_string(references.size()) + " references");
  std::size_t cand_len = 0, ref_len = 0;
  double log_precision = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    std::size_t matched = 0, total = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      auto cand = ngram_counts(candidates[i], n);
      auto ref = ngram_counts(references[i], n);
      for (const auto& [gram, count] : cand) {
        total += count;
        auto it = ref.find(gram);
        if (it != ref.end()) matched += std::min(count, it->second);
      }
    }
    if (matched == 0) return 0.0;
    log_precision += 0.25 * std::log(static_cast<double>(matched) / static_cast<double>(total));
  }
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    cand_len += candidates[i].size();
    ref_len += references[i].size();
  }
  const double bp = cand_len > ref_len
                        ? 1.0
                        : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
  return bp * std::exp(log_precision);
}

void TokenAccuracy::add(const Sentence& pred, const Sentence& gold) {
  const std::size_t n = std::min(pred.size(), gold.size());
  for (std::size_t i = 0; i < n; ++i)
    if (pred[i] == gold[i]) ++matches;
  compared += n;
  spanned += std::max(pred.size(), gold.size());
}

double TokenAccuracy::overlap() const {
  return compared == 0 ? 0.0 : static_cast<double>(matches) / static_cast<double>(compared);
}

double TokenAccuracy::strict() const {
  return spanned == 0 ? 0.0 : static_cast<double>(matches) / static_cast<double>(spanned);
}

std::string Metrics::to_json() const {
  nlohmann::ordered_json j;
  j["samples"] = samples;
  j["dialogue_program_em"] = dialogue_program_em;
  j["video_program_em"] = video_program_em;
  j["response_token_accuracy"] = response_token_accuracy;
  j["response_token_accuracy_strict"] = response_token_accuracy_strict;
  j["bleu4"] = bleu4;
  return j.dump();
}

}  // namespace vgnmn
