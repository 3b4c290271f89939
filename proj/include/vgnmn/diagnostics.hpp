#pragma once

#include <string>
#include <vector>

#include "vgnmn/corpus.hpp"
#include "vgnmn/grad_check.hpp"
#include "vgnmn/training.hpp"

namespace vgnmn {

/// A model small enough to finite-difference: d=8, 2 heads, 2 frames and
/// 2 objects, three entities and two actions (about 30 words).
struct TinySetup {
  TrainConfig config;
  WorldSpec world;
  std::size_t dialogues = 10;
  std::uint64_t corpus_seed = 3;
};

TinySetup tiny_setup();

/// Gradient check of the joint loss, averaged over `samples`, with dropout
/// active under a mask that is reseeded identically for every evaluation.
GradCheckResult model_grad_check(Model& model, const std::vector<const DialogueSample*>& samples,
                                 const Corpus& corpus, const LossWeights& weights, const GradCheckOptions& options);

/// Builds the tiny setup and checks `coordinates` sampled coordinates, or
/// every coordinate when `coordinates` is 0.
GradCheckResult tiny_grad_check(std::size_t coordinates, std::uint64_t seed = 0);

}  // namespace vgnmn
