#include "vgnmn/diagnostics.hpp"

#include "vgnmn/ops.hpp"

namespace vgnmn {

TinySetup tiny_setup() {
  TinySetup s;
  s.world.entities = {{"boy", "he"}, {"girl", "she"}, {"dog", "it"}};
  s.world.actions = {"running", "sitting"};
  s.world.frames = 2;
  s.world.objects = 2;
  s.world.d_vis = 4;
  s.world.d_aud = 3;
  s.world.min_turns = 2;
  s.world.max_turns = 3;

  auto& m = s.config.model;
  m.d = 8;
  m.heads = 2;
  m.layers = 1;
  m.ff_mult = 2;
  m.d_vis = s.world.d_vis;
  m.d_aud = s.world.d_aud;
  m.cnn_kernels = {1, 2};
  m.cnn_filters = 2;
  m.dropout = 0.2;
  s.config.batch = 4;
  s.config.warmup = 10;
  s.config.seed = 5;
  return s;
}

GradCheckResult model_grad_check(Model& model, const std::vector<const DialogueSample*>& samples,
                                 const Corpus& corpus, const LossWeights& weights, const GradCheckOptions& options) {
  if (samples.empty()) throw DataError("gradient check needs at least one sample");
  auto loss_fn = [&]() {
    Tensor total;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      Rng rng(options.seed * 7919 + i);
      ForwardContext ctx{true, model.config().dropout, &rng};
      const auto& s = *samples[i];
      auto t = model.loss(s, corpus.video(s.video_id), weights, ctx).total;
      total = i == 0 ? t : add(total, t);
    }
    return scale(total, 1.0 / static_cast<double>(samples.size()));
  };
  return grad_check(loss_fn, model.params(), options);
}

GradCheckResult tiny_grad_check(std::size_t coordinates, std::uint64_t seed) {
  const auto setup = tiny_setup();
  const auto corpus = generate_corpus(setup.world, setup.dialogues, setup.corpus_seed);
  Model model(setup.config.model, corpus.vocab, setup.config.seed);
  const auto& train = corpus.split("train");
  // a first turn (SUMMARIZE only) and a later turn with history
  std::vector<const DialogueSample*> picked;
  for (const auto& s : train) {
    if (picked.size() == 3) break;
    if ((picked.empty() && s.turn == 0) || (!picked.empty() && s.turn > 0)) picked.push_back(&s);
  }
  GradCheckOptions options;
  options.seed = seed;
  options.step = 1e-4;
  options.samples = coordinates;
  options.exhaustive = coordinates == 0;
  return model_grad_check(model, picked, corpus, setup.config.loss, options);
}

}  // namespace vgnmn
