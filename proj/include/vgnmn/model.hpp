#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vgnmn/attention.hpp"
#include "vgnmn/beam_search.hpp"
#include "vgnmn/corpus.hpp"
#include "vgnmn/encoders.hpp"
#include "vgnmn/kv_config.hpp"
#include "vgnmn/modules.hpp"
#include "vgnmn/param_store.hpp"
#include "vgnmn/program.hpp"
#include "vgnmn/vocab.hpp"

namespace vgnmn {

struct ModelConfig {
  std::size_t d = 64;
  std::size_t heads = 8;
  std::size_t layers = 1;   // decoder depth per stack
  std::size_t ff_mult = 4;  // d_ff = ff_mult · d
  std::size_t d_vis = 16;
  std::size_t d_aud = 8;
  std::vector<std::size_t> cnn_kernels = {1, 2, 3};
  std::size_t cnn_filters = 16;  // per kernel size
  double dropout = 0.2;
  std::size_t max_program_len = 24;
  std::size_t max_response_len = 24;
  std::size_t beam_width = 5;

  void validate() const;
  /// Reads the keys above; unrelated keys are left to the caller.
  static ModelConfig from_config(const KvConfig& cfg);
  void to_config(KvConfig& cfg) const;
  static const std::vector<std::string>& config_keys();
};

/// √(6 / (fan_in + fan_out))
double glorot_bound(std::size_t fan_in, std::size_t fan_out);

/// Glorot-uniform weights and embeddings, zero biases, unit norm gains.
/// Values are rounded to float32 so that checkpoints are exact.
ParamStore init_params(const ModelConfig& config, std::size_t vocab_size, std::uint64_t seed);

struct LossWeights {
  double alpha = 1.0;  // dialogue-program term
  double beta = 1.0;   // video-program term
  double label_smoothing = 0.1;
};

/// Per-sample token cross entropies and their weighted sum
///   total = alpha·dialogue + beta·video + response.
struct LossTerms {
  Tensor dialogue, video, response, total;
};

struct Contexts {
  Tensor question;          // Q [L_Q×d]
  Tensor question_context;  // Q_ctx
  VideoExecution video;
  Fusion fusion;
};

struct Prediction {
  Program dialogue_program;
  Program video_program;
  bool dialogue_program_valid = true;
  bool video_program_valid = true;
  std::vector<std::string> response;
  ExecutionTrace trace;
};

class Model {
 public:
  Model(ModelConfig config, Vocab vocab, std::uint64_t seed);
  /// Adopts `params`; throws DataError if any expected tensor is missing,
  /// misshapen, or unexpected.
  Model(ModelConfig config, Vocab vocab, ParamStore params);

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return config_; }
  const Vocab& vocab() const { return vocab_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  /// Token encoding; an empty sequence is encoded as a single <pad>.
  Tensor encode(const std::vector<std::size_t>& ids, const ForwardContext& ctx = {}) const;
  ProjectedVideo project(const VideoFeatures& video, const ForwardContext& ctx = {}) const;

  /// Vocabulary logits for every position of <sos>+prefix: [(|prefix|+1)×|V|].
  Tensor dialogue_parser_logits(const std::vector<std::size_t>& prefix, const Tensor& question,
                                const ForwardContext& ctx = {}) const;
  Tensor video_parser_logits(const std::vector<std::size_t>& prefix, const Tensor& question,
                             const Tensor& question_context, const ForwardContext& ctx = {}) const;
  Tensor response_logits(const std::vector<std::size_t>& prefix, const Tensor& question_context,
                         const Tensor& video_context, const ForwardContext& ctx = {}) const;

  /// Executes both programs and fuses the modalities.
  Contexts contexts(const Program& dialogue_program, const Program& video_program, const Tensor& history,
                    const Tensor& question, const ProjectedVideo& video, ExecutionTrace* trace = nullptr) const;

  /// Teacher-forced loss of one sample; contexts come from its gold programs.
  LossTerms loss(const DialogueSample& sample, const VideoFeatures& video, const LossWeights& weights,
                 const ForwardContext& ctx = {}) const;

  /// Full inference: parse and execute the dialogue program, parse and
  /// execute the video program, fuse, then beam-decode the response.
  /// Invalid parses fall back to "SUMMARIZE" and "<question> WHERE EXIST".
  Prediction predict(const std::vector<std::string>& history, const std::vector<std::string>& question,
                     const VideoFeatures& video) const;

  /// Greedy program parses only (no response decoding).
  Prediction parse(const std::vector<std::string>& history, const std::vector<std::string>& question,
                   const VideoFeatures* video = nullptr) const;

  ExecutionEnv env() const { return {vocab_, embedding_, modules_}; }

 private:
  void bind();
  Prediction run(const std::vector<std::string>& history, const std::vector<std::string>& question,
                 const VideoFeatures* video, bool respond) const;

  ModelConfig config_;
  Vocab vocab_;
  ParamStore params_;

  Tensor embedding_;
  TextEncoderWeights text_;
  VideoProjectionWeights video_proj_;
  ModuleWeights modules_;
  Tensor fusion_w_;
  DecoderStack dialogue_parser_, video_parser_, response_decoder_;
};

}  // namespace vgnmn
