#pragma once

#include <span>
#include <vector>

#include "vgnmn/encoders.hpp"
#include "vgnmn/ops.hpp"
#include "vgnmn/program.hpp"
#include "vgnmn/vocab.hpp"

// Neural modules instantiated by reasoning programs, and the executors that
// chain them. Shapes use N for entities and A for actions of the program.
namespace vgnmn {

/// Single-head scaled dot-product attention from a parameter vector to a set
/// of rows: scores_j = (P·W_q)·(X_j·W_k)ᵀ / √d.
struct AttentionMaps {
  Tensor query;  // [d × d]
  Tensor key;    // [d × d]
};

struct ModuleWeights {
  AttentionMaps find;
  AttentionMaps where;
  AttentionMaps when;
  Tensor summarize_w, summarize_b;  // [d × d], [d]
  TextCnnWeights summarize_cnn;
  Tensor describe_w;  // [2d × d]
};

/// Module output together with its normalized attention.
struct Attended {
  Tensor out;
  Tensor weights;
};

/// Average of the raw token embeddings of a module parameter: [1 × d].
Tensor param_embedding(std::span<const std::size_t> ids, const Tensor& embedding);

/// Attention over history tokens, weighted sum, plus P. out [1×d], weights [1×L_H].
Attended find(const Tensor& param, const Tensor& history, const AttentionMaps& maps);

/// One row per entity: text_cnn(Q + tile(H_ent,i·W + b)). With no entities
/// the result is the mean-pooled question, [1×d].
Tensor summarize(const std::vector<Tensor>& entities, const Tensor& question, const ModuleWeights& weights);

/// Per-frame attention over object slots. obj [F×O×d] -> out [F×d], weights [F×O].
Attended where_obj(const Tensor& param, const Tensor& obj, const AttentionMaps& maps);

/// Attention over frames; the attended vector is added to every frame.
/// frames [F×d] -> out [F×d], weights [1×F].
Attended where_temporal(const Tensor& param, const Tensor& frames, const AttentionMaps& maps);

/// Per-entity attention over that entity's frames.
/// entity_tracks [N×F×d] -> out [N×d], weights [N×F].
Attended when(const Tensor& param, const Tensor& entity_tracks, const AttentionMaps& maps);

/// [V_ea ; P_stack]·W_desc: [N×A×d] -> [N×A×d].
Tensor describe(const Tensor& param, const Tensor& entity_action, const Tensor& describe_w);

/// describe() with P = mean of the encoded question rows.
Tensor exist(const Tensor& question, const Tensor& entity_action, const Tensor& describe_w);

/// [N×A×d] -> [(N+A)×d]: rows 0..N-1 average over actions, rows N.. average
/// over entities.
Tensor marginal_sequence(const Tensor& context);

struct ExecutionEnv {
  const Vocab& vocab;
  const Tensor& embedding;
  const ModuleWeights& weights;
};

struct ExecutionTrace {
  std::vector<Tensor> find;           // [1×L_H] per FIND
  std::vector<Tensor> where_obj;      // [F×O] per WHERE
  std::vector<Tensor> where_cnn;      // [1×F] per WHERE
  std::vector<Tensor> where_aud;      // [1×F] per WHERE
  std::vector<Tensor> when_visual;    // [N×F] per WHEN
  std::vector<Tensor> when_audio;     // [N×F] per WHEN
  Tensor fusion;                      // [(N+A)×2], filled by the fusion step
};

/// Runs FIND steps and SUMMARIZE; returns Q_ctx [max(N,1) × d].
Tensor execute_dialogue_program(const Program& program, const Tensor& history, const Tensor& question,
                                const ExecutionEnv& env, ExecutionTrace* trace = nullptr);

struct VideoContext {
  Tensor grid;      // [N×A×d]
  Tensor sequence;  // [(N+A)×d]
};

struct VideoExecution {
  VideoContext visual;
  VideoContext audio;
  std::size_t entities = 0;
  std::size_t actions = 0;
};

/// Visual entity tracks are where_obj over object slots plus where_temporal
/// over the frame-level CNN stream; audio tracks are where_temporal over the
/// audio stream. WHEN and the terminal module run on each modality. With no
/// WHEN step a single implicit action P = mean(Q) is used.
VideoExecution execute_video_program(const Program& program, const ProjectedVideo& video, const Tensor& question,
                                     const ExecutionEnv& env, ExecutionTrace* trace = nullptr);

}  // namespace vgnmn
