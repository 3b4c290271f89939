#include "vgnmn/modules.hpp"

#include <cmath>
#include <numeric>

namespace vgnmn {

namespace {

// Attention of one query vector over `groups` sets of `members` rows each.
Attended attend_groups(const Tensor& param, const Tensor& rows, std::size_t groups, std::size_t members,
                       const AttentionMaps& maps) {
  const std::size_t d = rows.cols();
  auto q = matmul(param, maps.query);
  auto k = matmul(rows, maps.key);
  auto scores = scale(matmul_nt(k, q), 1.0 / std::sqrt(static_cast<double>(d)));
  auto weights = softmax_lastdim(reshape(scores, {groups, members}));
  return {group_weighted_sum(weights, rows), weights};
}

std::vector<std::size_t> param_ids(const ProgramStep& step, const Vocab& vocab) { return vocab.encode(step.param); }

void require_valid(const Program& program, ProgramKind kind) {
  if (program.kind != kind)
    throw ProgramError({{0, ViolationCode::kWrongKind,
                         "expected a " + std::string(program_kind_name(kind)) + " program"}});
  auto violations = validate_program(program);
  if (!violations.empty()) throw ProgramError(std::move(violations));
}

}  // namespace

Tensor param_embedding(std::span<const std::size_t> ids, const Tensor& embedding) {
  if (ids.empty()) throw DataError("module parameter must have at least one token");
  return mean_rows(gather_rows(embedding, ids));
}

Attended find(const Tensor& param, const Tensor& history, const AttentionMaps& maps) {
  auto a = attend_groups(param, history, 1, history.rows(), maps);
  return {add(a.out, param), a.weights};
}

Tensor summarize(const std::vector<Tensor>& entities, const Tensor& question, const ModuleWeights& weights) {
  if (entities.empty()) return mean_rows(question);
  std::vector<Tensor> rows;
  rows.reserve(entities.size());
  for (const auto& h : entities) {
    auto projected = linear(h, weights.summarize_w, weights.summarize_b);
    rows.push_back(text_cnn(add(question, projected), weights.summarize_cnn));
  }
  return concat_rows(rows);
}

Attended where_obj(const Tensor& param, const Tensor& obj, const AttentionMaps& maps) {
  const std::size_t f = obj.dim(0), o = obj.dim(1);
  return attend_groups(param, reshape(obj, {f * o, obj.cols()}), f, o, maps);
}

Attended where_temporal(const Tensor& param, const Tensor& frames, const AttentionMaps& maps) {
  auto a = attend_groups(param, frames, 1, frames.rows(), maps);
  return {add(frames, a.out), a.weights};
}

Attended when(const Tensor& param, const Tensor& entity_tracks, const AttentionMaps& maps) {
  const std::size_t n = entity_tracks.dim(0), f = entity_tracks.dim(1);
  return attend_groups(param, reshape(entity_tracks, {n * f, entity_tracks.cols()}), n, f, maps);
}

Tensor describe(const Tensor& param, const Tensor& entity_action, const Tensor& describe_w) {
  const std::size_t n = entity_action.dim(0), a = entity_action.dim(1), d = entity_action.cols();
  if (param.numel() != d) throw DimensionError("describe", param.shape(), entity_action.shape());
  std::vector<std::size_t> tile(n * a, 0);
  auto stacked = gather_rows(param, tile);
  auto flat = reshape(entity_action, {n * a, d});
  return reshape(matmul(concat_cols({flat, stacked}), describe_w), {n, a, describe_w.cols()});
}

Tensor exist(const Tensor& question, const Tensor& entity_action, const Tensor& describe_w) {
  return describe(mean_rows(question), entity_action, describe_w);
}

Tensor marginal_sequence(const Tensor& context) {
  const std::size_t n = context.dim(0), a = context.dim(1);
  std::vector<double> pool((n + a) * n * a, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < a; ++j) {
      pool[i * (n * a) + i * a + j] = 1.0 / static_cast<double>(a);
      pool[(n + j) * (n * a) + i * a + j] = 1.0 / static_cast<double>(n);
    }
  return matmul(Tensor({n + a, n * a}, std::move(pool)), reshape(context, {n * a, context.cols()}));
}

Tensor execute_dialogue_program(const Program& program, const Tensor& history, const Tensor& question,
                                const ExecutionEnv& env, ExecutionTrace* trace) {
  require_valid(program, ProgramKind::kDialogue);
  std::vector<Tensor> entities;
  for (const auto& step : program.steps) {
    if (step.module != ModuleKind::kFind) continue;
    auto ids = param_ids(step, env.vocab);
    auto found = find(param_embedding(ids, env.embedding), history, env.weights.find);
    if (trace) trace->find.push_back(found.weights);
    entities.push_back(found.out);
  }
  return summarize(entities, question, env.weights);
}

VideoExecution execute_video_program(const Program& program, const ProjectedVideo& video, const Tensor& question,
                                     const ExecutionEnv& env, ExecutionTrace* trace) {
  require_valid(program, ProgramKind::kVideo);
  const std::size_t f = video.frames, d = video.cnn.cols();

  std::vector<Tensor> visual_tracks, audio_tracks;
  std::vector<Tensor> action_params;
  Tensor terminal_param;
  for (const auto& step : program.steps) {
    switch (step.module) {
      case ModuleKind::kWhere: {
        auto p = param_embedding(param_ids(step, env.vocab), env.embedding);
        auto obj = where_obj(p, video.obj, env.weights.where);
        auto cnn = where_temporal(p, video.cnn, env.weights.where);
        auto aud = where_temporal(p, video.aud, env.weights.where);
        visual_tracks.push_back(add(obj.out, cnn.out));
        audio_tracks.push_back(aud.out);
        if (trace) {
          trace->where_obj.push_back(obj.weights);
          trace->where_cnn.push_back(cnn.weights);
          trace->where_aud.push_back(aud.weights);
        }
        break;
      }
      case ModuleKind::kWhen:
        action_params.push_back(param_embedding(param_ids(step, env.vocab), env.embedding));
        break;
      case ModuleKind::kDescribe:
        terminal_param = param_embedding(param_ids(step, env.vocab), env.embedding);
        break;
      default:
        break;
    }
  }
  if (action_params.empty()) action_params.push_back(mean_rows(question));
  if (!terminal_param.defined()) terminal_param = mean_rows(question);  // EXIST

  const std::size_t n = visual_tracks.size(), a = action_params.size();
  // V_ea rows are ordered (entity, action); per-action outputs arrive as
  // (action, entity) blocks.
  std::vector<std::size_t> entity_major(n * a);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < a; ++j) entity_major[i * a + j] = j * n + i;

  auto run_modality = [&](const std::vector<Tensor>& tracks, std::vector<Tensor>* when_trace) {
    auto stacked = reshape(concat_rows(tracks), {n, f, d});
    std::vector<Tensor> per_action;
    per_action.reserve(a);
    for (const auto& p : action_params) {
      auto w = when(p, stacked, env.weights.when);
      if (when_trace) when_trace->push_back(w.weights);
      per_action.push_back(w.out);
    }
    auto entity_action = reshape(gather_rows(concat_rows(per_action), entity_major), {n, a, d});
    auto grid = describe(terminal_param, entity_action, env.weights.describe_w);
    return VideoContext{grid, marginal_sequence(grid)};
  };

  VideoExecution out;
  out.visual = run_modality(visual_tracks, trace ? &trace->when_visual : nullptr);
  out.audio = run_modality(audio_tracks, trace ? &trace->when_audio : nullptr);
  out.entities = n;
  out.actions = a;
  return out;
}

}  // namespace vgnmn
