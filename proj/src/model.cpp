#include "vgnmn/model.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace vgnmn {

namespace {

enum class Init { kGlorot, kZero, kOne };

struct ParamSpec {
  std::string name;
  Shape shape;
  Init init;
};

std::string stack_name(DecoderRole role) {
  switch (role) {
    case DecoderRole::kDialogueParser: return "dialogue_parser";
    case DecoderRole::kVideoParser: return "video_parser";
    case DecoderRole::kResponse: return "response_decoder";
  }
  return "decoder";
}

constexpr DecoderRole kRoles[] = {DecoderRole::kDialogueParser, DecoderRole::kVideoParser, DecoderRole::kResponse};

std::string block_prefix(DecoderRole role, std::size_t layer, std::size_t block) {
  return stack_name(role) + ".l" + std::to_string(layer) + ".b" + std::to_string(block);
}

std::vector<ParamSpec> param_specs(const ModelConfig& c, std::size_t vocab_size) {
  const std::size_t d = c.d, ff = c.ff_mult * c.d;
  std::vector<ParamSpec> specs;
  auto w = [&](std::string name, std::size_t in, std::size_t out) {
    specs.push_back({std::move(name), {in, out}, Init::kGlorot});
  };
  auto b = [&](std::string name, std::size_t n) { specs.push_back({std::move(name), {n}, Init::kZero}); };
  auto g = [&](std::string name, std::size_t n) { specs.push_back({std::move(name), {n}, Init::kOne}); };

  w("embedding", vocab_size, d);
  g("text_norm.gain", d);
  b("text_norm.bias", d);

  w("video.coord_w", 4, c.d_vis);
  b("video.coord_b", c.d_vis);
  w("video.obj_w", 2 * c.d_vis, d);
  b("video.obj_b", d);
  w("video.cnn_w", c.d_vis, d);
  b("video.cnn_b", d);
  w("video.aud_w", c.d_aud, d);
  b("video.aud_b", d);

  for (const char* m : {"find", "where", "when"}) {
    w(std::string("module.") + m + ".query", d, d);
    w(std::string("module.") + m + ".key", d, d);
  }
  w("module.summarize.w", d, d);
  b("module.summarize.b", d);
  for (auto k : c.cnn_kernels) {
    w("module.summarize.cnn.k" + std::to_string(k) + ".w", k * d, c.cnn_filters);
    b("module.summarize.cnn.k" + std::to_string(k) + ".b", c.cnn_filters);
  }
  w("module.summarize.cnn.out_w", c.cnn_kernels.size() * c.cnn_filters, d);
  b("module.summarize.cnn.out_b", d);
  w("module.describe.w", 2 * d, d);
  w("fusion.w", 3 * d, 2);

  for (auto role : kRoles)
    for (std::size_t l = 0; l < c.layers; ++l)
      for (std::size_t blk = 0; blk <= memories_for(role); ++blk) {
        const auto p = block_prefix(role, l, blk);
        for (const char* proj : {"q", "k", "v", "o"}) {
          w(p + ".w" + proj, d, d);
          b(p + ".b" + proj, d);
        }
        g(p + ".norm1.gain", d);
        b(p + ".norm1.bias", d);
        w(p + ".ff_w1", d, ff);
        b(p + ".ff_b1", ff);
        w(p + ".ff_w2", ff, d);
        b(p + ".ff_b2", d);
        g(p + ".norm2.gain", d);
        b(p + ".norm2.bias", d);
      }
  return specs;
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stoul(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
    }
  }
  return out;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

Program fallback_dialogue_program() { return Program{ProgramKind::kDialogue, {{{}, ModuleKind::kSummarize}}}; }

Program fallback_video_program(const std::vector<std::string>& question) {
  std::vector<std::string> param;
  for (const auto& t : question)
    if (!module_from_keyword(t)) param.push_back(t);
  if (param.empty()) param.push_back(std::string(Vocab::kReserved[Vocab::kUnk]));
  return Program{ProgramKind::kVideo, {{param, ModuleKind::kWhere}, {{}, ModuleKind::kExist}}};
}

std::vector<std::size_t> with_eos(std::vector<std::size_t> ids) {
  ids.push_back(Vocab::kEos);
  return ids;
}

}  // namespace

void ModelConfig::validate() const {
  if (d == 0 || d % 2 != 0) throw ConfigError("model dimension d must be even and positive");
  if (heads == 0 || d % heads != 0)
    throw ConfigError("model dimension " + std::to_string(d) + " is not divisible by " + std::to_string(heads) +
                      " heads");
  if (layers == 0) throw ConfigError("decoder depth must be at least 1");
  if (ff_mult == 0) throw ConfigError("ff_mult must be at least 1");
  if (d_vis == 0 || d_aud == 0) throw ConfigError("feature dimensions must be positive");
  if (cnn_kernels.empty() || cnn_filters == 0) throw ConfigError("summarize CNN needs kernels and filters");
  for (auto k : cnn_kernels)
    if (k == 0) throw ConfigError("CNN kernel sizes must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0,1)");
  if (max_program_len == 0 || max_response_len == 0) throw ConfigError("decode lengths must be positive");
  if (beam_width == 0) throw ConfigError("beam width must be at least 1");
}

const std::vector<std::string>& ModelConfig::config_keys() {
  static const std::vector<std::string> keys = {"d",         "heads",           "layers",           "ff_mult",
                                                "d_vis",     "d_aud",           "cnn_kernels",      "cnn_filters",
                                                "dropout",   "max_program_len", "max_response_len", "beam_width"};
  return keys;
}

ModelConfig ModelConfig::from_config(const KvConfig& cfg) {
  ModelConfig c;
  c.d = cfg.get_size("d", c.d);
  c.heads = cfg.get_size("heads", c.heads);
  c.layers = cfg.get_size("layers", c.layers);
  c.ff_mult = cfg.get_size("ff_mult", c.ff_mult);
  c.d_vis = cfg.get_size("d_vis", c.d_vis);
  c.d_aud = cfg.get_size("d_aud", c.d_aud);
  if (cfg.has("cnn_kernels")) c.cnn_kernels = parse_size_list("cnn_kernels", cfg.get_string("cnn_kernels", ""));
  c.cnn_filters = cfg.get_size("cnn_filters", c.cnn_filters);
  c.dropout = cfg.get_double("dropout", c.dropout);
  c.max_program_len = cfg.get_size("max_program_len", c.max_program_len);
  c.max_response_len = cfg.get_size("max_response_len", c.max_response_len);
  c.beam_width = cfg.get_size("beam_width", c.beam_width);
  c.validate();
  return c;
}

void ModelConfig::to_config(KvConfig& cfg) const {
  cfg.set("d", std::to_string(d));
  cfg.set("heads", std::to_string(heads));
  cfg.set("layers", std::to_string(layers));
  cfg.set("ff_mult", std::to_string(ff_mult));
  cfg.set("d_vis", std::to_string(d_vis));
  cfg.set("d_aud", std::to_string(d_aud));
  std::string kernels;
  for (auto k : cnn_kernels) kernels += (kernels.empty() ? "" : ",") + std::to_string(k);
  cfg.set("cnn_kernels", kernels);
  cfg.set("cnn_filters", std::to_string(cnn_filters));
  cfg.set("dropout", format_double(dropout));
  cfg.set("max_program_len", std::to_string(max_program_len));
  cfg.set("max_response_len", std::to_string(max_response_len));
  cfg.set("beam_width", std::to_string(beam_width));
}

double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

ParamStore init_params(const ModelConfig& config, std::size_t vocab_size, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ParamStore store;
  for (const auto& spec : param_specs(config, vocab_size)) {
    std::vector<double> values(shape_numel(spec.shape), spec.init == Init::kOne ? 1.0 : 0.0);
    if (spec.init == Init::kGlorot) {
      const double bound = glorot_bound(spec.shape[0], spec.shape[1]);
      std::uniform_real_distribution<double> uni(-bound, bound);
      for (auto& v : values) v = static_cast<double>(static_cast<float>(uni(rng)));
    }
    store.add(spec.name, Tensor(spec.shape, std::move(values)));
  }
  return store;
}

Model::Model(ModelConfig config, Vocab vocab, std::uint64_t seed)
    : config_(std::move(config)), vocab_(std::move(vocab)), params_(init_params(config_, vocab_.size(), seed)) {
  bind();
}

Model::Model(ModelConfig config, Vocab vocab, ParamStore params)
    : config_(std::move(config)), vocab_(std::move(vocab)), params_(std::move(params)) {
  config_.validate();
  const auto specs = param_specs(config_, vocab_.size());
  for (const auto& spec : specs) {
    if (!params_.contains(spec.name)) throw DataError("model parameter '" + spec.name + "' is missing");
    const auto& t = params_.get(spec.name);
    if (t.shape() != spec.shape)
      throw DataError("model parameter '" + spec.name + "' has shape " + shape_str(t.shape()) + ", expected " +
                      shape_str(spec.shape));
  }
  if (params_.size() != specs.size())
    throw DataError("parameter set has " + std::to_string(params_.size()) + " tensors, model expects " +
                    std::to_string(specs.size()));
  bind();
}

void Model::bind() {
  const auto& p = params_;
  embedding_ = p.get("embedding");
  text_ = {embedding_, p.get("text_norm.gain"), p.get("text_norm.bias")};
  video_proj_ = {p.get("video.coord_w"), p.get("video.coord_b"), p.get("video.obj_w"), p.get("video.obj_b"),
                 p.get("video.cnn_w"),   p.get("video.cnn_b"),   p.get("video.aud_w"), p.get("video.aud_b")};
  auto maps = [&](const std::string& m) {
    return AttentionMaps{p.get("module." + m + ".query"), p.get("module." + m + ".key")};
  };
  modules_.find = maps("find");
  modules_.where = maps("where");
  modules_.when = maps("when");
  modules_.summarize_w = p.get("module.summarize.w");
  modules_.summarize_b = p.get("module.summarize.b");
  modules_.summarize_cnn = {};
  modules_.summarize_cnn.kernel_sizes = config_.cnn_kernels;
  for (auto k : config_.cnn_kernels) {
    modules_.summarize_cnn.filters.push_back(p.get("module.summarize.cnn.k" + std::to_string(k) + ".w"));
    modules_.summarize_cnn.biases.push_back(p.get("module.summarize.cnn.k" + std::to_string(k) + ".b"));
  }
  modules_.summarize_cnn.out_w = p.get("module.summarize.cnn.out_w");
  modules_.summarize_cnn.out_b = p.get("module.summarize.cnn.out_b");
  modules_.describe_w = p.get("module.describe.w");
  fusion_w_ = p.get("fusion.w");

  for (auto role : kRoles) {
    DecoderStack stack{role, {}};
    for (std::size_t l = 0; l < config_.layers; ++l) {
      std::vector<AttentionBlockWeights> blocks;
      for (std::size_t blk = 0; blk <= memories_for(role); ++blk) {
        const auto pre = block_prefix(role, l, blk);
        AttentionBlockWeights w;
        w.heads = config_.heads;
        w.wq = p.get(pre + ".wq"), w.bq = p.get(pre + ".bq");
        w.wk = p.get(pre + ".wk"), w.bk = p.get(pre + ".bk");
        w.wv = p.get(pre + ".wv"), w.bv = p.get(pre + ".bv");
        w.wo = p.get(pre + ".wo"), w.bo = p.get(pre + ".bo");
        w.norm1_gain = p.get(pre + ".norm1.gain"), w.norm1_bias = p.get(pre + ".norm1.bias");
        w.ff_w1 = p.get(pre + ".ff_w1"), w.ff_b1 = p.get(pre + ".ff_b1");
        w.ff_w2 = p.get(pre + ".ff_w2"), w.ff_b2 = p.get(pre + ".ff_b2");
        w.norm2_gain = p.get(pre + ".norm2.gain"), w.norm2_bias = p.get(pre + ".norm2.bias");
        blocks.push_back(std::move(w));
      }
      stack.layers.push_back(std::move(blocks));
    }
    switch (role) {
      case DecoderRole::kDialogueParser: dialogue_parser_ = std::move(stack); break;
      case DecoderRole::kVideoParser: video_parser_ = std::move(stack); break;
      case DecoderRole::kResponse: response_decoder_ = std::move(stack); break;
    }
  }
}

Tensor Model::encode(const std::vector<std::size_t>& ids, const ForwardContext& ctx) const {
  if (ids.empty()) {
    const std::size_t pad[] = {Vocab::kPad};
    return encode_text(pad, text_, ctx).reps;
  }
  return encode_text(ids, text_, ctx).reps;
}

ProjectedVideo Model::project(const VideoFeatures& video, const ForwardContext& ctx) const {
  if (video.obj.dim(2) != config_.d_vis || video.cnn.cols() != config_.d_vis || video.aud.cols() != config_.d_aud)
    throw DataError("video feature widths " + shape_str(video.obj.shape()) + "/" + shape_str(video.aud.shape()) +
                    " do not match the model (d_vis=" + std::to_string(config_.d_vis) +
                    ", d_aud=" + std::to_string(config_.d_aud) + ")");
  return project_video(video, video_proj_, ctx);
}

Tensor Model::dialogue_parser_logits(const std::vector<std::size_t>& prefix, const Tensor& question,
                                     const ForwardContext& ctx) const {
  auto x = decoder_prefix(prefix, text_, ctx).reps;
  const Tensor mem[] = {question};
  return vocab_logits(run_decoder(dialogue_parser_, x, mem, ctx), embedding_);
}

Tensor Model::video_parser_logits(const std::vector<std::size_t>& prefix, const Tensor& question,
                                  const Tensor& question_context, const ForwardContext& ctx) const {
  auto x = decoder_prefix(prefix, text_, ctx).reps;
  const Tensor mem[] = {question, question_context};
  return vocab_logits(run_decoder(video_parser_, x, mem, ctx), embedding_);
}

Tensor Model::response_logits(const std::vector<std::size_t>& prefix, const Tensor& question_context,
                              const Tensor& video_context, const ForwardContext& ctx) const {
  auto x = decoder_prefix(prefix, text_, ctx).reps;
  const Tensor mem[] = {question_context, video_context};
  return vocab_logits(run_decoder(response_decoder_, x, mem, ctx), embedding_);
}

Contexts Model::contexts(const Program& dialogue_program, const Program& video_program, const Tensor& history,
                         const Tensor& question, const ProjectedVideo& video, ExecutionTrace* trace) const {
  Contexts c;
  c.question = question;
  c.question_context = execute_dialogue_program(dialogue_program, history, question, env(), trace);
  c.video = execute_video_program(video_program, video, question, env(), trace);
  c.fusion = fuse_modalities(question, c.video.visual.sequence, c.video.audio.sequence, fusion_w_);
  if (trace) trace->fusion = c.fusion.weights;
  return c;
}

LossTerms Model::loss(const DialogueSample& sample, const VideoFeatures& video, const LossWeights& weights,
                      const ForwardContext& ctx) const {
  if (sample.dialogue_program.steps.empty() || sample.video_program.steps.empty())
    throw DataError("sample " + sample.dialogue_id + " turn " + std::to_string(sample.turn) +
                    " lacks gold programs");
  const auto history = encode(vocab_.encode(sample.history), ctx);
  const auto question = encode(vocab_.encode(sample.question), ctx);
  const auto projected = project(video, ctx);
  const auto c = contexts(sample.dialogue_program, sample.video_program, history, question, projected);

  const auto dial_ids = vocab_.encode(serialize_program(sample.dialogue_program));
  const auto vid_ids = vocab_.encode(serialize_program(sample.video_program));
  const auto res_ids = vocab_.encode(sample.response);
  const double eps = weights.label_smoothing;

  LossTerms t;
  t.dialogue = cross_entropy_ls(dialogue_parser_logits(dial_ids, question, ctx), with_eos(dial_ids), eps);
  t.video = cross_entropy_ls(video_parser_logits(vid_ids, question, c.question_context, ctx), with_eos(vid_ids), eps);
  t.response = cross_entropy_ls(response_logits(res_ids, c.question_context, c.fusion.fused, ctx), with_eos(res_ids),
                                eps);
  t.total = add(add(scale(t.dialogue, weights.alpha), scale(t.video, weights.beta)), t.response);
  return t;
}

Prediction Model::run(const std::vector<std::string>& history_tokens, const std::vector<std::string>& question_tokens,
                      const VideoFeatures* video, bool respond) const {
  Prediction out;
  const auto history = encode(vocab_.encode(history_tokens));
  const auto question = encode(vocab_.encode(question_tokens));
  const BeamOptions greedy{1, config_.max_program_len, Vocab::kEos};

  auto last_row = [](const Tensor& logits) {
    const std::size_t r = logits.rows() - 1, v = logits.cols();
    return std::vector<double>(logits.data().begin() + static_cast<std::ptrdiff_t>(r * v),
                               logits.data().begin() + static_cast<std::ptrdiff_t>((r + 1) * v));
  };
  auto as_vector = [](std::span<const std::size_t> p) { return std::vector<std::size_t>(p.begin(), p.end()); };

  auto dial = greedy_decode(
      [&](std::span<const std::size_t> p) { return last_row(dialogue_parser_logits(as_vector(p), question)); },
      greedy);
  try {
    out.dialogue_program = parse_program(dial.tokens, vocab_, ProgramKind::kDialogue);
  } catch (const ProgramError&) {
    out.dialogue_program = fallback_dialogue_program();
    out.dialogue_program_valid = false;
  }
  const auto q_ctx = execute_dialogue_program(out.dialogue_program, history, question, env(), &out.trace);

  auto vid = greedy_decode(
      [&](std::span<const std::size_t> p) { return last_row(video_parser_logits(as_vector(p), question, q_ctx)); },
      greedy);
  try {
    out.video_program = parse_program(vid.tokens, vocab_, ProgramKind::kVideo);
  } catch (const ProgramError&) {
    out.video_program = fallback_video_program(question_tokens);
    out.video_program_valid = false;
  }
  if (!video) return out;

  const auto projected = project(*video);
  const auto v = execute_video_program(out.video_program, projected, question, env(), &out.trace);
  const auto fusion = fuse_modalities(question, v.visual.sequence, v.audio.sequence, fusion_w_);
  out.trace.fusion = fusion.weights;
  if (!respond) return out;

  const BeamOptions beam{config_.beam_width, config_.max_response_len, Vocab::kEos};
  auto hyps = beam_search(
      [&](std::span<const std::size_t> p) { return last_row(response_logits(as_vector(p), q_ctx, fusion.fused)); },
      beam);
  out.response = vocab_.decode(hyps.front().tokens);
  return out;
}

Prediction Model::predict(const std::vector<std::string>& history, const std::vector<std::string>& question,
                          const VideoFeatures& video) const {
  return run(history, question, &video, true);
}

Prediction Model::parse(const std::vector<std::string>& history, const std::vector<std::string>& question,
                        const VideoFeatures* video) const {
  return run(history, question, video, false);
}

}  // namespace vgnmn
