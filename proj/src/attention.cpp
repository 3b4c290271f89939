#include "vgnmn/attention.hpp"

#include <cmath>
#include <limits>

namespace vgnmn {

namespace {

constexpr double kMasked = -1e30;

Tensor causal_mask(std::size_t lq, std::size_t lk) {
  std::vector<double> m(lq * lk, 0.0);
  for (std::size_t i = 0; i < lq; ++i)
    for (std::size_t j = i + 1; j < lk; ++j) m[i * lk + j] = kMasked;
  return Tensor({lq, lk}, std::move(m));
}

}  // namespace

Tensor multi_head_attention(const Tensor& query, const Tensor& key, const Tensor& value,
                            const AttentionBlockWeights& w, bool causal, std::vector<Tensor>* head_weights) {
  const std::size_t d = w.wq.cols();
  if (w.heads == 0 || d % w.heads != 0)
    throw ConfigError("attention width " + std::to_string(d) + " not divisible by " + std::to_string(w.heads) +
                      " heads");
  if (key.rows() != value.rows()) throw DimensionError("multi_head_attention key/value", key.shape(), value.shape());
  const std::size_t dk = d / w.heads;
  auto q = linear(query, w.wq, w.bq);
  auto k = linear(key, w.wk, w.bk);
  auto v = linear(value, w.wv, w.bv);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));
  Tensor mask;
  if (causal) mask = causal_mask(query.rows(), key.rows());

  std::vector<Tensor> heads;
  heads.reserve(w.heads);
  for (std::size_t h = 0; h < w.heads; ++h) {
    auto qh = w.heads == 1 ? q : slice_cols(q, h * dk, (h + 1) * dk);
    auto kh = w.heads == 1 ? k : slice_cols(k, h * dk, (h + 1) * dk);
    auto vh = w.heads == 1 ? v : slice_cols(v, h * dk, (h + 1) * dk);
    auto scores = scale(matmul_nt(qh, kh), inv_sqrt);
    if (causal) scores = add(scores, mask);
    auto attn = softmax_lastdim(scores);
    if (head_weights) head_weights->push_back(attn);
    heads.push_back(matmul(attn, vh));
  }
  auto merged = heads.size() == 1 ? heads.front() : concat_cols(heads);
  return linear(merged, w.wo, w.bo);
}

Tensor attention_block(const Tensor& x, const Tensor& memory, const AttentionBlockWeights& w, bool causal,
                       const ForwardContext& ctx, std::vector<Tensor>* head_weights) {
  auto attended = multi_head_attention(x, memory, memory, w, causal, head_weights);
  auto h = layer_norm(add(x, ctx.drop(attended)), w.norm1_gain, w.norm1_bias);
  auto ff = linear(ctx.drop(relu(linear(h, w.ff_w1, w.ff_b1))), w.ff_w2, w.ff_b2);
  return layer_norm(add(h, ctx.drop(ff)), w.norm2_gain, w.norm2_bias);
}

std::size_t memories_for(DecoderRole role) { return role == DecoderRole::kDialogueParser ? 1 : 2; }

Tensor run_decoder(const DecoderStack& stack, const Tensor& prefix, std::span<const Tensor> memories,
                   const ForwardContext& ctx) {
  const std::size_t expected = memories_for(stack.role);
  if (memories.size() != expected)
    throw ConfigError("decoder expects " + std::to_string(expected) + " memories, got " +
                      std::to_string(memories.size()));
  Tensor x = prefix;
  for (const auto& layer : stack.layers) {
    if (layer.size() != expected + 1) throw ConfigError("decoder layer has the wrong number of attention blocks");
    x = attention_block(x, x, layer[0], /*causal=*/true, ctx);
    for (std::size_t m = 0; m < expected; ++m) x = attention_block(x, memories[m], layer[m + 1], false, ctx);
  }
  return x;
}

Tensor vocab_logits(const Tensor& hidden, const Tensor& embedding) { return matmul_nt(hidden, embedding); }

Fusion fuse_modalities(const Tensor& question, const Tensor& visual, const Tensor& audio, const Tensor& fusion_w) {
  if (visual.shape() != audio.shape()) throw DimensionError("fuse_modalities", visual.shape(), audio.shape());
  const std::size_t rows = visual.rows();
  std::vector<std::size_t> tile(rows, 0);
  auto q_stack = gather_rows(mean_rows(question), tile);
  auto weights = softmax_lastdim(matmul(concat_cols({q_stack, visual, audio}), fusion_w));
  auto fused = add(mul(visual, slice_cols(weights, 0, 1)), mul(audio, slice_cols(weights, 1, 2)));
  return {fused, weights};
}

}  // namespace vgnmn
