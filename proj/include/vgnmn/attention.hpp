#pragma once

#include <span>
#include <vector>

#include "vgnmn/encoders.hpp"
#include "vgnmn/ops.hpp"

namespace vgnmn {

struct AttentionBlockWeights {
  std::size_t heads = 1;
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;  // [d×d], [d]
  Tensor norm1_gain, norm1_bias;
  Tensor ff_w1, ff_b1, ff_w2, ff_b2;  // [d×d_ff], [d_ff], [d_ff×d], [d]
  Tensor norm2_gain, norm2_bias;
};

/// softmax(q·kᵀ/√d_k)·v per head on projected inputs, heads concatenated
/// and output-projected. With `causal`, query i sees keys 0..i only.
/// Per-head attention matrices are appended to `head_weights` if given.
Tensor multi_head_attention(const Tensor& query, const Tensor& key, const Tensor& value,
                            const AttentionBlockWeights& w, bool causal = false,
                            std::vector<Tensor>* head_weights = nullptr);

/// Post-norm residual block:
///   h = LN(x + drop(MHA(x, memory, memory)))
///   y = LN(h + drop(FFN(h))),  FFN = W2·drop(ReLU(W1·h + b1)) + b2
Tensor attention_block(const Tensor& x, const Tensor& memory, const AttentionBlockWeights& w, bool causal,
                       const ForwardContext& ctx = {}, std::vector<Tensor>* head_weights = nullptr);

enum class DecoderRole { kDialogueParser, kVideoParser, kResponse };

/// Attention blocks per layer for each role: the causal self-attention block
/// followed by one cross-attention block per memory.
///   dialogue parser: self, question
///   video parser:    self, question, Q_ctx
///   response:        self, Q_ctx, V_ctx
std::size_t memories_for(DecoderRole role);

struct DecoderStack {
  DecoderRole role = DecoderRole::kDialogueParser;
  std::vector<std::vector<AttentionBlockWeights>> layers;
};

/// Hidden states [L×d] for an encoded target prefix.
Tensor run_decoder(const DecoderStack& stack, const Tensor& prefix, std::span<const Tensor> memories,
                   const ForwardContext& ctx = {});

/// Output projection tied to the embedding matrix: hidden·Eᵀ.
Tensor vocab_logits(const Tensor& hidden, const Tensor& embedding);

struct Fusion {
  Tensor fused;    // [(N+A)×d]
  Tensor weights;  // [(N+A)×2], rows (w_vis, w_aud)
};

/// S = softmax([Q_stack ; V_vis ; V_aud]·W_fusion); fused = S₀·V_vis + S₁·V_aud.
Fusion fuse_modalities(const Tensor& question, const Tensor& visual, const Tensor& audio, const Tensor& fusion_w);

}  // namespace vgnmn
