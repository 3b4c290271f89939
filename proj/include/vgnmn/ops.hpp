#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "vgnmn/tensor.hpp"

// Differentiable operations. Every function here records itself on the
// active Tape when at least one input is tracked. Operands of rank > 2 are
// viewed as matrices by folding their leading axes into rows.
namespace vgnmn {

using Rng = std::mt19937_64;

Tensor matmul(const Tensor& a, const Tensor& b);
/// a · bᵀ
Tensor matmul_nt(const Tensor& a, const Tensor& b);

/// Element-wise sum. `b` may match `a` exactly, be a single row broadcast
/// over a's rows, a single column broadcast over a's columns, or a scalar.
Tensor add(const Tensor& a, const Tensor& b);
/// Element-wise product with the same broadcasting rules as add().
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& x);

/// Inverted dropout: survivors are scaled by 1/(1-rate) in training mode;
/// the identity (same handle) otherwise.
Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng);

/// Softmax along the last axis, computed with max subtraction.
Tensor softmax_lastdim(const Tensor& x);

inline constexpr double kLayerNormEps = 1e-5;
/// Row-wise normalization with population variance, then gain and bias.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = kLayerNormEps);

Tensor sum(const Tensor& x);
/// Mean over rows: [r×c] -> [1×c].
Tensor mean_rows(const Tensor& x);
/// Max over rows: [r×c] -> [1×c]. Ties route the gradient to the first row.
Tensor max_rows(const Tensor& x);

Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
/// out[i] = x[index[i]]; rows may repeat (tiling, embedding lookup).
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index);
Tensor reshape(const Tensor& x, Shape shape);
/// Appends zero rows until x has at least `min_rows` rows.
Tensor pad_rows(const Tensor& x, std::size_t min_rows);

/// Sliding windows of k consecutive rows, flattened:
/// [L×c] -> [(L-k+1) × k·c]. Requires L ≥ k.
Tensor unfold_rows(const Tensor& x, std::size_t k);

/// out[g] = Σ_m weights[g,m] · values[g·M + m] : [G×M], [(G·M)×d] -> [G×d].
Tensor group_weighted_sum(const Tensor& weights, const Tensor& values);

/// Σ over rows of the label-smoothed cross entropy between softmax(logits[r])
/// and t = (1-eps)·onehot(gold[r]) + eps/V.
Tensor cross_entropy_ls(const Tensor& logits, std::span<const std::size_t> gold, double eps);

/// x·w (+ b when b is defined).
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b = {});

/// Filter banks of a sentence-classification CNN (one input channel spanning
/// the full embedding width).
struct TextCnnWeights {
  std::vector<std::size_t> kernel_sizes;
  std::vector<Tensor> filters;  // [k·d_in × channels] per kernel size
  std::vector<Tensor> biases;   // [channels] per kernel size
  Tensor out_w;                 // [channels·#kernels × d_out]; undefined skips the projection
  Tensor out_b;
};

/// Per kernel size: valid stride-1 convolution over rows, ReLU, max over
/// positions. The pooled vectors are concatenated and projected. Inputs
/// shorter than the widest kernel are right-padded with zero rows.
Tensor text_cnn(const Tensor& x, const TextCnnWeights& weights);

}  // namespace vgnmn
