#pragma once

#include <span>
#include <vector>

#include "vgnmn/ops.hpp"
#include "vgnmn/tensor.hpp"

namespace vgnmn {

/// Training/eval switch and dropout source threaded through a forward pass.
struct ForwardContext {
  bool training = false;
  double dropout = 0.0;
  Rng* rng = nullptr;

  Tensor drop(const Tensor& x) const;
};

/// Sinusoidal table: PE(pos,2i) = sin(pos/10000^(2i/d)), PE(pos,2i+1) = cos(·).
Tensor positional_encoding(std::size_t length, std::size_t d);

struct TextEncoderWeights {
  Tensor embedding;  // [|V| × d], shared with the output projection
  Tensor norm_gain;  // [d]
  Tensor norm_bias;  // [d]
};

struct EncodedText {
  Tensor reps;  // [L × d]
  std::vector<std::size_t> tokens;
};

/// Norm(φ(x) + PE(x)), row-wise.
EncodedText encode_text(std::span<const std::size_t> tokens, const TextEncoderWeights& weights,
                        const ForwardContext& ctx = {});

/// Encodes <sos> followed by `prefix`; the autoregressive decoder input.
EncodedText decoder_prefix(std::span<const std::size_t> prefix, const TextEncoderWeights& weights,
                           const ForwardContext& ctx = {});

/// Raw synthetic feature streams for one video.
struct VideoFeatures {
  Tensor obj;     // [F × O × d_vis]
  Tensor coords;  // [F × O × 4], normalized box corners
  Tensor cnn;     // [F × d_vis]
  Tensor aud;     // [F × d_aud]

  std::size_t frames() const { return obj.dim(0); }
  std::size_t objects() const { return obj.dim(1); }
  /// Throws DataError when extents disagree or coordinates leave [0,1].
  void validate() const;
};

struct VideoProjectionWeights {
  Tensor coord_w, coord_b;  // [4 × d_vis], [d_vis]
  Tensor obj_w, obj_b;      // [2·d_vis × d], [d]
  Tensor cnn_w, cnn_b;      // [d_vis × d], [d]
  Tensor aud_w, aud_b;      // [d_aud × d], [d]
};

struct ProjectedVideo {
  Tensor obj;  // [F × O × d]
  Tensor cnn;  // [F × d]
  Tensor aud;  // [F × d]
  std::size_t frames = 0;
  std::size_t objects = 0;
};

/// Object slots: [obj ; coords·W_c + b_c] → linear + ReLU to d.
/// Frame-level streams: linear + ReLU to d.
ProjectedVideo project_video(const VideoFeatures& video, const VideoProjectionWeights& weights,
                             const ForwardContext& ctx = {});

}  // namespace vgnmn
