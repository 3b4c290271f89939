#include "vgnmn/encoders.hpp"

#include <cmath>

#include "vgnmn/vocab.hpp"

namespace vgnmn {

Tensor ForwardContext::drop(const Tensor& x) const {
  if (!training || dropout <= 0.0) return x;
  return vgnmn::dropout(x, dropout, true, *rng);
}

Tensor positional_encoding(std::size_t length, std::size_t d) {
  if (d == 0 || d % 2 != 0) throw ConfigError("positional encoding needs an even dimension, got " + std::to_string(d));
  std::vector<double> pe(length * d);
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t i = 0; i < d / 2; ++i) {
      const double angle =
          static_cast<double>(pos) / std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(d));
      pe[pos * d + 2 * i] = std::sin(angle);
      pe[pos * d + 2 * i + 1] = std::cos(angle);
    }
  }
  return Tensor({length, d}, std::move(pe));
}

EncodedText encode_text(std::span<const std::size_t> tokens, const TextEncoderWeights& weights,
                        const ForwardContext& ctx) {
  if (tokens.empty()) throw DataError("encode_text: empty token sequence");
  const std::size_t d = weights.embedding.cols();
  auto embedded = gather_rows(weights.embedding, tokens);
  auto reps = layer_norm(add(embedded, positional_encoding(tokens.size(), d)), weights.norm_gain, weights.norm_bias);
  return {ctx.drop(reps), std::vector<std::size_t>(tokens.begin(), tokens.end())};
}

EncodedText decoder_prefix(std::span<const std::size_t> prefix, const TextEncoderWeights& weights,
                           const ForwardContext& ctx) {
  std::vector<std::size_t> ids;
  ids.reserve(prefix.size() + 1);
  ids.push_back(Vocab::kSos);
  ids.insert(ids.end(), prefix.begin(), prefix.end());
  return encode_text(ids, weights, ctx);
}

void VideoFeatures::validate() const {
  if (obj.rank() != 3 || coords.rank() != 3 || cnn.rank() != 2 || aud.rank() != 2)
    throw DataError("video streams must have ranks 3/3/2/2");
  const std::size_t f = obj.dim(0), o = obj.dim(1);
  if (coords.dim(0) != f || coords.dim(1) != o || coords.dim(2) != 4)
    throw DimensionError("video coords", obj.shape(), coords.shape());
  if (cnn.dim(0) != f) throw DimensionError("video cnn stream", obj.shape(), cnn.shape());
  if (aud.dim(0) != f) throw DimensionError("video audio stream", obj.shape(), aud.shape());
  for (double c : coords.data())
    if (!(c >= 0.0 && c <= 1.0)) throw DataError("video coordinates must lie in [0,1]");
}

ProjectedVideo project_video(const VideoFeatures& video, const VideoProjectionWeights& weights,
                             const ForwardContext& ctx) {
  const std::size_t f = video.frames(), o = video.objects();
  const std::size_t d = weights.obj_w.cols();
  auto slots = reshape(video.obj, {f * o, video.obj.dim(2)});
  auto boxes = reshape(video.coords, {f * o, 4});
  auto coord_feat = linear(boxes, weights.coord_w, weights.coord_b);
  auto obj = relu(linear(concat_cols({slots, coord_feat}), weights.obj_w, weights.obj_b));
  ProjectedVideo out;
  out.obj = ctx.drop(reshape(obj, {f, o, d}));
  out.cnn = ctx.drop(relu(linear(video.cnn, weights.cnn_w, weights.cnn_b)));
  out.aud = ctx.drop(relu(linear(video.aud, weights.aud_w, weights.aud_b)));
  out.frames = f;
  out.objects = o;
  return out;
}

}  // namespace vgnmn
