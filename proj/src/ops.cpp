#include "vgnmn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vgnmn/kernels.hpp"

namespace vgnmn {

namespace {

Tape* recording_tape(std::initializer_list<const Tensor*> inputs) {
  return should_record(inputs) ? Tape::active() : nullptr;
}

Shape matrix_shape(std::size_t r, std::size_t c) { return {r, c}; }

enum class Broadcast { kSame, kRow, kCol, kScalar };

Broadcast broadcast_mode(std::string_view op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape() || (a.rows() == b.rows() && a.cols() == b.cols() && a.numel() == b.numel()))
    return Broadcast::kSame;
  if (b.numel() == 1) return Broadcast::kScalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::kRow;
  if (b.cols() == 1 && b.rows() == a.rows()) return Broadcast::kCol;
  throw DimensionError(op, a.shape(), b.shape());
}

inline std::size_t bindex(Broadcast mode, std::size_t r, std::size_t c, std::size_t cols) {
  switch (mode) {
    case Broadcast::kSame: return r * cols + c;
    case Broadcast::kRow: return c;
    case Broadcast::kCol: return r;
    case Broadcast::kScalar: return 0;
  }
  return 0;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows() || b.rank() > 2) throw DimensionError("matmul", a.shape(), b.shape());
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  kernels::parallel::gemm_nn(m, n, k, a.data(), b.data(), out);
  auto* tape = recording_tape({&a, &b});
  Tensor y(matrix_shape(m, n), std::move(out), tape != nullptr);
  if (tape) {
    tape->record("matmul", {&a, &b}, y, [a, b, y, m, n, k](Gradients& g) {
      const auto& gy = *g.find(y);
      if (a.requires_grad()) kernels::parallel::gemm_nt(m, k, n, gy, b.data(), g.of(a));
      if (b.requires_grad()) kernels::parallel::gemm_tn(k, n, m, a.data(), gy, g.of(b));
    });
  }
  return y;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) throw DimensionError("matmul_nt", a.shape(), b.shape());
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  std::vector<double> out(m * n, 0.0);
  kernels::parallel::gemm_nt(m, n, k, a.data(), b.data(), out);
  auto* tape = recording_tape({&a, &b});
  Tensor y(matrix_shape(m, n), std::move(out), tape != nullptr);
  if (tape) {
    tape->record("matmul_nt", {&a, &b}, y, [a, b, y, m, n, k](Gradients& g) {
      const auto& gy = *g.find(y);
      // y = a bᵀ: da = gy b, db = gyᵀ a
      if (a.requires_grad()) kernels::parallel::gemm_nn(m, k, n, gy, b.data(), g.of(a));
      if (b.requires_grad()) kernels::parallel::gemm_tn(n, k, m, gy, a.data(), g.of(b));
    });
  }
  return y;
}

Tensor add(const Tensor& a, const Tensor& b) {
  const auto mode = broadcast_mode("add", a, b);
  const std::size_t rows = a.rows(), cols = a.cols();
  std::vector<double> out(a.numel());
  const auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = ad[r * cols + c] + bd[bindex(mode, r, c, cols)];
  auto* tape = recording_tape({&a, &b});
  Tensor y(a.shape(), std::move(out), tape != nullptr);
  if (tape) {
    tape->record("add", {&a, &b}, y, [a, b, y, mode, rows, cols](Gradients& g) {
      const auto& gy = *g.find(y);
      if (a.requires_grad()) {
        auto ga = g.of(a);
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
      }
      if (b.requires_grad()) {
        auto gb = g.of(b);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c) gb[bindex(mode, r, c, cols)] += gy[r * cols + c];
      }
    });
  }
  return y;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const auto mode = broadcast_mode("mul", a, b);
  const std::size_t rows = a.rows(), cols = a.cols();
  std::vector<double> out(a.numel());
  const auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = ad[r * cols + c] * bd[bindex(mode, r, c, cols)];
  auto* tape = recording_tape({&a, &b});
  Tensor y(a.shape(), std::move(out), tape != nullptr);
  if (tape) {
    tape->record("mul", {&a, &b}, y, [a, b, y, mode, rows, cols](Gradients& g) {
      const auto& gy = *g.find(y);
      const auto ad = a.data();
      const auto bd = b.data();
      if (a.requires_grad()) {
        auto ga = g.of(a);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c)
            ga[r * cols + c] += gy[r * cols + c] * bd[bindex(mode, r, c, cols)];
      }
      if (b.requires_grad()) {
        auto gb = g.of(b);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c)
            gb[bindex(mode, r, c, cols)] += gy[r * cols + c] * ad[r * cols + c];
      }
    });
  }
  return y;
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) v *= s;
  auto* tape = recording_tape({&a});
  Tensor y(a.shape(), std::move(out), tape != nullptr);
  if (tape) {
    tape->record("scale", {&a}, y, [a, y, s](Gradients& g) {
      const auto& gy = *g.find(y);
      auto ga = g.of(a);
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += s * gy[i];
    });
  }
  return y;
}

Tensor relu(const Tensor& x) {
  std::vector<double> out(x.data().begin(), x.data().end());
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  auto* tape = recording_tape({&x});
  Tensor y(x.shape(), std::move(out), tape != nullptr);
  if (tape) {
    tape->record("relu", {&x}, y, [x, y](Gradients& g) {
      const auto& gy = *g.find(y);
      const auto xd = x.data();
      auto gx = g.of(x);
      for (std::size_t i = 0; i < gy.size(); ++i)
        if (xd[i] > 0.0) gx[i] += gy[i];
    });
  }
  return y;
}

Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must be in [0,1)");
  if (!training || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> mask(x.numel());
  for (auto& m : mask) m = uniform(rng) >= rate ? keep_scale : 0.0;
  std::vector<double> out(x.numel());
  const auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] * mask[i];
  auto* tape = recording_tape({&x});
  Tensor y(x.shape(), std::move(out), tape != nullptr);
  if (tape) {
    tape->record("dropout", {&x}, y, [x, y, mask = std::move(mask)](Gradients& g) {
      const auto& gy = *g.find(y);
      auto gx = g.of(x);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * mask[i];
    });
  }
  return y;
}

Tensor softmax_lastdim(const Tensor& x) {
  const std::size_t rows = x.rows(), cols = x.cols();
  const auto xd = x.data();
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xd.data() + r * cols;
    double* o = out.data() + r * cols;
    const double mx = *std::max_element(in, in + cols);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      o[c] = std::exp(in[c] - mx);
      z += o[c];
    }
    for (std::size_t c = 0; c < cols; ++c) o[c] /= z;
  }
  auto* tape = recording_tape({&x});
  Tensor y(x.shape(), std::move(out), tape != nullptr);
  if (tape) {
    tape->record("softmax", {&x}, y, [x, y, rows, cols](Gradients& g) {
      const auto& gy = *g.find(y);
      const auto yd = y.data();
      auto gx = g.of(x);
      for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (std::size_t c = 0; c < cols; ++c) dot += gy[r * cols + c] * yd[r * cols + c];
        for (std::size_t c = 0; c < cols; ++c)
          gx[r * cols + c] += yd[r * cols + c] * (gy[r * cols + c] - dot);
      }
    });
  }
  return y;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const std::size_t rows = x.rows(), d = x.cols();
  if (gain.numel() != d) throw DimensionError("layer_norm gain", x.shape(), gain.shape());
  if (bias.numel() != d) throw DimensionError("layer_norm bias", x.shape(), bias.shape());
  if (eps <= 0.0) throw ConfigError("layer_norm eps must be positive");
  const auto xd = x.data();
  const auto gd = gain.data();
  const auto bd = bias.data();
  std::vector<double> xhat(x.numel());
  std::vector<double> inv_std(rows);
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = xd.data() + r * d;
    double mean = 0.0;
    for (std::size_t c = 0; c < d; ++c) mean += in[c];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) var += (in[c] - mean) * (in[c] - mean);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < d; ++c) {
      const double h = (in[c] - mean) * inv_std[r];
      xhat[r * d + c] = h;
      out[r * d + c] = gd[c] * h + bd[c];
    }
  }
  auto* tape = recording_tape({&x, &gain, &bias});
  Tensor y(x.shape(), std::move(out), tape != nullptr);
  if (tape) {
    tape->record("layer_norm", {&x, &gain, &bias}, y,
                 [x, gain, bias, y, rows, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](Gradients& g) {
                   const auto& gy = *g.find(y);
                   const auto gd = gain.data();
                   if (gain.requires_grad()) {
                     auto gg = g.of(gain);
                     for (std::size_t r = 0; r < rows; ++r)
                       for (std::size_t c = 0; c < d; ++c) gg[c] += gy[r * d + c] * xhat[r * d + c];
                   }
                   if (bias.requires_grad()) {
                     auto gb = g.of(bias);
                     for (std::size_t r = 0; r < rows; ++r)
                       for (std::size_t c = 0; c < d; ++c) gb[c] += gy[r * d + c];
                   }
                   if (x.requires_grad()) {
                     auto gx = g.of(x);
                     const double inv_d = 1.0 / static_cast<double>(d);
                     for (std::size_t r = 0; r < rows; ++r) {
                       double mean_dh = 0.0, mean_dh_h = 0.0;
                       for (std::size_t c = 0; c < d; ++c) {
                         const double dh = gy[r * d + c] * gd[c];
                         mean_dh += dh;
                         mean_dh_h += dh * xhat[r * d + c];
                       }
                       mean_dh *= inv_d;
                       mean_dh_h *= inv_d;
                       for (std::size_t c = 0; c < d; ++c) {
                         const double dh = gy[r * d + c] * gd[c];
                         gx[r * d + c] += inv_std[r] * (dh - mean_dh - xhat[r * d + c] * mean_dh_h);
                       }
                     }
                   }
                 });
  }
  return y;
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  auto* tape = recording_tape({&x});
  Tensor y({1}, {s}, tape != nullptr);
  if (tape) {
    tape->record("sum", {&x}, y, [x, y](Gradients& g) {
      const double gy = (*g.find(y))[0];
      auto gx = g.of(x);
      for (auto& v : gx) v += gy;
    });
  }
  return y;
}

Tensor mean_rows(const Tensor& x) {
  const std::size_t rows = x.rows(), cols = x.cols();
  const auto xd = x.data();
  std::vector<double> out(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c] += xd[r * cols + c];
  const double inv = 1.0 / static_cast<double>(rows);
  for (auto& v : out) v *= inv;
  auto* tape = recording_tape({&x});
  Tensor y({1, cols}, std::move(out), tape != nullptr);
  if (tape) {
    tape->record("mean_rows", {&x}, y, [x, y, rows, cols, inv](Gradients& g) {
      const auto& gy = *g.find(y);
      auto gx = g.of(x);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) gx[r * cols + c] += gy[c] * inv;
    });
  }
  return y;
}

Tensor max_rows(const Tensor& x) {
  const std::size_t rows = x.rows(), cols = x.cols();
  const auto xd = x.data();
  std::vector<double> out(xd.begin(), xd.begin() + static_cast<long>(cols));
  std::vector<std::size_t> arg(cols, 0);
  for (std::size_t r = 1; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      if (xd[r * cols + c] > out[c]) {
        out[c] = xd[r * cols + c];
        arg[c] = r;
      }
  auto* tape = recording_tape({&x});
  Tensor y({1, cols}, std::move(out), tape != nullptr);
  if (tape) {
    tape->record("max_rows", {&x}, y, [x, y, cols, arg = std::move(arg)](Gradients& g) {
      const auto& gy = *g.find(y);
      auto gx = g.of(x);
      for (std::size_t c = 0; c < cols; ++c) gx[arg[c] * cols + c] += gy[c];
    });
  }
  return y;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols of zero tensors");
  const std::size_t rows = parts.front().rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw DimensionError("concat_cols", parts.front().shape(), p.shape());
    total += p.cols();
  }
  std::vector<double> out(rows * total);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const auto pd = p.data();
    const std::size_t pc = p.cols();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(pd.data() + r * pc, pc, out.data() + r * total + offset);
    offset += pc;
  }
  bool track = Tape::active() && std::any_of(parts.begin(), parts.end(), [](const Tensor& t) { return t.requires_grad(); });
  Tensor y({rows, total}, std::move(out), track);
  if (track) {
    Tape::active()->record("concat_cols", parts, y, [parts, y, rows, total](Gradients& g) {
      const auto& gy = *g.find(y);
      std::size_t offset = 0;
      for (const auto& p : parts) {
        const std::size_t pc = p.cols();
        if (p.requires_grad()) {
          auto gp = g.of(p);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < pc; ++c) gp[r * pc + c] += gy[r * total + offset + c];
        }
        offset += pc;
      }
    });
  }
  return y;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows of zero tensors");
  const std::size_t cols = parts.front().cols();
  std::vector<double> out;
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw DimensionError("concat_rows", parts.front().shape(), p.shape());
    out.insert(out.end(), p.data().begin(), p.data().end());
    rows += p.rows();
  }
  bool track = Tape::active() && std::any_of(parts.begin(), parts.end(), [](const Tensor& t) { return t.requires_grad(); });
  Tensor y({rows, cols}, std::move(out), track);
  if (track) {
    Tape::active()->record("concat_rows", parts, y, [parts, y](Gradients& g) {
      const auto& gy = *g.find(y);
      std::size_t offset = 0;
      for (const auto& p : parts) {
        if (p.requires_grad()) {
          auto gp = g.of(p);
          for (std::size_t i = 0; i < p.numel(); ++i) gp[i] += gy[offset + i];
        }
        offset += p.numel();
      }
    });
  }
  return y;
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  const std::size_t rows = x.rows(), cols = x.cols();
  if (begin >= end || end > cols) throw IndexError("slice_cols [" + std::to_string(begin) + "," +
                                                   std::to_string(end) + ") of " + shape_str(x.shape()));
  const std::size_t w = end - begin;
  std::vector<double> out(rows * w);
  const auto xd = x.data();
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(xd.data() + r * cols + begin, w, out.data() + r * w);
  auto* tape = recording_tape({&x});
  Tensor y({rows, w}, std::move(out), tape != nullptr);
  if (tape) {
    tape->record("slice_cols", {&x}, y, [x, y, rows, cols, begin, w](Gradients& g) {
      const auto& gy = *g.find(y);
      auto gx = g.of(x);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < w; ++c) gx[r * cols + begin + c] += gy[r * w + c];
    });
  }
  return y;
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  const std::size_t rows = x.rows(), cols = x.cols();
  if (begin >= end || end > rows) throw IndexError("slice_rows [" + std::to_string(begin) + "," +
                                                   std::to_string(end) + ") of " + shape_str(x.shape()));
  const auto xd = x.data();
  std::vector<double> out(xd.begin() + static_cast<long>(begin * cols), xd.begin() + static_cast<long>(end * cols));
  auto* tape = recording_tape({&x});
  Tensor y({end - begin, cols}, std::move(out), tape != nullptr);
  if (tape) {
    tape->record("slice_rows", {&x}, y, [x, y, begin, cols](Gradients& g) {
      const auto& gy = *g.find(y);
      auto gx = g.of(x);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[begin * cols + i] += gy[i];
    });
  }
  return y;
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> index) {
  const std::size_t rows = x.rows(), cols = x.cols();
  if (index.empty()) throw IndexError("gather_rows with empty index");
  std::vector<double> out(index.size() * cols);
  const auto xd = x.data();
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= rows)
      throw IndexError("gather_rows index " + std::to_string(index[i]) + " out of range for " + shape_str(x.shape()));
    std::copy_n(xd.data() + index[i] * cols, cols, out.data() + i * cols);
  }
  auto* tape = recording_tape({&x});
  Tensor y({index.size(), cols}, std::move(out), tape != nullptr);
  if (tape) {
    std::vector<std::size_t> idx(index.begin(), index.end());
    tape->record("gather_rows", {&x}, y, [x, y, cols, idx = std::move(idx)](Gradients& g) {
      const auto& gy = *g.find(y);
      auto gx = g.of(x);
      for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t c = 0; c < cols; ++c) gx[idx[i] * cols + c] += gy[i * cols + c];
    });
  }
  return y;
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) throw DimensionError("reshape", x.shape(), shape);
  auto* tape = recording_tape({&x});
  Tensor y(std::move(shape), std::vector<double>(x.data().begin(), x.data().end()), tape != nullptr);
  if (tape) {
    tape->record("reshape", {&x}, y, [x, y](Gradients& g) {
      const auto& gy = *g.find(y);
      auto gx = g.of(x);
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
    });
  }
  return y;
}

Tensor pad_rows(const Tensor& x, std::size_t min_rows) {
  if (x.rows() >= min_rows) return x;
  return concat_rows({x, Tensor::zeros({min_rows - x.rows(), x.cols()})});
}

Tensor unfold_rows(const Tensor& x, std::size_t k) {
  const std::size_t len = x.rows(), cols = x.cols();
  if (k == 0 || len < k) throw DimensionError("unfold_rows: window " + std::to_string(k) + " longer than " +
                                              shape_str(x.shape()));
  const std::size_t windows = len - k + 1, width = k * cols;
  std::vector<double> out(windows * width);
  const auto xd = x.data();
  for (std::size_t w = 0; w < windows; ++w) std::copy_n(xd.data() + w * cols, width, out.data() + w * width);
  auto* tape = recording_tape({&x});
  Tensor y({windows, width}, std::move(out), tape != nullptr);
  if (tape) {
    tape->record("unfold_rows", {&x}, y, [x, y, windows, width, cols](Gradients& g) {
      const auto& gy = *g.find(y);
      auto gx = g.of(x);
      for (std::size_t w = 0; w < windows; ++w)
        for (std::size_t i = 0; i < width; ++i) gx[w * cols + i] += gy[w * width + i];
    });
  }
  return y;
}

Tensor group_weighted_sum(const Tensor& weights, const Tensor& values) {
  const std::size_t groups = weights.rows(), members = weights.cols(), d = values.cols();
  if (values.rows() != groups * members) throw DimensionError("group_weighted_sum", weights.shape(), values.shape());
  const auto wd = weights.data();
  const auto vd = values.data();
  std::vector<double> out(groups * d, 0.0);
  for (std::size_t gi = 0; gi < groups; ++gi)
    for (std::size_t m = 0; m < members; ++m) {
      const double w = wd[gi * members + m];
      const double* v = vd.data() + (gi * members + m) * d;
      for (std::size_t c = 0; c < d; ++c) out[gi * d + c] += w * v[c];
    }
  auto* tape = recording_tape({&weights, &values});
  Tensor y({groups, d}, std::move(out), tape != nullptr);
  if (tape) {
    tape->record("group_weighted_sum", {&weights, &values}, y, [weights, values, y, groups, members, d](Gradients& g) {
      const auto& gy = *g.find(y);
      const auto wd = weights.data();
      const auto vd = values.data();
      if (weights.requires_grad()) {
        auto gw = g.of(weights);
        for (std::size_t gi = 0; gi < groups; ++gi)
          for (std::size_t m = 0; m < members; ++m) {
            double s = 0.0;
            const double* v = vd.data() + (gi * members + m) * d;
            for (std::size_t c = 0; c < d; ++c) s += gy[gi * d + c] * v[c];
            gw[gi * members + m] += s;
          }
      }
      if (values.requires_grad()) {
        auto gv = g.of(values);
        for (std::size_t gi = 0; gi < groups; ++gi)
          for (std::size_t m = 0; m < members; ++m) {
            const double w = wd[gi * members + m];
            double* dv = gv.data() + (gi * members + m) * d;
            for (std::size_t c = 0; c < d; ++c) dv[c] += w * gy[gi * d + c];
          }
      }
    });
  }
  return y;
}

Tensor cross_entropy_ls(const Tensor& logits, std::span<const std::size_t> gold, double eps) {
  const std::size_t rows = logits.rows(), vocab = logits.cols();
  if (gold.size() != rows)
    throw DimensionError("cross_entropy_ls: " + std::to_string(gold.size()) + " targets for logits " +
                         shape_str(logits.shape()));
  if (eps < 0.0 || eps >= 1.0) throw ConfigError("label smoothing must be in [0,1)");
  for (auto t : gold)
    if (t >= vocab)
      throw IndexError("cross_entropy_ls: gold index " + std::to_string(t) + " >= vocabulary " + std::to_string(vocab));
  const auto xd = logits.data();
  const double uniform = eps / static_cast<double>(vocab);
  std::vector<double> probs(logits.numel());
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = xd.data() + r * vocab;
    const double mx = *std::max_element(x, x + vocab);
    double z = 0.0;
    for (std::size_t c = 0; c < vocab; ++c) z += std::exp(x[c] - mx);
    const double lse = mx + std::log(z);
    double expected = 0.0;  // Σ t_i x_i
    for (std::size_t c = 0; c < vocab; ++c) {
      probs[r * vocab + c] = std::exp(x[c] - lse);
      expected += uniform * x[c];
    }
    expected += (1.0 - eps) * x[gold[r]];
    loss += lse - expected;
  }
  auto* tape = recording_tape({&logits});
  Tensor y({1}, {loss}, tape != nullptr);
  if (tape) {
    std::vector<std::size_t> targets(gold.begin(), gold.end());
    tape->record("cross_entropy_ls", {&logits}, y,
                 [logits, y, vocab, eps, uniform, probs = std::move(probs), targets = std::move(targets)](Gradients& g) {
                   const double gy = (*g.find(y))[0];
                   auto gx = g.of(logits);
                   for (std::size_t r = 0; r < targets.size(); ++r) {
                     for (std::size_t c = 0; c < vocab; ++c) gx[r * vocab + c] += gy * (probs[r * vocab + c] - uniform);
                     gx[r * vocab + targets[r]] -= gy * (1.0 - eps);
                   }
                 });
  }
  return y;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  auto y = matmul(x, w);
  return b.defined() ? add(y, b) : y;
}

Tensor text_cnn(const Tensor& x, const TextCnnWeights& weights) {
  const auto& ks = weights.kernel_sizes;
  if (ks.empty() || weights.filters.size() != ks.size() || weights.biases.size() != ks.size())
    throw ConfigError("text_cnn: one filter bank and bias per kernel size required");
  const std::size_t widest = *std::max_element(ks.begin(), ks.end());
  const Tensor padded = pad_rows(x, widest);
  std::vector<Tensor> pooled;
  pooled.reserve(ks.size());
  for (std::size_t i = 0; i < ks.size(); ++i) {
    auto conv = relu(linear(unfold_rows(padded, ks[i]), weights.filters[i], weights.biases[i]));
    pooled.push_back(max_rows(conv));
  }
  auto features = pooled.size() == 1 ? pooled.front() : concat_cols(pooled);
  if (!weights.out_w.defined()) return features;
  return linear(features, weights.out_w, weights.out_b);
}

}  // namespace vgnmn
