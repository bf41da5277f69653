#include "swinlite/attention.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace swinlite {

RelativePositionIndex build_relative_index(std::size_t window) {
  if (window == 0) throw std::invalid_argument("window must be at least 1");
  RelativePositionIndex r;
  r.window = window;
  const std::size_t t = window * window;
  const std::size_t span = 2 * window - 1;
  r.index.resize(t * t);
  for (std::size_t i = 0; i < t; ++i) {
    const std::size_t yi = i / window;
    const std::size_t xi = i % window;
    for (std::size_t j = 0; j < t; ++j) {
      const std::size_t yj = j / window;
      const std::size_t xj = j % window;
      // (dy + M - 1) and (dx + M - 1) lie in [0, 2M-2].
      const std::size_t row = yi + window - 1 - yj;
      const std::size_t col = xi + window - 1 - xj;
      r.index[i * t + j] = static_cast<std::uint32_t>(row * span + col);
    }
  }
  return r;
}

Var bias_matrix(const RelativePositionBias& bias) {
  const Shape& ts = bias.table.shape();
  const std::size_t rows = bias.index.table_rows();
  if (ts.size() != 2 || ts[0] != rows) {
    throw DimensionError("bias table " + shape_str(ts) + " needs " +
                         std::to_string(rows) + " rows");
  }
  const std::size_t heads = ts[1];
  const std::size_t t = bias.index.tokens();
  std::vector<std::uint32_t> flat(heads * t * t);
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t p = 0; p < t * t; ++p) {
      flat[h * t * t + p] =
          static_cast<std::uint32_t>(bias.index.index[p] * heads + h);
    }
  }
  return gather_rows(bias.table, flat, rows * heads, 1, {heads, t, t});
}

Var attention_with_bias(Var q, Var k, Var v, std::optional<Var> bias,
                        std::optional<Var> mask) {
  const Shape& qs = q.shape();
  if (qs.size() != 2 || k.shape() != qs || v.shape().size() != 2 ||
      v.shape()[0] != qs[0]) {
    throw DimensionError("attention operands " + shape_str(qs) + ", " +
                         shape_str(k.shape()) + ", " + shape_str(v.shape()) +
                         " are inconsistent");
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(qs[1]));
  Var scores = scale(matmul(q, transpose(k)), inv_sqrt_d);
  if (bias) scores = add(scores, *bias);
  if (mask) scores = add(scores, *mask);
  return matmul(softmax(scores, 1), v);
}

Var windowed_attention(Var windows, const MultiHeadWeights& weights,
                       const RelativePositionBias* bias, const Tensor* mask) {
  const Shape& s = windows.shape();
  if (s.size() != 3) {
    throw DimensionError("windowed attention expects [N, T, C], got " +
                         shape_str(s));
  }
  const std::size_t n = s[0];
  const std::size_t t = s[1];
  const std::size_t c = s[2];
  const std::size_t heads = weights.heads;
  if (weights.channels() != c) {
    throw DimensionError("attention weights are for " +
                         std::to_string(weights.channels()) +
                         " channels, input has " + std::to_string(c));
  }
  const std::size_t inner = weights.inner();
  if (heads == 0 || inner < heads || inner % heads != 0) {
    throw DimensionError("projection width " + std::to_string(inner) +
                         " does not split into " + std::to_string(heads) +
                         " heads");
  }
  const Shape qkv{c, inner};
  if (weights.wk.shape() != qkv || weights.wv.shape() != qkv ||
      weights.wo.shape() != Shape{inner, c}) {
    throw DimensionError("attention projections disagree on shape");
  }
  const std::size_t d = inner / heads;
  Tape& tape = *windows.tape;

  auto split_heads = [&](Var proj, std::vector<std::size_t> order) {
    return permute(reshape(proj, {n, t, heads, d}), std::move(order));
  };
  Var q = split_heads(linear(windows, weights.wq), {0, 2, 1, 3});
  Var kt = split_heads(linear(windows, weights.wk), {0, 2, 3, 1});
  Var v = split_heads(linear(windows, weights.wv), {0, 2, 1, 3});

  Var scores = scale(matmul(q, kt), 1.0 / std::sqrt(static_cast<double>(d)));
  if (bias) {
    if (bias->index.tokens() != t) {
      throw DimensionError("bias index covers " +
                           std::to_string(bias->index.tokens()) +
                           " tokens, windows hold " + std::to_string(t));
    }
    scores = add(scores, bias_matrix(*bias));
  }
  if (mask) {
    const Shape& ms = mask->shape();
    if (ms.size() != 3 || ms[1] != t || ms[2] != t || n % ms[0] != 0) {
      throw DimensionError("mask " + shape_str(ms) + " does not fit " +
                           std::to_string(n) + " windows of " +
                           std::to_string(t) + " tokens");
    }
    const std::size_t nw = ms[0];
    Tensor expanded({nw, heads, t, t});
    for (std::size_t w = 0; w < nw; ++w) {
      for (std::size_t h = 0; h < heads; ++h) {
        std::copy_n(mask->data().data() + w * t * t, t * t,
                    expanded.data().data() + (w * heads + h) * t * t);
      }
    }
    scores = reshape(scores, {n / nw, nw, heads, t, t});
    scores = add(scores, tape.constant(std::move(expanded)));
    scores = reshape(scores, {n, heads, t, t});
  }
  Var attn = softmax(scores, 3);
  Var out = matmul(attn, v);
  out = reshape(permute(out, {0, 2, 1, 3}), {n, t, inner});
  return linear(out, weights.wo, weights.bo);
}

Var multi_head_attention(Var tokens, const MultiHeadWeights& weights,
                         const RelativePositionBias* bias, const Tensor* mask) {
  const Shape& s = tokens.shape();
  if (s.size() != 2) {
    throw DimensionError("multi_head_attention expects [T, C], got " +
                         shape_str(s));
  }
  std::optional<Tensor> m;
  if (mask) m = mask->reshaped({1, s[0], s[0]});
  Var out = windowed_attention(reshape(tokens, {1, s[0], s[1]}), weights, bias,
                               m ? &*m : nullptr);
  return reshape(out, s);
}

FeatureMap w_msa(const FeatureMap& fm, std::size_t window,
                 const MultiHeadWeights& weights,
                 const RelativePositionBias* bias) {
  WindowGrid grid = window_partition(fm, window);
  grid.windows = windowed_attention(grid.windows, weights, bias);
  return window_reverse(grid);
}

FeatureMap sw_msa(const FeatureMap& fm, std::size_t window, std::size_t shift,
                  const MultiHeadWeights& weights,
                  const RelativePositionBias* bias) {
  if (shift >= window) {
    throw std::invalid_argument("shift " + std::to_string(shift) +
                                " must be smaller than window " +
                                std::to_string(window));
  }
  if (shift == 0) return w_msa(fm, window, weights, bias);
  const long s = static_cast<long>(shift);
  const ShiftMask mask = build_shift_mask(fm.h, fm.w, window, shift);
  WindowGrid grid = window_partition(cyclic_shift(fm, -s, -s), window);
  grid.windows = windowed_attention(grid.windows, weights, bias, &mask.bias);
  return cyclic_shift(window_reverse(grid), s, s);
}

namespace {
std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) {
    throw std::overflow_error("flops: multiply-add count overflows 64 bits");
  }
  return r;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = 0;
  if (__builtin_add_overflow(a, b, &r)) {
    throw std::overflow_error("flops: multiply-add count overflows 64 bits");
  }
  return r;
}
}  // namespace

FlopsReport flops(std::uint64_t h, std::uint64_t w, std::uint64_t channels,
                  std::uint64_t window) {
  if (h == 0 || w == 0 || channels == 0 || window == 0) {
    throw std::invalid_argument("flops arguments must be positive");
  }
  const std::uint64_t hw = checked_mul(h, w);
  const std::uint64_t projections =
      checked_mul(4, checked_mul(hw, checked_mul(channels, channels)));
  const std::uint64_t global =
      checked_mul(2, checked_mul(checked_mul(hw, hw), channels));
  const std::uint64_t local = checked_mul(
      2, checked_mul(checked_mul(window, window), checked_mul(hw, channels)));
  FlopsReport r;
  r.omega_msa = checked_add(projections, global);
  r.omega_wmsa = checked_add(projections, local);
  r.h = h;
  r.w = w;
  r.channels = channels;
  r.window = window;
  return r;
}

}  // namespace swinlite
