#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "swinlite/windowing.hpp"

namespace swinlite {

/// Maps each (query, key) token pair of an M×M window to a row of the
/// (2M-1)² relative position bias table.
struct RelativePositionIndex {
  std::size_t window = 0;
  /// [M² x M²] row-major.
  std::vector<std::uint32_t> index;

  std::size_t table_rows() const { return (2 * window - 1) * (2 * window - 1); }
  std::size_t tokens() const { return window * window; }
};

RelativePositionIndex build_relative_index(std::size_t window);

/// Learnable bias table [(2M-1)², heads] with its fixed index.
struct RelativePositionBias {
  Var table;
  RelativePositionIndex index;
};

/// Per-head width floor(C / heads). Heads that do not divide C leave the
/// attention path slightly narrower than the token width.
inline std::size_t head_dim(std::size_t channels, std::size_t heads) {
  return channels / heads;
}

/// Projection weights of one attention module. Head i owns columns
/// [i*d, (i+1)*d) of wq, wk and wv, and rows [i*d, (i+1)*d) of wo.
/// D = heads * d equals C whenever heads divides C.
struct MultiHeadWeights {
  Var wq;  // [C x D]
  Var wk;  // [C x D]
  Var wv;  // [C x D]
  Var wo;  // [D x C]
  Var bo;  // [C]
  std::size_t heads = 1;

  std::size_t channels() const { return wq.shape()[0]; }
  std::size_t inner() const { return wq.shape()[1]; }
  std::size_t head_dim() const { return inner() / heads; }
};

/// Per-head bias B_i[p, q] = table[index[p, q], i], shape [heads, T, T].
Var bias_matrix(const RelativePositionBias& bias);

/// softmax(Q·Kᵀ/√d + B + mask)·V for one head. q, k, v are [T x d];
/// bias and mask are [T x T].
Var attention_with_bias(Var q, Var k, Var v, std::optional<Var> bias,
                        std::optional<Var> mask = std::nullopt);

/// Multi-head attention applied independently to every window.
///
/// windows is [N, T, C] where N = batch * num_windows; mask, when present,
/// is [num_windows, T, T] and is repeated over the batch. Returns [N, T, C].
Var windowed_attention(Var windows, const MultiHeadWeights& weights,
                       const RelativePositionBias* bias,
                       const Tensor* mask = nullptr);

/// Multi-head attention over one token set [T x C]; mask is [T x T].
Var multi_head_attention(Var tokens, const MultiHeadWeights& weights,
                         const RelativePositionBias* bias,
                         const Tensor* mask = nullptr);

/// Windowed multi-head self-attention; grid and channels unchanged.
FeatureMap w_msa(const FeatureMap& fm, std::size_t window,
                 const MultiHeadWeights& weights,
                 const RelativePositionBias* bias);

/// Shifted-window attention: shift content by (-shift, -shift), attend in
/// masked windows, shift back.
FeatureMap sw_msa(const FeatureMap& fm, std::size_t window, std::size_t shift,
                  const MultiHeadWeights& weights,
                  const RelativePositionBias* bias);

/// Multiply-add counts of global and windowed attention on an h×w×C map.
struct FlopsReport {
  std::uint64_t omega_msa = 0;
  std::uint64_t omega_wmsa = 0;
  std::uint64_t h = 0;
  std::uint64_t w = 0;
  std::uint64_t channels = 0;
  std::uint64_t window = 0;

  double ratio() const {
    return static_cast<double>(omega_msa) / static_cast<double>(omega_wmsa);
  }
};

/// omega_msa = 4hwC² + 2(hw)²C and omega_wmsa = 4hwC² + 2M²hwC, exact.
/// Throws std::overflow_error instead of wrapping.
FlopsReport flops(std::uint64_t h, std::uint64_t w, std::uint64_t channels,
                  std::uint64_t window);

}  // namespace swinlite
