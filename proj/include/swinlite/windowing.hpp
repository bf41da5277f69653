#pragma once

#include <cstdint>
#include <vector>

#include "swinlite/ops.hpp"

namespace swinlite {

/// Additive attention bias for token pairs that belong to different regions
/// of a shifted window. exp(-100) underflows to a negligible weight while
/// keeping gradients finite.
inline constexpr double kMaskNeg = -100.0;

/// Tokens on an h×w grid, row-major, with a leading batch axis:
/// tokens has shape [batch, h*w, channels].
struct FeatureMap {
  Var tokens;
  std::size_t h = 0;
  std::size_t w = 0;
  std::size_t channels = 0;

  FeatureMap() = default;
  FeatureMap(Var tokens, std::size_t h, std::size_t w);

  std::size_t batch() const { return tokens.size() / (h * w * channels); }
  std::size_t token_count() const { return h * w; }
};

/// Non-overlapping M×M windows; windows has shape
/// [batch * num_windows, M*M, channels], windows row-major within a batch
/// item and tokens row-major within a window.
struct WindowGrid {
  Var windows;
  std::size_t window = 0;
  std::size_t h = 0;
  std::size_t w = 0;
  std::size_t channels = 0;

  std::size_t num_windows() const { return (h / window) * (w / window); }
  std::size_t tokens_per_window() const { return window * window; }
};

/// Region bookkeeping for shifted-window attention.
struct ShiftMask {
  std::size_t h = 0;
  std::size_t w = 0;
  std::size_t window = 0;
  std::size_t shift = 0;
  /// Region id per token of the shifted h×w map.
  std::vector<int> region;
  /// [num_windows, M*M, M*M] with entries 0 or kMaskNeg.
  Tensor bias;

  std::size_t num_windows() const { return (h / window) * (w / window); }
};

// Row index maps. Each returns, for every output row, the input row it reads.
std::vector<std::uint32_t> patch_partition_index(std::size_t height,
                                                 std::size_t width,
                                                 std::size_t patch);
std::vector<std::uint32_t> window_partition_index(std::size_t h, std::size_t w,
                                                  std::size_t window);
std::vector<std::uint32_t> cyclic_shift_index(std::size_t h, std::size_t w,
                                              long dy, long dx);
std::vector<std::uint32_t> patch_merge_index(std::size_t h, std::size_t w);
std::vector<std::uint32_t> invert_index(const std::vector<std::uint32_t>& index);

/// Splits images [batch, H, W, 3] (or a single [H, W, 3]) into patch tokens
/// of dimension 3·patch², each the row-major flattening of its block.
FeatureMap patch_partition(Var image, std::size_t patch);
/// Exact inverse of patch_partition; returns [batch, H, W, 3].
Var patch_reassemble(const FeatureMap& fm, std::size_t patch);

FeatureMap linear_embedding(const FeatureMap& fm, Var weight, Var bias);

/// Concatenates each 2×2 neighbourhood (top-left, top-right, bottom-left,
/// bottom-right) and projects 4C -> 2C with weight [4C x 2C].
FeatureMap patch_merging(const FeatureMap& fm, Var weight);

WindowGrid window_partition(const FeatureMap& fm, std::size_t window);
FeatureMap window_reverse(const WindowGrid& grid);

/// Token at (r, c) moves to ((r + dy) mod h, (c + dx) mod w).
FeatureMap cyclic_shift(const FeatureMap& fm, long dy, long dx);

/// Masks for attention on a map that was cyclically shifted by (-shift,
/// -shift). Regions come from the three bands [0, h-M), [h-M, h-shift),
/// [h-shift, h) on each axis.
ShiftMask build_shift_mask(std::size_t h, std::size_t w, std::size_t window,
                           std::size_t shift);

}  // namespace swinlite
