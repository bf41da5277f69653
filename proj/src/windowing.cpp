#include "swinlite/windowing.hpp"

#include <string>

namespace swinlite {

namespace {
std::string grid_str(std::size_t h, std::size_t w) {
  return std::to_string(h) + "x" + std::to_string(w);
}

std::uint32_t u32(std::size_t v) { return static_cast<std::uint32_t>(v); }
}  // namespace

FeatureMap::FeatureMap(Var t, std::size_t height, std::size_t width)
    : tokens(t), h(height), w(width) {
  const Shape& s = t.shape();
  if (s.size() != 3 || s[1] != h * w) {
    throw DimensionError("feature map tokens " + shape_str(s) +
                         " do not match grid " + grid_str(h, w));
  }
  channels = s[2];
}

std::vector<std::uint32_t> patch_partition_index(std::size_t height,
                                                 std::size_t width,
                                                 std::size_t patch) {
  if (patch == 0 || height % patch != 0 || width % patch != 0) {
    throw DimensionError("image " + grid_str(height, width) +
                         " is not divisible into " + std::to_string(patch) +
                         "-pixel patches");
  }
  // Input rows are patch-wide pixel strips: row (y, tx) covers pixels
  // (y, tx*patch .. tx*patch+patch-1).
  const std::size_t gh = height / patch;
  const std::size_t gw = width / patch;
  std::vector<std::uint32_t> idx;
  idx.reserve(height * gw);
  for (std::size_t ty = 0; ty < gh; ++ty) {
    for (std::size_t tx = 0; tx < gw; ++tx) {
      for (std::size_t py = 0; py < patch; ++py) {
        idx.push_back(u32((ty * patch + py) * gw + tx));
      }
    }
  }
  return idx;
}

std::vector<std::uint32_t> window_partition_index(std::size_t h, std::size_t w,
                                                  std::size_t window) {
  if (window == 0 || h % window != 0 || w % window != 0) {
    throw DimensionError("grid " + grid_str(h, w) +
                         " is not divisible into windows of " +
                         std::to_string(window));
  }
  std::vector<std::uint32_t> idx;
  idx.reserve(h * w);
  for (std::size_t wr = 0; wr < h / window; ++wr) {
    for (std::size_t wc = 0; wc < w / window; ++wc) {
      for (std::size_t i = 0; i < window; ++i) {
        for (std::size_t j = 0; j < window; ++j) {
          idx.push_back(u32((wr * window + i) * w + wc * window + j));
        }
      }
    }
  }
  return idx;
}

std::vector<std::uint32_t> cyclic_shift_index(std::size_t h, std::size_t w,
                                              long dy, long dx) {
  const long hh = static_cast<long>(h);
  const long ww = static_cast<long>(w);
  std::vector<std::uint32_t> idx(h * w);
  for (long r = 0; r < hh; ++r) {
    const long sr = (((r - dy) % hh) + hh) % hh;
    for (long c = 0; c < ww; ++c) {
      const long sc = (((c - dx) % ww) + ww) % ww;
      idx[static_cast<std::size_t>(r * ww + c)] = u32(static_cast<std::size_t>(sr * ww + sc));
    }
  }
  return idx;
}

std::vector<std::uint32_t> patch_merge_index(std::size_t h, std::size_t w) {
  if (h % 2 != 0 || w % 2 != 0) {
    throw DimensionError("patch merging needs even extents, got " +
                         grid_str(h, w));
  }
  std::vector<std::uint32_t> idx;
  idx.reserve(h * w);
  for (std::size_t r = 0; r < h / 2; ++r) {
    for (std::size_t c = 0; c < w / 2; ++c) {
      idx.push_back(u32((2 * r) * w + 2 * c));
      idx.push_back(u32((2 * r) * w + 2 * c + 1));
      idx.push_back(u32((2 * r + 1) * w + 2 * c));
      idx.push_back(u32((2 * r + 1) * w + 2 * c + 1));
    }
  }
  return idx;
}

std::vector<std::uint32_t> invert_index(const std::vector<std::uint32_t>& index) {
  std::vector<std::uint32_t> inv(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) inv[index[i]] = u32(i);
  return inv;
}

FeatureMap patch_partition(Var image, std::size_t patch) {
  Shape s = image.shape();
  if (s.size() == 3) s.insert(s.begin(), 1);
  if (s.size() != 4 || s[3] != 3) {
    throw DimensionError("patch_partition expects [batch, H, W, 3], got " +
                         shape_str(image.shape()));
  }
  const std::size_t batch = s[0];
  const std::size_t height = s[1];
  const std::size_t width = s[2];
  const auto idx = patch_partition_index(height, width, patch);
  const std::size_t gh = height / patch;
  const std::size_t gw = width / patch;
  Var tokens = gather_rows(image, idx, height * gw, patch * 3,
                           {batch, gh * gw, patch * patch * 3});
  return FeatureMap(tokens, gh, gw);
}

Var patch_reassemble(const FeatureMap& fm, std::size_t patch) {
  if (fm.channels != patch * patch * 3) {
    throw DimensionError("token dim " + std::to_string(fm.channels) +
                         " is not a " + std::to_string(patch) + "-pixel patch");
  }
  const std::size_t height = fm.h * patch;
  const std::size_t width = fm.w * patch;
  const auto inv = invert_index(patch_partition_index(height, width, patch));
  return gather_rows(fm.tokens, inv, height * fm.w, patch * 3,
                     {fm.batch(), height, width, 3});
}

FeatureMap linear_embedding(const FeatureMap& fm, Var weight, Var bias) {
  return FeatureMap(linear(fm.tokens, weight, bias), fm.h, fm.w);
}

FeatureMap patch_merging(const FeatureMap& fm, Var weight) {
  const auto idx = patch_merge_index(fm.h, fm.w);
  const std::size_t oh = fm.h / 2;
  const std::size_t ow = fm.w / 2;
  Var merged = gather_rows(fm.tokens, idx, fm.h * fm.w, fm.channels,
                           {fm.batch(), oh * ow, 4 * fm.channels});
  const Shape& ws = weight.shape();
  if (ws.size() != 2 || ws[0] != 4 * fm.channels || ws[1] != 2 * fm.channels) {
    throw DimensionError("patch merging weight " + shape_str(ws) +
                         " does not map " + std::to_string(4 * fm.channels) +
                         " -> " + std::to_string(2 * fm.channels));
  }
  return FeatureMap(linear(merged, weight), oh, ow);
}

WindowGrid window_partition(const FeatureMap& fm, std::size_t window) {
  if (window > fm.h || window > fm.w) {
    throw DimensionError("window " + std::to_string(window) +
                         " exceeds grid " + grid_str(fm.h, fm.w));
  }
  const auto idx = window_partition_index(fm.h, fm.w, window);
  const std::size_t nw = (fm.h / window) * (fm.w / window);
  WindowGrid g;
  g.windows = gather_rows(fm.tokens, idx, fm.h * fm.w, fm.channels,
                          {fm.batch() * nw, window * window, fm.channels});
  g.window = window;
  g.h = fm.h;
  g.w = fm.w;
  g.channels = fm.channels;
  return g;
}

FeatureMap window_reverse(const WindowGrid& grid) {
  const Shape& s = grid.windows.shape();
  const std::size_t t = grid.tokens_per_window();
  const std::size_t nw = grid.num_windows();
  if (s.size() != 3 || s[1] != t || s[2] != grid.channels || s[0] % nw != 0) {
    throw DimensionError("window tensor " + shape_str(s) +
                         " does not match grid " + grid_str(grid.h, grid.w) +
                         " with window " + std::to_string(grid.window));
  }
  const auto inv = invert_index(window_partition_index(grid.h, grid.w, grid.window));
  const std::size_t batch = s[0] / nw;
  Var tokens = gather_rows(grid.windows, inv, grid.h * grid.w, grid.channels,
                           {batch, grid.h * grid.w, grid.channels});
  return FeatureMap(tokens, grid.h, grid.w);
}

FeatureMap cyclic_shift(const FeatureMap& fm, long dy, long dx) {
  const auto idx = cyclic_shift_index(fm.h, fm.w, dy, dx);
  Var tokens = gather_rows(fm.tokens, idx, fm.h * fm.w, fm.channels,
                           fm.tokens.shape());
  return FeatureMap(tokens, fm.h, fm.w);
}

ShiftMask build_shift_mask(std::size_t h, std::size_t w, std::size_t window,
                           std::size_t shift) {
  if (shift >= window) {
    throw std::invalid_argument("shift " + std::to_string(shift) +
                                " must be smaller than window " +
                                std::to_string(window));
  }
  if (window > h || window > w) {
    throw DimensionError("window " + std::to_string(window) +
                         " exceeds grid " + grid_str(h, w));
  }
  auto band = [window, shift](std::size_t pos, std::size_t extent) {
    if (pos < extent - window) return 0;
    if (pos < extent - shift) return 1;
    return 2;
  };
  ShiftMask m;
  m.h = h;
  m.w = w;
  m.window = window;
  m.shift = shift;
  m.region.resize(h * w);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      m.region[r * w + c] = band(r, h) * 3 + band(c, w);
    }
  }
  const auto idx = window_partition_index(h, w, window);
  const std::size_t t = window * window;
  const std::size_t nw = (h / window) * (w / window);
  m.bias = Tensor({nw, t, t});
  for (std::size_t win = 0; win < nw; ++win) {
    for (std::size_t i = 0; i < t; ++i) {
      const int ri = m.region[idx[win * t + i]];
      for (std::size_t j = 0; j < t; ++j) {
        const int rj = m.region[idx[win * t + j]];
        m.bias[(win * t + i) * t + j] = ri == rj ? 0.0 : kMaskNeg;
      }
    }
  }
  return m;
}

}  // namespace swinlite
