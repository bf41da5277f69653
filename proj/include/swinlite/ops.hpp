#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "swinlite/autograd.hpp"

namespace swinlite {

inline constexpr double kLayerNormEps = 1e-5;

// Differentiable primitives. Every op records itself on the tape of its
// first operand.

/// c = a·b over the last two axes. Leading axes of a and b must match
/// exactly, or b may be a plain matrix shared across every leading index.
Var matmul(Var a, Var b);

/// y = x·W (+ b) applied to every row of the trailing axis.
Var linear(Var x, Var weight, std::optional<Var> bias = std::nullopt);

/// Elementwise a + b where b's shape equals a trailing suffix of a's shape.
Var add(Var a, Var b);
/// Elementwise product of two same-shaped tensors.
Var mul(Var a, Var b);
Var scale(Var x, double factor);

Var softmax(Var x, std::size_t axis);
Var layernorm(Var x, Var gamma, Var beta, double eps = kLayerNormEps);
/// x·Φ(x) with the exact Gaussian CDF.
Var gelu(Var x);

Var reshape(Var x, Shape shape);
/// Output axis i is input axis axes[i].
Var permute(Var x, std::vector<std::size_t> axes);
/// Swaps the last two axes.
Var transpose(Var x);

/// Sum of all elements, shape {1}.
Var sum(Var x);
/// Mean over one axis; the axis is removed (rank-1 input gives shape {1}).
Var mean_axis(Var x, std::size_t axis);

/// Mean over the batch of -log softmax(logits)[label], log-sum-exp stabilized.
Var cross_entropy(Var logits, std::span<const std::size_t> labels);

/// Row gather. x is viewed as [batch, rows_in, width]; output row r of every
/// batch copies input row index[r]. The result is reshaped to out_shape.
/// Backward scatter-adds.
Var gather_rows(Var x, std::span<const std::uint32_t> index,
                std::size_t rows_in, std::size_t width, Shape out_shape);

}  // namespace swinlite
