#pragma once

#include <cstdint>
#include <functional>

#include "swinlite/autograd.hpp"

namespace swinlite {

/// A scalar function of one tensor, built from taped ops.
using TapedFunction = std::function<Var(Tape&, Var)>;

struct GradCheckOptions {
  double step = 1e-5;
  /// Number of coordinates to probe; 0 probes all of them.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t coords_checked = 0;
  Tensor analytic;
};

/// Compares the taped gradient of f at x with central differences.
///
/// The error per coordinate is |analytic - numeric| / max(1, |analytic|).
/// NaN or Inf anywhere in the evaluation propagates as NumericError.
GradCheckResult grad_check_detailed(const TapedFunction& f, const Tensor& x,
                                    const GradCheckOptions& options = {});

inline double grad_check(const TapedFunction& f, const Tensor& x,
                         double step = 1e-5) {
  GradCheckOptions o;
  o.step = step;
  return grad_check_detailed(f, x, o).max_rel_error;
}

}  // namespace swinlite
