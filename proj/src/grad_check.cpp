#include "swinlite/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "swinlite/rng.hpp"

namespace swinlite {

namespace {
double evaluate(const TapedFunction& f, const Tensor& x) {
  Tape tape;
  Var out = f(tape, tape.constant(x));
  if (out.size() != 1) {
    throw DimensionError("grad_check needs a scalar function, got shape " +
                         shape_str(out.shape()));
  }
  const double v = out.value()[0];
  if (!std::isfinite(v)) throw NumericError("grad_check: non-finite output");
  return v;
}
}  // namespace

GradCheckResult grad_check_detailed(const TapedFunction& f, const Tensor& x,
                                    const GradCheckOptions& options) {
  if (!(options.step > 0.0)) {
    throw std::invalid_argument("grad_check step must be positive");
  }
  GradCheckResult result;
  {
    Tape tape;
    Var v = tape.watch(x, &result.analytic);
    tape.backward(f(tape, v));
  }

  std::vector<std::size_t> coords(x.size());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (options.max_coords != 0 && options.max_coords < coords.size()) {
    Rng rng{tag(Stream::kGradCheck), options.seed};
    rng.shuffle(std::span<std::size_t>(coords));
    coords.resize(options.max_coords);
    std::sort(coords.begin(), coords.end());
  }

  Tensor probe = x;
  for (std::size_t i : coords) {
    const double orig = probe[i];
    probe[i] = orig + options.step;
    const double plus = evaluate(f, probe);
    probe[i] = orig - options.step;
    const double minus = evaluate(f, probe);
    probe[i] = orig;
    const double numeric = (plus - minus) / (2.0 * options.step);
    const double a = result.analytic[i];
    const double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
    if (err > result.max_rel_error) {
      result.max_rel_error = err;
      result.worst_index = i;
    }
    ++result.coords_checked;
  }
  return result;
}

}  // namespace swinlite
