#include "swinlite/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace swinlite {
namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

// c (+)= op(a)·op(b), c is m×n, inner extent k.
void gemm(const double* a, bool trans_a, const double* b, bool trans_b,
          double* c, std::size_t m, std::size_t k, std::size_t n,
          bool accumulate) {
  const auto M = static_cast<Eigen::Index>(m);
  const auto K = static_cast<Eigen::Index>(k);
  const auto N = static_cast<Eigen::Index>(n);
  MutMap C(c, M, N);
  if (!accumulate) C.setZero();
  if (!trans_a && !trans_b) {
    C.noalias() += ConstMap(a, M, K) * ConstMap(b, K, N);
  } else if (!trans_a && trans_b) {
    C.noalias() += ConstMap(a, M, K) * ConstMap(b, N, K).transpose();
  } else if (trans_a && !trans_b) {
    C.noalias() += ConstMap(a, K, M).transpose() * ConstMap(b, K, N);
  } else {
    C.noalias() +=
        ConstMap(a, K, M).transpose() * ConstMap(b, N, K).transpose();
  }
}

Tape& tape_of(Var v) { return *v.tape; }

std::string two_shapes(const Tensor& a, const Tensor& b) {
  return shape_str(a.shape()) + " and " + shape_str(b.shape());
}

std::vector<std::size_t> strides_of(const Shape& shape) {
  std::vector<std::size_t> s(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) s[i - 1] = s[i] * shape[i];
  return s;
}

// dst[out index] (+)= src[permuted index]; output axis i reads src axis axes[i].
void permute_copy(const Tensor& src, const std::vector<std::size_t>& axes,
                  double* dst, bool accumulate) {
  const Shape& in_shape = src.shape();
  const std::size_t rank = in_shape.size();
  const auto in_strides = strides_of(in_shape);
  Shape out_shape(rank);
  std::vector<std::size_t> step(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    out_shape[i] = in_shape[axes[i]];
    step[i] = in_strides[axes[i]];
  }
  const std::size_t inner = out_shape[rank - 1];
  const std::size_t inner_step = step[rank - 1];
  const std::size_t total = src.size();
  std::vector<std::size_t> idx(rank, 0);
  std::size_t in_off = 0;
  const double* s = src.data().data();
  for (std::size_t out = 0; out < total; out += inner) {
    double* d = dst + out;
    if (accumulate) {
      for (std::size_t j = 0; j < inner; ++j) d[j] += s[in_off + j * inner_step];
    } else {
      for (std::size_t j = 0; j < inner; ++j) d[j] = s[in_off + j * inner_step];
    }
    for (std::size_t ax = rank - 1; ax-- > 0;) {
      ++idx[ax];
      in_off += step[ax];
      if (idx[ax] < out_shape[ax]) break;
      in_off -= step[ax] * out_shape[ax];
      idx[ax] = 0;
    }
  }
}

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t n = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw DimensionError("axis " + std::to_string(axis) +
                         " out of range for shape " + shape_str(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.n = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() < 2 || B.rank() < 2) {
    throw DimensionError("matmul needs matrices, got " + two_shapes(A, B));
  }
  const std::size_t m = A.dim(A.rank() - 2);
  const std::size_t k = A.dim(A.rank() - 1);
  const std::size_t n = B.dim(B.rank() - 1);
  if (B.dim(B.rank() - 2) != k) {
    throw DimensionError("matmul inner extents differ: " + two_shapes(A, B));
  }
  const bool shared_b = B.rank() == 2;
  if (!shared_b && !std::equal(A.shape().begin(), A.shape().end() - 2,
                               B.shape().begin(), B.shape().end() - 2)) {
    throw DimensionError("matmul leading extents differ: " + two_shapes(A, B));
  }
  if (!shared_b && A.rank() != B.rank()) {
    throw DimensionError("matmul rank mismatch: " + two_shapes(A, B));
  }
  const std::size_t batch = A.size() / (m * k);
  Shape out_shape(A.shape().begin(), A.shape().end() - 2);
  out_shape.push_back(m);
  out_shape.push_back(n);
  Tensor C(out_shape);
  MacCounter::record(static_cast<std::uint64_t>(batch) * m * k * n);

  const double* pa = A.data().data();
  const double* pb = B.data().data();
  double* pc = C.data().data();
  if (shared_b) {
    gemm(pa, false, pb, false, pc, batch * m, k, n, false);
  } else {
    for (std::size_t i = 0; i < batch; ++i) {
      gemm(pa + i * m * k, false, pb + i * k * n, false, pc + i * m * n, m, k,
           n, false);
    }
  }
  return tape_of(a).record(
      "matmul", std::move(C), {a, b},
      [a, b, batch, m, k, n, shared_b](Tape& t, const Tensor& g) {
        const double* pa = t.value(a).data().data();
        const double* pb = t.value(b).data().data();
        const double* pg = g.data().data();
        if (Tensor* ga = t.grad_target(a)) {
          double* d = ga->data().data();
          if (shared_b) {
            gemm(pg, false, pb, true, d, batch * m, n, k, true);
          } else {
            for (std::size_t i = 0; i < batch; ++i) {
              gemm(pg + i * m * n, false, pb + i * k * n, true, d + i * m * k,
                   m, n, k, true);
            }
          }
        }
        if (Tensor* gb = t.grad_target(b)) {
          double* d = gb->data().data();
          if (shared_b) {
            gemm(pa, true, pg, false, d, k, batch * m, n, true);
          } else {
            for (std::size_t i = 0; i < batch; ++i) {
              gemm(pa + i * m * k, true, pg + i * m * n, false, d + i * k * n,
                   k, m, n, true);
            }
          }
        }
      });
}

Var linear(Var x, Var weight, std::optional<Var> bias) {
  const Tensor& X = x.value();
  const Tensor& W = weight.value();
  if (W.rank() != 2 || X.dim(X.rank() - 1) != W.dim(0)) {
    throw DimensionError("linear: input " + shape_str(X.shape()) +
                         " does not match weight " + shape_str(W.shape()));
  }
  const std::size_t in = W.dim(0);
  const std::size_t out = W.dim(1);
  if (bias && bias->value().shape() != Shape{out}) {
    throw DimensionError("linear: bias " + shape_str(bias->value().shape()) +
                         " does not match weight " + shape_str(W.shape()));
  }
  const std::size_t rows = X.size() / in;
  Shape out_shape = X.shape();
  out_shape.back() = out;
  Tensor Y(out_shape);
  double* py = Y.data().data();
  if (bias) {
    const double* pb = bias->value().data().data();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(pb, pb + out, py + r * out);
    }
  }
  gemm(X.data().data(), false, W.data().data(), false, py, rows, in, out,
       true);
  MacCounter::record(static_cast<std::uint64_t>(rows) * in * out);

  std::vector<Var> inputs{x, weight};
  if (bias) inputs.push_back(*bias);
  const bool has_bias = bias.has_value();
  const Var b = bias.value_or(Var{});
  return tape_of(x).record(
      "linear", std::move(Y), inputs,
      [x, weight, b, has_bias, rows, in, out](Tape& t, const Tensor& g) {
        const double* pg = g.data().data();
        if (Tensor* gx = t.grad_target(x)) {
          gemm(pg, false, t.value(weight).data().data(), true,
               gx->data().data(), rows, out, in, true);
        }
        if (Tensor* gw = t.grad_target(weight)) {
          gemm(t.value(x).data().data(), true, pg, false, gw->data().data(),
               in, rows, out, true);
        }
        if (has_bias) {
          if (Tensor* gb = t.grad_target(b)) {
            double* d = gb->data().data();
            for (std::size_t r = 0; r < rows; ++r) {
              for (std::size_t j = 0; j < out; ++j) d[j] += pg[r * out + j];
            }
          }
        }
      });
}

Var add(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const bool suffix =
      B.rank() <= A.rank() &&
      std::equal(B.shape().begin(), B.shape().end(),
                 A.shape().end() - static_cast<std::ptrdiff_t>(B.rank()));
  if (!suffix) {
    throw DimensionError("add: cannot broadcast " + two_shapes(A, B));
  }
  const std::size_t nb = B.size();
  const std::size_t reps = A.size() / nb;
  Tensor C = A;
  double* pc = C.data().data();
  const double* pb = B.data().data();
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t j = 0; j < nb; ++j) pc[r * nb + j] += pb[j];
  }
  return tape_of(a).record("add", std::move(C), {a, b},
                           [a, b, reps, nb](Tape& t, const Tensor& g) {
                             if (Tensor* ga = t.grad_target(a)) ga->add_(g);
                             if (Tensor* gb = t.grad_target(b)) {
                               double* d = gb->data().data();
                               const double* pg = g.data().data();
                               for (std::size_t r = 0; r < reps; ++r) {
                                 for (std::size_t j = 0; j < nb; ++j) {
                                   d[j] += pg[r * nb + j];
                                 }
                               }
                             }
                           });
}

Var mul(Var a, Var b) {
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.shape() != B.shape()) {
    throw DimensionError("mul: shapes differ " + two_shapes(A, B));
  }
  Tensor C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] *= B[i];
  return tape_of(a).record("mul", std::move(C), {a, b},
                           [a, b](Tape& t, const Tensor& g) {
                             if (Tensor* ga = t.grad_target(a)) {
                               const Tensor& B = t.value(b);
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                 (*ga)[i] += g[i] * B[i];
                               }
                             }
                             if (Tensor* gb = t.grad_target(b)) {
                               const Tensor& A = t.value(a);
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                 (*gb)[i] += g[i] * A[i];
                               }
                             }
                           });
}

Var scale(Var x, double factor) {
  Tensor y = x.value();
  for (double& v : y.data()) v *= factor;
  return tape_of(x).record("scale", std::move(y), {x},
                           [x, factor](Tape& t, const Tensor& g) {
                             Tensor* gx = t.grad_target(x);
                             for (std::size_t i = 0; i < g.size(); ++i) {
                               (*gx)[i] += factor * g[i];
                             }
                           });
}

Var softmax(Var x, std::size_t axis) {
  const Tensor& X = x.value();
  const AxisSplit s = split_axis(X.shape(), axis);
  Tensor Y(X.shape());
  const double* px = X.data().data();
  double* py = Y.data().data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.n * s.inner + in;
      double mx = px[base];
      for (std::size_t j = 1; j < s.n; ++j) {
        mx = std::max(mx, px[base + j * s.inner]);
      }
      double total = 0.0;
      for (std::size_t j = 0; j < s.n; ++j) {
        const double e = std::exp(px[base + j * s.inner] - mx);
        py[base + j * s.inner] = e;
        total += e;
      }
      const double inv = 1.0 / total;
      for (std::size_t j = 0; j < s.n; ++j) py[base + j * s.inner] *= inv;
    }
  }
  Tape& t = tape_of(x);
  const Var self = t.upcoming();
  return t.record(
      "softmax", std::move(Y), {x}, [x, self, s](Tape& t, const Tensor& g) {
        Tensor* gx = t.grad_target(x);
        const double* py = t.value(self).data().data();
        const double* pg = g.data().data();
        double* d = gx->data().data();
        for (std::size_t o = 0; o < s.outer; ++o) {
          for (std::size_t in = 0; in < s.inner; ++in) {
            const std::size_t base = o * s.n * s.inner + in;
            double dot = 0.0;
            for (std::size_t j = 0; j < s.n; ++j) {
              const std::size_t p = base + j * s.inner;
              dot += pg[p] * py[p];
            }
            for (std::size_t j = 0; j < s.n; ++j) {
              const std::size_t p = base + j * s.inner;
              d[p] += py[p] * (pg[p] - dot);
            }
          }
        }
      });
}

Var layernorm(Var x, Var gamma, Var beta, double eps) {
  const Tensor& X = x.value();
  const std::size_t c = X.dim(X.rank() - 1);
  if (gamma.value().shape() != Shape{c} || beta.value().shape() != Shape{c}) {
    throw DimensionError("layernorm: affine parameters " +
                         two_shapes(gamma.value(), beta.value()) +
                         " do not match input " + shape_str(X.shape()));
  }
  const std::size_t rows = X.size() / c;
  Tensor normed(X.shape());
  std::vector<double> rstd(rows);
  Tensor Y(X.shape());
  const double* px = X.data().data();
  const double* pgam = gamma.value().data().data();
  const double* pbet = beta.value().data().data();
  double* pn = normed.data().data();
  double* py = Y.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = px + r * c;
    double mean = 0.0;
    for (std::size_t j = 0; j < c; ++j) mean += row[j];
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(c);
    const double inv = 1.0 / std::sqrt(var + eps);
    rstd[r] = inv;
    for (std::size_t j = 0; j < c; ++j) {
      const double h = (row[j] - mean) * inv;
      pn[r * c + j] = h;
      py[r * c + j] = h * pgam[j] + pbet[j];
    }
  }
  return tape_of(x).record(
      "layernorm", std::move(Y), {x, gamma, beta},
      [x, gamma, beta, c, rows, normed = std::move(normed),
       rstd = std::move(rstd)](Tape& t, const Tensor& g) {
        const double* pg = g.data().data();
        const double* pn = normed.data().data();
        if (Tensor* gg = t.grad_target(gamma)) {
          double* d = gg->data().data();
          for (std::size_t i = 0; i < rows * c; ++i) d[i % c] += pg[i] * pn[i];
        }
        if (Tensor* gb = t.grad_target(beta)) {
          double* d = gb->data().data();
          for (std::size_t i = 0; i < rows * c; ++i) d[i % c] += pg[i];
        }
        if (Tensor* gx = t.grad_target(x)) {
          const double* pgam = t.value(gamma).data().data();
          double* d = gx->data().data();
          const double inv_c = 1.0 / static_cast<double>(c);
          for (std::size_t r = 0; r < rows; ++r) {
            const double* gr = pg + r * c;
            const double* nr = pn + r * c;
            double mean_dh = 0.0;
            double mean_dh_n = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
              const double dh = gr[j] * pgam[j];
              mean_dh += dh;
              mean_dh_n += dh * nr[j];
            }
            mean_dh *= inv_c;
            mean_dh_n *= inv_c;
            for (std::size_t j = 0; j < c; ++j) {
              const double dh = gr[j] * pgam[j];
              d[r * c + j] += rstd[r] * (dh - mean_dh - nr[j] * mean_dh_n);
            }
          }
        }
      });
}

Var gelu(Var x) {
  Tensor y = x.value();
  for (double& v : y.data()) {
    v = v * 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
  }
  return tape_of(x).record(
      "gelu", std::move(y), {x}, [x](Tape& t, const Tensor& g) {
        Tensor* gx = t.grad_target(x);
        const Tensor& X = t.value(x);
        const double inv_sqrt_2pi = std::numbers::inv_sqrtpi / std::numbers::sqrt2;
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double v = X[i];
          const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
          const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
          (*gx)[i] += g[i] * (cdf + v * pdf);
        }
      });
}

Var reshape(Var x, Shape shape) {
  Tensor y = x.value().reshaped(std::move(shape));
  return tape_of(x).record("reshape", std::move(y), {x},
                           [x](Tape& t, const Tensor& g) {
                             Tensor* gx = t.grad_target(x);
                             double* d = gx->data().data();
                             for (std::size_t i = 0; i < g.size(); ++i) {
                               d[i] += g[i];
                             }
                           });
}

Var permute(Var x, std::vector<std::size_t> axes) {
  const Tensor& X = x.value();
  const std::size_t rank = X.rank();
  std::vector<bool> seen(rank, false);
  if (axes.size() != rank) {
    throw DimensionError("permute: " + std::to_string(axes.size()) +
                         " axes for shape " + shape_str(X.shape()));
  }
  for (auto a : axes) {
    if (a >= rank || seen[a]) {
      throw DimensionError("permute: invalid axis list for shape " +
                           shape_str(X.shape()));
    }
    seen[a] = true;
  }
  Shape out_shape(rank);
  for (std::size_t i = 0; i < rank; ++i) out_shape[i] = X.dim(axes[i]);
  Tensor Y(out_shape);
  permute_copy(X, axes, Y.data().data(), false);
  std::vector<std::size_t> inverse(rank);
  for (std::size_t i = 0; i < rank; ++i) inverse[axes[i]] = i;
  return tape_of(x).record("permute", std::move(Y), {x},
                           [x, inverse](Tape& t, const Tensor& g) {
                             Tensor* gx = t.grad_target(x);
                             permute_copy(g, inverse, gx->data().data(), true);
                           });
}

Var transpose(Var x) {
  const std::size_t rank = x.value().rank();
  if (rank < 2) {
    throw DimensionError("transpose needs rank >= 2, got " +
                         shape_str(x.shape()));
  }
  std::vector<std::size_t> axes(rank);
  std::iota(axes.begin(), axes.end(), std::size_t{0});
  std::swap(axes[rank - 1], axes[rank - 2]);
  return permute(x, std::move(axes));
}

Var sum(Var x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  return tape_of(x).record("sum", Tensor::scalar(total), {x},
                           [x](Tape& t, const Tensor& g) {
                             Tensor* gx = t.grad_target(x);
                             for (double& d : gx->data()) d += g[0];
                           });
}

Var mean_axis(Var x, std::size_t axis) {
  const Tensor& X = x.value();
  const AxisSplit s = split_axis(X.shape(), axis);
  Shape out_shape;
  for (std::size_t i = 0; i < X.rank(); ++i) {
    if (i != axis) out_shape.push_back(X.dim(i));
  }
  if (out_shape.empty()) out_shape.push_back(1);
  Tensor Y(out_shape);
  const double inv = 1.0 / static_cast<double>(s.n);
  const double* px = X.data().data();
  double* py = Y.data().data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t j = 0; j < s.n; ++j) {
      const double* src = px + (o * s.n + j) * s.inner;
      double* dst = py + o * s.inner;
      for (std::size_t in = 0; in < s.inner; ++in) dst[in] += src[in];
    }
    for (std::size_t in = 0; in < s.inner; ++in) py[o * s.inner + in] *= inv;
  }
  return tape_of(x).record(
      "mean_axis", std::move(Y), {x}, [x, s, inv](Tape& t, const Tensor& g) {
        double* d = t.grad_target(x)->data().data();
        const double* pg = g.data().data();
        for (std::size_t o = 0; o < s.outer; ++o) {
          for (std::size_t j = 0; j < s.n; ++j) {
            double* dst = d + (o * s.n + j) * s.inner;
            for (std::size_t in = 0; in < s.inner; ++in) {
              dst[in] += inv * pg[o * s.inner + in];
            }
          }
        }
      });
}

Var cross_entropy(Var logits, std::span<const std::size_t> labels) {
  const Tensor& L = logits.value();
  if (L.rank() != 2 || L.dim(0) != labels.size()) {
    throw DimensionError("cross_entropy: logits " + shape_str(L.shape()) +
                         " do not match " + std::to_string(labels.size()) +
                         " labels");
  }
  const std::size_t batch = L.dim(0);
  const std::size_t k = L.dim(1);
  for (auto y : labels) {
    if (y >= k) {
      throw std::out_of_range("cross_entropy: label " + std::to_string(y) +
                              " outside [0, " + std::to_string(k) + ")");
    }
  }
  Tensor probs(L.shape());
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double* row = L.data().data() + b * k;
    const double mx = *std::max_element(row, row + k);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double e = std::exp(row[j] - mx);
      probs[b * k + j] = e;
      total += e;
    }
    for (std::size_t j = 0; j < k; ++j) probs[b * k + j] /= total;
    loss += (mx + std::log(total)) - row[labels[b]];
  }
  loss /= static_cast<double>(batch);
  std::vector<std::size_t> y(labels.begin(), labels.end());
  return tape_of(logits).record(
      "cross_entropy", Tensor::scalar(loss), {logits},
      [logits, probs = std::move(probs), y = std::move(y), batch, k](
          Tape& t, const Tensor& g) {
        double* d = t.grad_target(logits)->data().data();
        const double f = g[0] / static_cast<double>(batch);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t j = 0; j < k; ++j) {
            const double onehot = j == y[b] ? 1.0 : 0.0;
            d[b * k + j] += f * (probs[b * k + j] - onehot);
          }
        }
      });
}

Var gather_rows(Var x, std::span<const std::uint32_t> index,
                std::size_t rows_in, std::size_t width, Shape out_shape) {
  const Tensor& X = x.value();
  if (rows_in == 0 || width == 0 || X.size() % (rows_in * width) != 0) {
    throw DimensionError("gather_rows: " + shape_str(X.shape()) +
                         " is not a whole number of " +
                         std::to_string(rows_in) + "x" +
                         std::to_string(width) + " blocks");
  }
  const std::size_t batch = X.size() / (rows_in * width);
  const std::size_t rows_out = index.size();
  if (shape_size(out_shape) != batch * rows_out * width) {
    throw DimensionError("gather_rows: output shape " + shape_str(out_shape) +
                         " does not hold the gathered rows");
  }
  for (auto r : index) {
    if (r >= rows_in) {
      throw DimensionError("gather_rows: row index " + std::to_string(r) +
                           " out of range " + std::to_string(rows_in));
    }
  }
  Tensor Y(std::move(out_shape));
  const double* px = X.data().data();
  double* py = Y.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    const double* src = px + b * rows_in * width;
    double* dst = py + b * rows_out * width;
    for (std::size_t r = 0; r < rows_out; ++r) {
      std::copy_n(src + index[r] * width, width, dst + r * width);
    }
  }
  std::vector<std::uint32_t> idx(index.begin(), index.end());
  return tape_of(x).record(
      "gather_rows", std::move(Y), {x},
      [x, idx = std::move(idx), batch, rows_in, width](Tape& t,
                                                       const Tensor& g) {
        double* d = t.grad_target(x)->data().data();
        const double* pg = g.data().data();
        const std::size_t rows_out = idx.size();
        for (std::size_t b = 0; b < batch; ++b) {
          double* dst = d + b * rows_in * width;
          const double* src = pg + b * rows_out * width;
          for (std::size_t r = 0; r < rows_out; ++r) {
            double* row = dst + idx[r] * width;
            const double* gr = src + r * width;
            for (std::size_t j = 0; j < width; ++j) row[j] += gr[j];
          }
        }
      });
}

}  // namespace swinlite
