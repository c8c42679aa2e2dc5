#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "ufo/error.hpp"
#include "ufo/kernels.hpp"
#include "ufo/tape.hpp"

namespace ufo::ops {
namespace {

constexpr std::size_t kParallelElems = 1 << 16;

Tape& same_tape(Var a, Var b) {
  if (!a.valid() || a.tape() != b.tape()) throw InvalidArgument("ops: operands live on different tapes");
  return *a.tape();
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) throw InvalidArgument(std::string(op) + ": shape mismatch");
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Elementwise unary op; dydx(x, y) gives the local derivative.
template <class F, class D>
Var unary(const char* name, Var a, F f, D dydx) {
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  const std::size_t n = x.size();
  const double* xs = x.data();
  double* ys = y.data();
#pragma omp parallel for if (n > kParallelElems)
  for (std::size_t i = 0; i < n; ++i) ys[i] = f(xs[i]);
  const std::size_t ia = a.id();
  const std::size_t io = t.size();
  return t.record(name, std::move(y), {ia}, [ia, io, dydx](Tape& tp, const Matrix& g) {
    const Matrix& xv = tp.value(ia);
    const Matrix& yv = tp.value(io);
    Matrix& ga = tp.grad_buffer(ia);
    const std::size_t m = g.size();
#pragma omp parallel for if (m > kParallelElems)
    for (std::size_t i = 0; i < m; ++i) ga.data()[i] += g.data()[i] * dydx(xv.data()[i], yv.data()[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  Matrix c;
  kernels::gemm(a.value(), b.value(), c);
  const std::size_t ia = a.id(), ib = b.id();
  const bool ga = t.requires_grad(a), gb = t.requires_grad(b);
  return t.record("matmul", std::move(c), {ia, ib}, [ia, ib, ga, gb](Tape& tp, const Matrix& g) {
    if (ga) kernels::gemm_nt(g, tp.value(ib), tp.grad_buffer(ia), true);
    if (gb) kernels::gemm_tn(tp.value(ia), g, tp.grad_buffer(ib), true);
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Matrix c = a.value();
  const double* bs = b.value().data();
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += bs[i];
  const std::size_t ia = a.id(), ib = b.id();
  const bool ga = t.requires_grad(a), gb = t.requires_grad(b);
  return t.record("add", std::move(c), {ia, ib}, [ia, ib, ga, gb](Tape& tp, const Matrix& g) {
    if (ga) {
      Matrix& d = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) d.data()[i] += g.data()[i];
    }
    if (gb) {
      Matrix& d = tp.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) d.data()[i] += g.data()[i];
    }
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Matrix c = a.value();
  const double* bs = b.value().data();
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] -= bs[i];
  const std::size_t ia = a.id(), ib = b.id();
  const bool ga = t.requires_grad(a), gb = t.requires_grad(b);
  return t.record("sub", std::move(c), {ia, ib}, [ia, ib, ga, gb](Tape& tp, const Matrix& g) {
    if (ga) {
      Matrix& d = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) d.data()[i] += g.data()[i];
    }
    if (gb) {
      Matrix& d = tp.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) d.data()[i] -= g.data()[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  Matrix c = a.value();
  const double* bs = b.value().data();
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= bs[i];
  const std::size_t ia = a.id(), ib = b.id();
  const bool ga = t.requires_grad(a), gb = t.requires_grad(b);
  return t.record("mul", std::move(c), {ia, ib}, [ia, ib, ga, gb](Tape& tp, const Matrix& g) {
    const double* av = tp.value(ia).data();
    const double* bv = tp.value(ib).data();
    if (ga) {
      Matrix& d = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) d.data()[i] += g.data()[i] * bv[i];
    }
    if (gb) {
      Matrix& d = tp.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) d.data()[i] += g.data()[i] * av[i];
    }
  });
}

Var div(Var a, Var b) {
  Tape& t = same_tape(a, b);
  require_same_shape(a.value(), b.value(), "div");
  Matrix c = a.value();
  const double* bs = b.value().data();
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] /= bs[i];
  const std::size_t ia = a.id(), ib = b.id();
  const bool ga = t.requires_grad(a), gb = t.requires_grad(b);
  return t.record("div", std::move(c), {ia, ib}, [ia, ib, ga, gb](Tape& tp, const Matrix& g) {
    const double* av = tp.value(ia).data();
    const double* bv = tp.value(ib).data();
    if (ga) {
      Matrix& d = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) d.data()[i] += g.data()[i] / bv[i];
    }
    if (gb) {
      Matrix& d = tp.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) d.data()[i] -= g.data()[i] * av[i] / (bv[i] * bv[i]);
    }
  });
}

Var scale(Var a, double s) {
  Tape& t = *a.tape();
  Matrix c = a.value();
  for (double& v : c.values()) v *= s;
  const std::size_t ia = a.id();
  return t.record("scale", std::move(c), {ia}, [ia, s](Tape& tp, const Matrix& g) {
    Matrix& d = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) d.data()[i] += s * g.data()[i];
  });
}

Var add_scalar(Var a, double s) {
  Tape& t = *a.tape();
  Matrix c = a.value();
  for (double& v : c.values()) v += s;
  const std::size_t ia = a.id();
  return t.record("add_scalar", std::move(c), {ia}, [ia](Tape& tp, const Matrix& g) {
    Matrix& d = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) d.data()[i] += g.data()[i];
  });
}

Var add_row(Var a, Var row) {
  Tape& t = same_tape(a, row);
  const Matrix& r = row.value();
  if (r.rows() != 1 || r.cols() != a.cols()) throw InvalidArgument("add_row: row shape mismatch");
  Matrix c = a.value();
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j) c(i, j) += r(0, j);
  const std::size_t ia = a.id(), ir = row.id();
  const bool ga = t.requires_grad(a), gr = t.requires_grad(row);
  return t.record("add_row", std::move(c), {ia, ir}, [ia, ir, ga, gr](Tape& tp, const Matrix& g) {
    if (ga) {
      Matrix& d = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) d.data()[i] += g.data()[i];
    }
    if (gr) {
      Matrix& d = tp.grad_buffer(ir);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) d(0, j) += g(i, j);
    }
  });
}

Var mul_row(Var a, Var row) {
  Tape& t = same_tape(a, row);
  const Matrix& r = row.value();
  if (r.rows() != 1 || r.cols() != a.cols()) throw InvalidArgument("mul_row: row shape mismatch");
  Matrix c = a.value();
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j) c(i, j) *= r(0, j);
  const std::size_t ia = a.id(), ir = row.id();
  const bool ga = t.requires_grad(a), gr = t.requires_grad(row);
  return t.record("mul_row", std::move(c), {ia, ir}, [ia, ir, ga, gr](Tape& tp, const Matrix& g) {
    const Matrix& av = tp.value(ia);
    const Matrix& rv = tp.value(ir);
    if (ga) {
      Matrix& d = tp.grad_buffer(ia);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) d(i, j) += g(i, j) * rv(0, j);
    }
    if (gr) {
      Matrix& d = tp.grad_buffer(ir);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) d(0, j) += g(i, j) * av(i, j);
    }
  });
}

Var scale_rows(Var a, std::span<const double> factor) {
  Tape& t = *a.tape();
  if (factor.size() != a.rows()) throw InvalidArgument("scale_rows: factor length mismatch");
  Matrix c = a.value();
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (double& v : c.row(i)) v *= factor[i];
  const std::size_t ia = a.id();
  std::vector<double> f(factor.begin(), factor.end());
  return t.record("scale_rows", std::move(c), {ia}, [ia, f = std::move(f)](Tape& tp, const Matrix& g) {
    Matrix& d = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) d(i, j) += g(i, j) * f[i];
  });
}

Var sigmoid(Var a) {
  return unary("sigmoid", a, sigmoid_scalar, [](double, double y) { return y * (1.0 - y); });
}

Var swish(Var a) {
  return unary(
      "swish", a, [](double x) { return x * sigmoid_scalar(x); },
      [](double x, double) {
        const double s = sigmoid_scalar(x);
        return s + x * s * (1.0 - s);
      });
}

Var tanh(Var a) {
  return unary("tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var softplus(Var a) {
  return unary(
      "softplus", a, [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
      [](double x, double) { return sigmoid_scalar(x); });
}

Var exp(Var a) {
  return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var sqrt(Var a) {
  return unary("sqrt", a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Var square(Var a) {
  return unary("square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw InvalidArgument("concat_cols: no inputs");
  Tape& t = *parts.front().tape();
  const std::size_t rows = parts.front().rows();
  std::size_t cols = 0;
  std::vector<std::size_t> ids, widths;
  for (const Var& p : parts) {
    if (p.tape() != &t || p.rows() != rows) throw InvalidArgument("concat_cols: row mismatch");
    ids.push_back(p.id());
    widths.push_back(p.cols());
    cols += p.cols();
  }
  Matrix c(rows, cols);
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Matrix& v = p.value();
    for (std::size_t i = 0; i < rows; ++i) std::copy(v.row(i).begin(), v.row(i).end(), c.row(i).begin() + off);
    off += v.cols();
  }
  std::vector<bool> needs;
  for (const Var& p : parts) needs.push_back(t.requires_grad(p));
  return t.record("concat_cols", std::move(c), ids, [ids, widths, needs](Tape& tp, const Matrix& g) {
    std::size_t o = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (needs[k]) {
        Matrix& d = tp.grad_buffer(ids[k]);
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < widths[k]; ++j) d(i, j) += g(i, o + j);
      }
      o += widths[k];
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw InvalidArgument("concat_rows: no inputs");
  Tape& t = *parts.front().tape();
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  std::vector<std::size_t> ids, heights;
  for (const Var& p : parts) {
    if (p.tape() != &t || p.cols() != cols) throw InvalidArgument("concat_rows: column mismatch");
    ids.push_back(p.id());
    heights.push_back(p.rows());
    rows += p.rows();
  }
  Matrix c(rows, cols);
  std::size_t off = 0;
  for (const Var& p : parts) {
    std::copy(p.value().values().begin(), p.value().values().end(), c.data() + off * cols);
    off += p.rows();
  }
  std::vector<bool> needs;
  for (const Var& p : parts) needs.push_back(t.requires_grad(p));
  return t.record("concat_rows", std::move(c), ids, [ids, heights, needs](Tape& tp, const Matrix& g) {
    std::size_t o = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (needs[k]) {
        Matrix& d = tp.grad_buffer(ids[k]);
        const double* src = g.data() + o * g.cols();
        for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] += src[i];
      }
      o += heights[k];
    }
  });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  Tape& t = *a.tape();
  Matrix c = a.value();
  c.reshape(rows, cols);
  const std::size_t ia = a.id();
  return t.record("reshape", std::move(c), {ia}, [ia](Tape& tp, const Matrix& g) {
    Matrix& d = tp.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) d.data()[i] += g.data()[i];
  });
}

Var mix_rows(Var a, const SparseMix& mix) {
  Tape& t = *a.tape();
  if (mix.in_rows != a.rows()) throw InvalidArgument("mix_rows: input row count mismatch");
  const std::size_t n = a.cols(), out_rows = mix.out_rows();
  const Matrix& x = a.value();
  Matrix c(out_rows, n);
#pragma omp parallel for if (out_rows * n > kParallelElems)
  for (std::size_t r = 0; r < out_rows; ++r) {
    double* cr = c.data() + r * n;
    for (std::size_t k = mix.offset[r]; k < mix.offset[r + 1]; ++k) {
      const double w = mix.weight[k];
      const double* xr = x.data() + mix.index[k] * n;
      for (std::size_t j = 0; j < n; ++j) cr[j] += w * xr[j];
    }
  }
  const std::size_t ia = a.id();
  auto shared = std::make_shared<SparseMix>(mix);
  return t.record("mix_rows", std::move(c), {ia}, [ia, shared](Tape& tp, const Matrix& g) {
    Matrix& d = tp.grad_buffer(ia);
    const SparseMix& m = *shared;
    const std::size_t cols = g.cols();
    for (std::size_t r = 0; r < m.out_rows(); ++r) {
      const double* gr = g.data() + r * cols;
      for (std::size_t k = m.offset[r]; k < m.offset[r + 1]; ++k) {
        const double w = m.weight[k];
        double* dr = d.data() + m.index[k] * cols;
        for (std::size_t j = 0; j < cols; ++j) dr[j] += w * gr[j];
      }
    }
  });
}

Var normalize_rows(Var a, double eps) {
  Tape& t = *a.tape();
  const Matrix& x = a.value();
  const std::size_t rows = x.rows(), n = x.cols();
  Matrix y(rows, n);
  std::vector<double> inv_std(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    double mu = 0.0;
    for (double v : x.row(i)) mu += v;
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x.row(i)) var += (v - mu) * (v - mu);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) y(i, j) = (x(i, j) - mu) * inv_std[i];
  }
  const std::size_t ia = a.id();
  const std::size_t io = t.size();
  return t.record("normalize_rows", std::move(y), {ia},
                  [ia, io, inv_std = std::move(inv_std)](Tape& tp, const Matrix& g) {
                    const Matrix& yv = tp.value(io);
                    Matrix& d = tp.grad_buffer(ia);
                    const std::size_t cols = g.cols();
                    for (std::size_t i = 0; i < g.rows(); ++i) {
                      double gm = 0.0, gy = 0.0;
                      for (std::size_t j = 0; j < cols; ++j) {
                        gm += g(i, j);
                        gy += g(i, j) * yv(i, j);
                      }
                      gm /= static_cast<double>(cols);
                      gy /= static_cast<double>(cols);
                      for (std::size_t j = 0; j < cols; ++j)
                        d(i, j) += inv_std[i] * (g(i, j) - gm - yv(i, j) * gy);
                    }
                  });
}

Var sum(Var a) {
  Tape& t = *a.tape();
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const std::size_t ia = a.id();
  return t.record("sum", Matrix(1, 1, s), {ia}, [ia](Tape& tp, const Matrix& g) {
    Matrix& d = tp.grad_buffer(ia);
    const double gv = g(0, 0);
    for (double& v : d.values()) v += gv;
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var attention(Var q, Var k, Var v, const AttentionSpec& spec, std::vector<double>* weights) {
  Tape& t = same_tape(q, k);
  if (v.tape() != &t) throw InvalidArgument("attention: operands live on different tapes");
  const std::size_t d = q.cols();
  const std::size_t heads = spec.heads;
  if (heads == 0 || d % heads != 0) throw InvalidArgument("attention: dimension not divisible by heads");
  if (k.cols() != d || v.cols() != d) throw InvalidArgument("attention: key/value dimension mismatch");
  if (spec.kv_repeat == 0 || spec.groups % spec.kv_repeat != 0)
    throw InvalidArgument("attention: groups not divisible by kv_repeat");
  const std::size_t kv_groups = spec.groups / spec.kv_repeat;
  if (q.rows() != spec.groups * spec.q_len || k.rows() != kv_groups * spec.kv_len ||
      v.rows() != kv_groups * spec.kv_len)
    throw InvalidArgument("attention: row layout mismatch");
  if (spec.causal && spec.q_len != spec.kv_len) throw InvalidArgument("attention: causal needs square blocks");
  if (spec.q_len == 0 || spec.kv_len == 0) throw InvalidArgument("attention: empty sequence");

  const std::size_t dh = d / heads, nq = spec.q_len, nk = spec.kv_len;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  auto probs = std::make_shared<std::vector<double>>(spec.groups * heads * nq * nk, 0.0);
  const Matrix& qv = q.value();
  const Matrix& kv = k.value();
  const Matrix& vv = v.value();
  Matrix out(q.rows(), d);
  const std::size_t pairs = spec.groups * heads;
#pragma omp parallel for if (pairs * nq * nk * dh > kParallelElems)
  for (std::size_t gh = 0; gh < pairs; ++gh) {
    const std::size_t g = gh / heads, h = gh % heads;
    const std::size_t kg = g / spec.kv_repeat;
    double* p = probs->data() + gh * nq * nk;
    for (std::size_t i = 0; i < nq; ++i) {
      const double* qi = qv.data() + (g * nq + i) * d + h * dh;
      const std::size_t limit = spec.causal ? i + 1 : nk;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < limit; ++j) {
        const double* kj = kv.data() + (kg * nk + j) * d + h * dh;
        double s = 0.0;
        for (std::size_t c = 0; c < dh; ++c) s += qi[c] * kj[c];
        s *= inv_sqrt;
        p[i * nk + j] = s;
        mx = std::max(mx, s);
      }
      double z = 0.0;
      for (std::size_t j = 0; j < limit; ++j) {
        p[i * nk + j] = std::exp(p[i * nk + j] - mx);
        z += p[i * nk + j];
      }
      for (std::size_t j = 0; j < limit; ++j) p[i * nk + j] /= z;
      double* oi = out.data() + (g * nq + i) * d + h * dh;
      for (std::size_t j = 0; j < limit; ++j) {
        const double pj = p[i * nk + j];
        const double* vj = vv.data() + (kg * nk + j) * d + h * dh;
        for (std::size_t c = 0; c < dh; ++c) oi[c] += pj * vj[c];
      }
    }
  }
  if (weights) *weights = *probs;

  const std::size_t iq = q.id(), ik = k.id(), iv = v.id();
  const bool gq = t.requires_grad(q), gk = t.requires_grad(k), gv = t.requires_grad(v);
  return t.record("attention", std::move(out), {iq, ik, iv},
                  [=](Tape& tp, const Matrix& g) {
                    const Matrix& Q = tp.value(iq);
                    const Matrix& K = tp.value(ik);
                    const Matrix& V = tp.value(iv);
                    Matrix* dQ = gq ? &tp.grad_buffer(iq) : nullptr;
                    Matrix* dK = gk ? &tp.grad_buffer(ik) : nullptr;
                    Matrix* dV = gv ? &tp.grad_buffer(iv) : nullptr;
                    const std::size_t kvp = kv_groups * heads;
                    // One task per (key group, head): writes to dK/dV stay
                    // private, and dQ rows of its query groups are disjoint.
#pragma omp parallel for if (pairs * nq * nk * dh > kParallelElems)
                    for (std::size_t kh = 0; kh < kvp; ++kh) {
                      const std::size_t kg = kh / heads, h = kh % heads;
                      std::vector<double> dp(nk);
                      for (std::size_t rep = 0; rep < spec.kv_repeat; ++rep) {
                        const std::size_t gq_idx = kg * spec.kv_repeat + rep;
                        const double* p = probs->data() + (gq_idx * heads + h) * nq * nk;
                        for (std::size_t i = 0; i < nq; ++i) {
                          const std::size_t qrow = gq_idx * nq + i;
                          const double* gi = g.data() + qrow * d + h * dh;
                          const std::size_t limit = spec.causal ? i + 1 : nk;
                          double dot = 0.0;
                          for (std::size_t j = 0; j < limit; ++j) {
                            const double* vj = V.data() + (kg * nk + j) * d + h * dh;
                            double s = 0.0;
                            for (std::size_t c = 0; c < dh; ++c) s += gi[c] * vj[c];
                            dp[j] = s;
                            dot += s * p[i * nk + j];
                            if (dV) {
                              double* dvj = dV->data() + (kg * nk + j) * d + h * dh;
                              const double pj = p[i * nk + j];
                              for (std::size_t c = 0; c < dh; ++c) dvj[c] += pj * gi[c];
                            }
                          }
                          const double* qi = Q.data() + qrow * d + h * dh;
                          for (std::size_t j = 0; j < limit; ++j) {
                            const double ds = p[i * nk + j] * (dp[j] - dot) * inv_sqrt;
                            if (ds == 0.0) continue;
                            const double* kj = K.data() + (kg * nk + j) * d + h * dh;
                            if (dQ) {
                              double* dqi = dQ->data() + qrow * d + h * dh;
                              for (std::size_t c = 0; c < dh; ++c) dqi[c] += ds * kj[c];
                            }
                            if (dK) {
                              double* dkj = dK->data() + (kg * nk + j) * d + h * dh;
                              for (std::size_t c = 0; c < dh; ++c) dkj[c] += ds * qi[c];
                            }
                          }
                        }
                      }
                    }
                  });
}

}  // namespace ufo::ops
